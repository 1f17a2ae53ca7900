#pragma once

// Workspace, disc obstacles (static or timed), scenario description, and
// space-time collision checks for planner edges.

#include "stlplan/geometry.hpp"
#include "stlplan/primitives.hpp"
#include "stlplan/stl.hpp"
#include "stlplan/trajectory.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stlplan {

struct Workspace {
  Vec2 lower;
  Vec2 upper{1.0, 1.0};

  bool contains(Vec2 p) const {
    return p.x >= lower.x && p.x <= upper.x && p.y >= lower.y && p.y <= upper.y;
  }
  double diagonal() const { return distance(lower, upper); }
};

struct Obstacle {
  Vec2 center;
  double radius = 0.0;
  std::optional<stl::TimeInterval> active;  ///< absent: always present

  bool active_at(double t) const { return !active || (t >= active->lo && t <= active->hi); }
  bool always_active() const { return !active.has_value(); }
};

/// Which nodes rewiring considers: everything within [d_min, d_max], or
/// the shrinking RRT* ball gamma * sqrt(log n / n) capped at d_max.
enum class NearPolicy { Range, Shrinking };

struct PlannerParams {
  int max_iterations = 3000;
  std::uint64_t seed = 1;
  double dt_eval = 0.05;
  double rho_opt = 0.0;          ///< <= 0 selects the workspace diagonal
  double collision_step = 0.02;  ///< arc-length spacing of edge checks (m)
  double theta_tol = 0.02;       ///< heading changes below this are not turned (rad)
  NearPolicy near = NearPolicy::Range;
};

struct StartState {
  Vec2 position;
  double heading = 0.0;
  double time = 0.0;
};

struct Scenario {
  std::string id;
  Workspace workspace;
  std::vector<Obstacle> obstacles;
  stl::FormulaPtr formula;
  StartState start;
  std::string robot_model{RobotModel::kDiffDrive};
  int policy_levels = 3;
  double robot_radius = 0.0;  ///< inflates every obstacle radius
  PlannerParams planner;

  double rho_opt() const {
    return planner.rho_opt > 0.0 ? planner.rho_opt : workspace.diagonal();
  }
  stl::EvalOptions eval_options() const { return {planner.dt_eval, rho_opt()}; }

  /// Throws ScenarioError when invariants do not hold.
  void validate() const;
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses the sectioned key-value scenario format:
///
///   [workspace]  lower = x, y        upper = x, y
///   [obstacle.N] center = x, y       radius = r     active = t1, t2   (optional)
///   [start]      position = x, y     heading = rad  time = s
///   [robot]      model = diff-drive  levels = 3     radius = 0
///   [planner]    max_iterations, seed, dt_eval, rho_opt, collision_step, theta_tol
///   [formula]    STL text; every non-comment line is joined with a space
///
/// `#` starts a comment. The scenario id defaults to `name`.
Scenario parse_scenario(std::string_view text, std::string name = "scenario");
Scenario load_scenario(const std::filesystem::path& path);

/// Workspace containment plus clearance from every obstacle active at t.
bool point_free(Vec2 p, double t, const Scenario& world);

/// One leg of an edge: apply `policy` for `duration` seconds.
struct Segment {
  Policy policy;
  double duration = 0.0;
};

/// Noiseless end pose of a segment sequence.
Pose simulate_segments(const RobotModel& model, const Pose& start, std::span<const Segment> segments);

/// Checks point_free along the motion of `segments` from `parent`. Check
/// instants: arc-length multiples of `step` from each translation's start,
/// every segment end, and every timed-obstacle window boundary that falls
/// inside a segment. Rotations hold position.
bool edge_free(const Sample& parent, std::span<const Segment> segments, const Scenario& world,
               double step);
inline bool edge_free(const Sample& parent, std::span<const Segment> segments,
                      const Scenario& world) {
  return edge_free(parent, segments, world, world.planner.collision_step);
}

}  // namespace stlplan
