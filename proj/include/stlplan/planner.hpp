#pragma once

// Robustness-maximizing RRT* over space-time (W x T). Nodes carry arrival
// times assigned from reachability estimators; each edge stores the policy
// sequence that realizes it. Node cost is the running sum of negated prefix
// robustness along the root path.

#include "stlplan/primitives.hpp"
#include "stlplan/reach.hpp"
#include "stlplan/stl.hpp"
#include "stlplan/world.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace stlplan {

using Rng = std::mt19937_64;

struct TimedNode {
  int id = 0;
  Vec2 position;
  double heading = 0.0;  ///< direction of the incoming translation (root: start heading)
  double time = 0.0;
  int parent = -1;
  std::vector<Segment> incoming;
  std::vector<int> children;
  double cost = 0.0;
  double prefix_rho = 0.0;
  bool alive = true;

  Sample sample() const { return {position, heading, time}; }
};

/// Policy legs for one edge and where they take the robot.
struct EdgeMotion {
  std::vector<Segment> segments;
  Pose end;
  double arrival = 0.0;
  /// The legs land on the requested target (within 1e-6 m). False when a
  /// small turn was skipped.
  bool exact = true;
};

/// Policies split by role, with their estimators.
class PolicyTable {
 public:
  PolicyTable(std::span<const Policy> policies, const EstimatorSet& estimators);

  const std::vector<Policy>& forward() const { return forward_; }
  const std::vector<Policy>& counterclockwise() const { return ccw_; }
  const std::vector<Policy>& clockwise() const { return cw_; }
  const ReachEstimator& estimator(const Policy& p) const { return estimators_.at(p.id); }
  const EstimatorSet& estimators() const { return estimators_; }

 private:
  std::vector<Policy> forward_;
  std::vector<Policy> ccw_;
  std::vector<Policy> cw_;
  EstimatorSet estimators_;
};

/// Uniform sample of the workspace box outside always-active obstacles.
Vec2 sample_free(const Scenario& world, Rng& rng);

/// Live node closest to `point` in W (time ignored); lowest id on ties.
int nearest(std::span<const TimedNode> tree, Vec2 point);

/// Point on the ray from `from` towards `rnd` at distance
/// clamp(|rnd - from|, d_min, d_max). Returns `rnd` when the points coincide.
Vec2 steer(Vec2 rnd, Vec2 from, DistanceRange range);

/// Turn towards `target` then drive to it. The turn uses a random
/// rotational policy of the right sense whose range covers |dtheta|; turns
/// of at most theta_tol are skipped; turns too small for every policy
/// overshoot with the slowest policy and turn back with the slowest one of
/// the opposite sense. The drive uses a random forward policy. When `keep`
/// is given, its policies are reused if admissible.
EdgeMotion sample_policies(const PolicyTable& table, const Sample& parent, Vec2 target,
                           double theta_tol, Rng& rng, std::span<const Segment> keep = {});

/// Signal samples produced by an edge: one per segment end.
std::vector<Sample> edge_samples(const Sample& parent, std::span<const Segment> segments);

struct RewireEvent {
  int node = 0;
  int old_parent = -1;
  int new_parent = -1;
  double old_cost = 0.0;
  double new_cost = 0.0;
  std::vector<int> pruned;  ///< descendants removed after re-validation
};

class PlanTree;

struct PlannerObserver {
  std::function<void(const PlanTree&, const RewireEvent&)> on_rewire;
  std::function<void(const PlanTree&, int)> on_node_added;
};

struct PlanOptions {
  std::optional<std::uint64_t> seed;  ///< overrides scenario.planner.seed
  std::optional<int> max_iterations;  ///< overrides scenario.planner.max_iterations
  /// Realized history to splice in front of every candidate; its last
  /// sample becomes the root. Without it the root is the scenario start.
  std::optional<TimedTrajectory> history;
  PlannerObserver observer;
};

struct PlanNode {
  Vec2 position;
  double heading = 0.0;
  double time = 0.0;
  std::vector<Segment> incoming;
};

struct PlanResult {
  std::vector<PlanNode> nodes;  ///< root first
  double robustness = 0.0;      ///< of the history + plan signal, held to the horizon
  std::vector<Segment> schedule;
  int iterations = 0;
  std::uint64_t seed = 0;
  std::size_t tree_size = 0;

  /// Root-to-leaf signal including intermediate segment ends.
  TimedTrajectory signal() const;
};

class PlanningFailure : public std::runtime_error {
 public:
  PlanningFailure(const std::string& what, double best_robustness)
      : std::runtime_error(what), best_robustness_(best_robustness) {}
  double best_robustness() const { return best_robustness_; }

 private:
  double best_robustness_;
};

/// Tree state, exposed read-only to observers and tests.
class PlanTree {
 public:
  PlanTree(const Scenario& world, const stl::IncrementalMonitor& monitor,
           std::optional<TimedTrajectory> history);

  std::span<const TimedNode> nodes() const { return nodes_; }
  const TimedNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t alive_count() const;

  /// Root-to-node ids.
  std::vector<int> path(int id) const;
  bool is_ancestor(int ancestor, int id) const;

  /// History followed by the path signal. Incomplete unless `hold_until`
  /// is given, in which case the robot rests at the node until then.
  TimedTrajectory signal(int id, std::optional<double> hold_until = std::nullopt) const;

  /// Sum of -prefix_robustness over the path, recomputed with the batch
  /// evaluator.
  double cost_from_scratch(int id) const;

 private:
  friend class Planner;

  const Scenario& world_;
  const stl::IncrementalMonitor& monitor_;
  std::optional<TimedTrajectory> history_;
  std::vector<TimedNode> nodes_;
  std::vector<stl::IncrementalMonitor::State> states_;
};

/// Grows the tree for the configured number of iterations and returns the
/// highest-robustness satisfying root path with its policy schedule. Throws
/// PlanningFailure when no node path satisfies the formula.
PlanResult plan(const Scenario& world, std::span<const Policy> policies,
                const EstimatorSet& estimators, DistanceRange range, const PlanOptions& options = {});

}  // namespace stlplan
