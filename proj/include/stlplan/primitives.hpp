#pragma once

// Motion-primitive classes, the policy library, and the kinematic robot
// models that stand in for learned tracking controllers.

#include "stlplan/geometry.hpp"
#include "stlplan/trajectory.hpp"

#include <array>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stlplan {

enum class PrimitiveKind { Clockwise, Counterclockwise, Forward, Backward };

struct PrimitiveClass {
  int id;
  PrimitiveKind kind;
};

inline constexpr std::array<PrimitiveClass, 4> kPrimitiveClasses{{
    {0, PrimitiveKind::Clockwise},
    {1, PrimitiveKind::Counterclockwise},
    {2, PrimitiveKind::Forward},
    {3, PrimitiveKind::Backward},
}};

std::string_view to_string(PrimitiveKind kind);

inline bool is_rotation(PrimitiveKind kind) {
  return kind == PrimitiveKind::Clockwise || kind == PrimitiveKind::Counterclockwise;
}

/// A controller that tracks one primitive at a fixed velocity. `velocity` is
/// a signed linear speed (m/s) for Forward/Backward and a signed angular
/// rate (rad/s) for the rotations; Clockwise and Backward are negative.
struct Policy {
  int id = 0;
  PrimitiveKind kind = PrimitiveKind::Forward;
  double velocity = 0.0;
  std::string model;

  bool rotates() const { return is_rotation(kind); }
  std::string name() const;
};

struct Pose {
  Vec2 position;
  double heading = 0.0;
};

/// Additive zero-mean Gaussian disturbance, expressed as diffusion
/// intensities: per-step std-dev is `std * sqrt(dt)`, so the accumulated
/// spread over a rollout does not depend on the integration step.
struct NoiseSpec {
  double position_std = 0.0;  ///< m / sqrt(s), per axis
  double heading_std = 0.0;   ///< rad / sqrt(s)

  bool enabled() const { return position_std > 0.0 || heading_std > 0.0; }
};

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Velocity-limited unicycle kinematics: translation along the heading or
/// rotation in place, never both at once.
class RobotModel {
 public:
  static constexpr double kIntegrationStep = 1e-3;
  static constexpr std::string_view kDiffDrive = "diff-drive";
  static constexpr std::string_view kQuadrupedProxy = "quadruped-proxy";

  RobotModel(std::string id, double max_linear, double max_angular);

  /// Bundled models: "diff-drive" (0.22 m/s, 2.84 rad/s) and
  /// "quadruped-proxy" (0.4 m/s, 1.5 rad/s).
  static RobotModel by_id(std::string_view id);

  const std::string& id() const { return id_; }
  double max_linear() const { return max_linear_; }
  double max_angular() const { return max_angular_; }

  /// Throws ModelError if the policy belongs to another model or exceeds
  /// this model's limits.
  void check(const Policy& policy) const;

  /// Closed-form noiseless end pose.
  Pose step(const Pose& start, const Policy& policy, double duration) const;

  /// Simulated motion starting at `start_time`. Noiseless rollouts return the
  /// two end samples; noisy ones integrate at kIntegrationStep and record a
  /// sample every `record_every` seconds plus the final one.
  TimedTrajectory rollout(const Pose& start, double start_time, const Policy& policy,
                          double duration, const NoiseSpec& noise = {},
                          std::mt19937_64* rng = nullptr, double record_every = 0.05) const;

 private:
  std::string id_;
  double max_linear_;
  double max_angular_;
};

/// `levels` evenly spaced magnitudes (k * max / levels, k = 1..levels) for
/// each of the four classes. Ids are assigned in class order, then by
/// increasing magnitude.
std::vector<Policy> policy_library(const RobotModel& model, int levels);

}  // namespace stlplan
