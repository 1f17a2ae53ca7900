#include "stlplan/primitives.hpp"

#include <cmath>

namespace stlplan {

std::string_view to_string(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::Clockwise: return "cw";
    case PrimitiveKind::Counterclockwise: return "ccw";
    case PrimitiveKind::Forward: return "fwd";
    case PrimitiveKind::Backward: return "bwd";
  }
  return "?";
}

std::string Policy::name() const {
  return std::string(to_string(kind)) + "#" + std::to_string(id);
}

RobotModel::RobotModel(std::string id, double max_linear, double max_angular)
    : id_(std::move(id)), max_linear_(max_linear), max_angular_(max_angular) {
  if (!(max_linear > 0.0) || !(max_angular > 0.0)) {
    throw ModelError("robot model limits must be positive");
  }
}

RobotModel RobotModel::by_id(std::string_view id) {
  if (id == kDiffDrive) return RobotModel(std::string(id), 0.22, 2.84);
  if (id == kQuadrupedProxy) return RobotModel(std::string(id), 0.4, 1.5);
  throw ModelError("unknown robot model '" + std::string(id) + "'");
}

void RobotModel::check(const Policy& policy) const {
  if (policy.model != id_) {
    throw ModelError("policy " + policy.name() + " belongs to model '" + policy.model +
                     "', not '" + id_ + "'");
  }
  const double limit = policy.rotates() ? max_angular_ : max_linear_;
  if (!(std::abs(policy.velocity) <= limit) || policy.velocity == 0.0) {
    throw ModelError("policy " + policy.name() + " velocity out of range for model '" + id_ + "'");
  }
  const bool negative = policy.kind == PrimitiveKind::Clockwise ||
                        policy.kind == PrimitiveKind::Backward;
  if ((policy.velocity < 0.0) != negative) {
    throw ModelError("policy " + policy.name() + " velocity sign does not match its class");
  }
}

Pose RobotModel::step(const Pose& start, const Policy& policy, double duration) const {
  Pose end = start;
  if (policy.rotates()) {
    end.heading = start.heading + policy.velocity * duration;
  } else {
    end.position = start.position + unit_heading(start.heading) * (policy.velocity * duration);
  }
  return end;
}

TimedTrajectory RobotModel::rollout(const Pose& start, double start_time, const Policy& policy,
                                    double duration, const NoiseSpec& noise,
                                    std::mt19937_64* rng, double record_every) const {
  check(policy);
  if (!(duration > 0.0)) throw ModelError("rollout duration must be positive");

  TimedTrajectory out;
  out.append({start.position, start.heading, start_time});
  if (!noise.enabled()) {
    const Pose end = step(start, policy, duration);
    out.append({end.position, end.heading, start_time + duration});
    return out;
  }
  if (rng == nullptr) throw ModelError("noisy rollout requires a random generator");

  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto steps = static_cast<long>(std::ceil(duration / kIntegrationStep - 1e-9));
  Pose pose = start;
  double elapsed = 0.0;
  double last_recorded = 0.0;
  for (long k = 0; k < steps; ++k) {
    const double dt = (k + 1 == steps) ? duration - elapsed : kIntegrationStep;
    pose = step(pose, policy, dt);
    const double sd = std::sqrt(dt);
    pose.position.x += noise.position_std * sd * gauss(*rng);
    pose.position.y += noise.position_std * sd * gauss(*rng);
    pose.heading += noise.heading_std * sd * gauss(*rng);
    elapsed = (k + 1 == steps) ? duration : elapsed + dt;
    if (k + 1 == steps || elapsed - last_recorded >= record_every - 1e-12) {
      out.append({pose.position, pose.heading, start_time + elapsed});
      last_recorded = elapsed;
    }
  }
  return out;
}

std::vector<Policy> policy_library(const RobotModel& model, int levels) {
  if (levels < 1) throw ModelError("policy levels must be >= 1");
  std::vector<Policy> out;
  int next_id = 0;
  for (const auto& cls : kPrimitiveClasses) {
    const double max = is_rotation(cls.kind) ? model.max_angular() : model.max_linear();
    const double sign =
        (cls.kind == PrimitiveKind::Clockwise || cls.kind == PrimitiveKind::Backward) ? -1.0 : 1.0;
    for (int k = 1; k <= levels; ++k) {
      const double magnitude = (k == levels) ? max : max * k / levels;
      out.push_back({next_id++, cls.kind, sign * magnitude, model.id()});
    }
  }
  return out;
}

}  // namespace stlplan
