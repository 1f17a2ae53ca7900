#include "stlplan/executor.hpp"

#include <cmath>

namespace stlplan {

namespace {

// Below this the realized pose is treated as on-plan and the planned legs
// are replayed verbatim.
constexpr double kOnPlanTol = 1e-6;

class Execution {
 public:
  Execution(const ExecutionContext& ctx, const ExecutionConfig& config)
      : ctx_(ctx), config_(config), table_(ctx.policies, ctx.estimators), rng_(config.seed) {}

  ExecutionTrace run(const PlanResult& initial) {
    if (initial.nodes.empty()) throw std::invalid_argument("plan has no nodes");
    trace_.plans.push_back(initial);
    const PlanNode& root = initial.nodes.front();
    trace_.realized.append({root.position, root.heading, root.time});
    pose_ = {root.position, root.heading};

    std::size_t next = 1;
    for (;;) {
      const PlanResult& current = trace_.plans.back();
      const PlanNode& expected = current.nodes[next - 1];
      const double pos_err = distance(pose_.position, expected.position);
      const double time_err = std::abs(now() - expected.time);
      if (pos_err > config_.eps_track || time_err > config_.eps_time) {
        replan();
        next = 1;
        continue;
      }
      if (next >= current.nodes.size()) break;

      const PlanNode& target = current.nodes[next];
      std::vector<Segment> legs = target.incoming;
      if (pos_err > kOnPlanTol || std::abs(wrap_angle(pose_.heading - expected.heading)) > kOnPlanTol) {
        legs = correction(target);
      }
      for (const auto& seg : legs) apply(seg);
      ++arrivals_;
      disturb();
      ++next;
    }

    finish();
    return std::move(trace_);
  }

 private:
  double now() const { return trace_.realized.end_time(); }

  void event(EventKind kind) {
    trace_.events.push_back({now(), kind, trace_.realized.size() - 1});
  }

  void apply(const Segment& seg) {
    event(EventKind::SegmentStart);
    const TimedTrajectory part = ctx_.model.rollout(pose_, now(), seg.policy, seg.duration, config_.noise,
                                                    &rng_, config_.record_every);
    trace_.realized.splice(part);
    pose_ = {part.back().position, part.back().heading};
    event(EventKind::SegmentEnd);
  }

  // Fresh turn-and-drive legs from the realized pose to the next node,
  // preferring the planned policies.
  std::vector<Segment> correction(const PlanNode& target) {
    const Sample from{pose_.position, pose_.heading, now()};
    try {
      EdgeMotion m = sample_policies(table_, from, target.position, ctx_.world.planner.theta_tol, rng_,
                                     target.incoming);
      if (m.segments.empty()) return target.incoming;
      ++trace_.corrections;
      return m.segments;
    } catch (const RangeError&) {
      return target.incoming;
    }
  }

  void disturb() {
    for (const auto& d : config_.disturbances) {
      if (d.node_index != arrivals_) continue;
      const Vec2 left{-std::sin(pose_.heading), std::cos(pose_.heading)};
      pose_.position = pose_.position + left * d.lateral_offset;
      trace_.realized.append({pose_.position, pose_.heading, now() + d.duration});
    }
  }

  void replan() {
    event(EventKind::DeviationDetected);
    if (trace_.replans >= config_.max_replans) {
      finish_quietly();
      throw ExecutionFailure("replanning budget exhausted after " + std::to_string(trace_.replans) + " replans",
                             std::move(trace_));
    }
    event(EventKind::ReplanTriggered);
    ++trace_.replans;
    PlanOptions opts;
    opts.seed = trace_.plans.front().seed + 7919ULL * static_cast<std::uint64_t>(trace_.replans);
    opts.history = trace_.realized;
    try {
      trace_.plans.push_back(plan(ctx_.world, ctx_.policies, ctx_.estimators, ctx_.range, opts));
    } catch (const PlanningFailure& e) {
      finish_quietly();
      throw ExecutionFailure(std::string("replanning failed: ") + e.what(), std::move(trace_));
    }
    event(EventKind::ReplanDone);
  }

  TimedTrajectory held() const {
    return trace_.realized.held_until(stl::horizon(*ctx_.world.formula));
  }

  void finish() {
    const TimedTrajectory sig = held();
    trace_.robustness = stl::robustness(*ctx_.world.formula, sig, sig.start_time(), ctx_.world.eval_options());
  }

  void finish_quietly() {
    try {
      finish();
    } catch (const std::exception&) {
      trace_.robustness = -ctx_.world.rho_opt();
    }
  }

  const ExecutionContext& ctx_;
  const ExecutionConfig& config_;
  PolicyTable table_;
  Rng rng_;
  ExecutionTrace trace_;
  Pose pose_;
  int arrivals_ = 0;
};

}  // namespace

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::SegmentStart: return "segment_start";
    case EventKind::SegmentEnd: return "segment_end";
    case EventKind::DeviationDetected: return "deviation_detected";
    case EventKind::ReplanTriggered: return "replan_triggered";
    case EventKind::ReplanDone: return "replan_done";
  }
  return "?";
}

ExecutionTrace execute(const PlanResult& plan, const ExecutionContext& ctx, const ExecutionConfig& config) {
  return Execution(ctx, config).run(plan);
}

}  // namespace stlplan
