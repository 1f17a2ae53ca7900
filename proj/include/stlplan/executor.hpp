#pragma once

// Simulated closed-loop execution of a plan: segments are applied on the
// (possibly noisy) robot model, deviations are checked at every node
// boundary, small ones are absorbed by re-steered legs towards the next node,
// and large ones trigger a replan rooted at the realized space-time state.

#include "stlplan/planner.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stlplan {

enum class EventKind { SegmentStart, SegmentEnd, DeviationDetected, ReplanTriggered, ReplanDone };

std::string_view to_string(EventKind kind);

struct ExecutionEvent {
  double time = 0.0;
  EventKind kind = EventKind::SegmentStart;
  std::size_t sample = 0;  ///< index of the realized sample it belongs to
};

/// Instantaneous-ish push sideways (left of the heading for positive
/// offsets), applied once on arrival at the node with the given index.
/// Arrivals are counted across replans; the root is node 0.
struct Disturbance {
  int node_index = 2;
  double lateral_offset = 0.3;  ///< m
  double duration = 0.1;        ///< s the push takes
};

struct ExecutionConfig {
  NoiseSpec noise;
  double eps_track = 0.1;  ///< m
  double eps_time = 1.0;   ///< s
  int max_replans = 3;
  std::uint64_t seed = 1;
  std::vector<Disturbance> disturbances;
  double record_every = 0.05;
};

struct ExecutionTrace {
  TimedTrajectory realized;
  std::vector<ExecutionEvent> events;
  std::vector<PlanResult> plans;  ///< initial plan followed by every replan
  double robustness = 0.0;        ///< of the realized trajectory, held to the horizon
  int replans = 0;
  int corrections = 0;
};

class ExecutionFailure : public std::runtime_error {
 public:
  ExecutionFailure(const std::string& what, ExecutionTrace trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const ExecutionTrace& trace() const { return trace_; }

 private:
  ExecutionTrace trace_;
};

/// Everything the replanner needs besides the realized history.
struct ExecutionContext {
  const Scenario& world;
  const RobotModel& model;
  std::span<const Policy> policies;
  const EstimatorSet& estimators;
  DistanceRange range;
};

/// Runs the plan to completion. Throws ExecutionFailure (carrying the trace
/// so far) when the replanning budget is exhausted or a replan fails.
ExecutionTrace execute(const PlanResult& plan, const ExecutionContext& ctx, const ExecutionConfig& config);

}  // namespace stlplan
