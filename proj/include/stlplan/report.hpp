#pragma once

// CSV and SVG outputs for plans and execution traces.

#include "stlplan/executor.hpp"
#include "stlplan/planner.hpp"
#include "stlplan/world.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>

namespace stlplan {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// node_index,x,y,heading,t,incoming_policy_ids,incoming_durations
/// Lists are ';'-separated; numbers use fixed 9-decimal notation.
void write_plan_csv(std::ostream& os, const PlanResult& plan);

/// Inverse of write_plan_csv; policy ids are resolved against `policies`.
PlanResult read_plan_csv(std::istream& is, std::span<const Policy> policies);

/// t,x,y,heading,event: one row per realized sample; `event` lists the
/// ';'-separated events recorded at that sample.
void write_trace_csv(std::ostream& os, const ExecutionTrace& trace);

/// Reads a trace CSV (or a plan CSV, detected from its header) as a
/// complete trajectory.
TimedTrajectory read_trajectory_csv(std::istream& is);

struct SvgLayers {
  const PlanResult* plan = nullptr;            ///< drawn orange with node times
  const TimedTrajectory* realized = nullptr;   ///< drawn blue
};

/// Workspace, obstacles (timed ones labelled with their window), goal
/// balls from the formula, and the requested trajectories.
void write_svg(std::ostream& os, const Scenario& world, const SvgLayers& layers);

struct RunReport {
  std::string scenario_id;
  std::uint64_t seed = 0;
  double planning_seconds = 0.0;
  int iterations = 0;
  std::optional<double> plan_robustness;
  std::optional<double> executed_robustness;
  int replans = 0;
  std::vector<std::filesystem::path> outputs;
  std::string error;
};

void write_report(std::ostream& os, const RunReport& report);

}  // namespace stlplan
