#pragma once

#include "stlplan/executor.hpp"
#include "stlplan/report.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace stlplan::cli {

enum ExitCode { kSatisfied = 0, kFailure = 1, kInputError = 2 };

/// Scenario plus everything derived from it before planning.
struct Pipeline {
  Scenario world;
  RobotModel model;
  std::vector<Policy> policies;
  EstimatorSet estimators;
  DistanceRange range;

  ExecutionContext context() const { return {world, model, policies, estimators, range}; }
};

/// Estimator cache path for a scenario: `<scenario>.estimators`.
std::filesystem::path estimator_cache(const std::filesystem::path& scenario);

Pipeline prepare(const std::filesystem::path& scenario, bool refit_estimators);

/// Writes plan.csv, plan.svg and report.txt into `out`.
RunReport cmd_plan(const Pipeline& p, std::uint64_t seed, const std::filesystem::path& out,
                   std::optional<int> iterations = std::nullopt);

struct ExecuteRequest {
  std::optional<std::filesystem::path> plan_csv;  ///< plan freshly when absent
  std::uint64_t seed = 1;
  std::optional<int> iterations;
  ExecutionConfig config;
};

/// Writes plan.csv, trace.csv, trace.svg and report.txt into `out`.
RunReport cmd_execute(const Pipeline& p, const ExecuteRequest& request, const std::filesystem::path& out);

/// Robustness of `formula` over the trace at its first sample.
double cmd_check(const std::string& formula, const std::filesystem::path& trace, const stl::EvalOptions& options);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stlplan::cli
