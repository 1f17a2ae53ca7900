#include "stlplan/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace stlplan::cli {

namespace fs = std::filesystem;

namespace {

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write " + path.string());
  return os;
}

void write_report_file(const fs::path& out, RunReport& report) {
  const fs::path path = out / "report.txt";
  report.outputs.push_back(path);
  auto os = open_out(path);
  write_report(os, report);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fixed9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

}  // namespace

fs::path estimator_cache(const fs::path& scenario) {
  fs::path p = scenario;
  p += ".estimators";
  return p;
}

Pipeline prepare(const fs::path& scenario, bool refit_estimators) {
  Scenario world = load_scenario(scenario);
  RobotModel model = RobotModel::by_id(world.robot_model);
  std::vector<Policy> policies = policy_library(model, world.policy_levels);
  EstimatorSet estimators =
      load_or_fit_estimators(estimator_cache(scenario), model, policies, world.policy_levels, refit_estimators);
  const DistanceRange range = translation_range(policies, estimators);
  return {std::move(world), std::move(model), std::move(policies), std::move(estimators), range};
}

RunReport cmd_plan(const Pipeline& p, std::uint64_t seed, const fs::path& out, std::optional<int> iterations) {
  fs::create_directories(out);
  RunReport report;
  report.scenario_id = p.world.id;
  report.seed = seed;
  PlanOptions opts;
  opts.seed = seed;
  opts.max_iterations = iterations;
  const auto start = std::chrono::steady_clock::now();
  try {
    const PlanResult result = plan(p.world, p.policies, p.estimators, p.range, opts);
    report.planning_seconds = seconds_since(start);
    report.iterations = result.iterations;
    report.plan_robustness = result.robustness;

    const fs::path csv = out / "plan.csv";
    {
      auto os = open_out(csv);
      write_plan_csv(os, result);
    }
    const fs::path svg = out / "plan.svg";
    {
      auto os = open_out(svg);
      write_svg(os, p.world, {&result, nullptr});
    }
    report.outputs = {csv, svg};
  } catch (const PlanningFailure& e) {
    report.planning_seconds = seconds_since(start);
    report.iterations = iterations.value_or(p.world.planner.max_iterations);
    report.plan_robustness = e.best_robustness();
    report.error = e.what();
  }
  write_report_file(out, report);
  return report;
}

RunReport cmd_execute(const Pipeline& p, const ExecuteRequest& request, const fs::path& out) {
  fs::create_directories(out);
  RunReport report;
  report.scenario_id = p.world.id;
  report.seed = request.seed;

  PlanResult initial;
  if (request.plan_csv) {
    std::ifstream is(*request.plan_csv);
    if (!is) throw InputError("cannot read " + request.plan_csv->string());
    initial = read_plan_csv(is, p.policies);
    initial.seed = request.seed;
    const TimedTrajectory sig = initial.signal().held_until(stl::horizon(*p.world.formula));
    initial.robustness = stl::robustness(*p.world.formula, sig, sig.start_time(), p.world.eval_options());
  } else {
    PlanOptions opts;
    opts.seed = request.seed;
    opts.max_iterations = request.iterations;
    const auto start = std::chrono::steady_clock::now();
    try {
      initial = plan(p.world, p.policies, p.estimators, p.range, opts);
    } catch (const PlanningFailure& e) {
      report.planning_seconds = seconds_since(start);
      report.plan_robustness = e.best_robustness();
      report.error = e.what();
      write_report_file(out, report);
      return report;
    }
    report.planning_seconds = seconds_since(start);
    report.iterations = initial.iterations;
  }
  report.plan_robustness = initial.robustness;

  const fs::path plan_csv = out / "plan.csv";
  {
    auto os = open_out(plan_csv);
    write_plan_csv(os, initial);
  }

  ExecutionTrace trace;
  try {
    trace = execute(initial, p.context(), request.config);
  } catch (const ExecutionFailure& e) {
    trace = e.trace();
    report.error = e.what();
  }
  report.executed_robustness = trace.robustness;
  report.replans = trace.replans;

  const fs::path trace_csv = out / "trace.csv";
  {
    auto os = open_out(trace_csv);
    write_trace_csv(os, trace);
  }
  const fs::path svg = out / "trace.svg";
  {
    auto os = open_out(svg);
    write_svg(os, p.world, {&initial, &trace.realized});
  }
  report.outputs = {plan_csv, trace_csv, svg};
  write_report_file(out, report);
  return report;
}

double cmd_check(const std::string& formula, const fs::path& trace, const stl::EvalOptions& options) {
  const stl::FormulaPtr f = stl::parse_formula(formula);
  std::ifstream is(trace);
  if (!is) throw InputError("cannot read " + trace.string());
  const TimedTrajectory traj = read_trajectory_csv(is);
  return stl::robustness(*f, traj, traj.start_time(), options);
}

namespace {

struct Common {
  std::string scenario;
  std::uint64_t seed = 1;
  std::string out = "out";
  std::optional<int> iterations;
  int runs = 1;
  bool refit = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--scenario", c.scenario, "scenario file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--iterations", c.iterations, "planner iterations")->check(CLI::PositiveNumber);
  cmd->add_option("--runs", c.runs, "independent seeded runs (seed, seed+1, ...) on worker threads")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--refit-estimators", c.refit, "refit and rewrite the estimator cache");
}

// Runs `job(seed, dir)` for every run on a small thread pool and returns
// the reports in seed order.
template <typename Job>
std::vector<RunReport> fan_out(const Common& c, Job job) {
  std::vector<RunReport> reports(static_cast<std::size_t>(c.runs));
  std::vector<std::string> errors(reports.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < reports.size();) {
      const std::uint64_t seed = c.seed + i;
      const fs::path dir = c.runs == 1 ? fs::path(c.out) : fs::path(c.out) / ("seed_" + std::to_string(seed));
      try {
        reports[i] = job(seed, dir);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const std::size_t threads =
      std::min<std::size_t>(reports.size(), std::max(1u, std::thread::hardware_concurrency()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw InputError(e);
  }
  return reports;
}

int summarize(const std::vector<RunReport>& reports, bool executed, std::ostream& out, std::ostream& err) {
  int code = kSatisfied;
  for (const auto& r : reports) {
    const auto& rho = executed ? r.executed_robustness : r.plan_robustness;
    const bool ok = r.error.empty() && rho && *rho >= 0.0;
    out << "seed " << r.seed << ": robustness " << (rho ? fixed9(*rho) : std::string("none")) << " ("
        << (ok ? "satisfied" : "not satisfied") << ")\n";
    if (!r.error.empty()) err << "seed " << r.seed << ": " << r.error << '\n';
    if (!ok) code = kFailure;
  }
  return code;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"STL-constrained planning over motion-primitive policies"};
  app.require_subcommand(1);

  Common plan_args;
  auto* plan_cmd = app.add_subcommand("plan", "plan a trajectory for a scenario");
  add_common(plan_cmd, plan_args);

  Common exec_args;
  std::string plan_path;
  double noise_pos = 0.0;
  double noise_ang = 0.0;
  ExecutionConfig exec_cfg;
  std::optional<int> kick_node;
  double kick_offset = 0.3;
  auto* exec_cmd = app.add_subcommand("execute", "execute a plan in closed loop");
  add_common(exec_cmd, exec_args);
  exec_cmd->add_option("--plan", plan_path, "plan CSV (plans freshly when omitted)")->check(CLI::ExistingFile);
  exec_cmd->add_option("--noise-pos", noise_pos, "position noise, m/sqrt(s)")->check(CLI::NonNegativeNumber);
  exec_cmd->add_option("--noise-ang", noise_ang, "heading noise, rad/sqrt(s)")->check(CLI::NonNegativeNumber);
  exec_cmd->add_option("--eps-track", exec_cfg.eps_track, "position deviation threshold, m");
  exec_cmd->add_option("--eps-time", exec_cfg.eps_time, "time deviation threshold, s");
  exec_cmd->add_option("--max-replans", exec_cfg.max_replans, "replanning budget");
  exec_cmd->add_option("--kick-node", kick_node, "node index (root = 0) at which to push the robot sideways");
  exec_cmd->add_option("--kick-offset", kick_offset, "lateral push, m");

  std::string formula;
  std::string trace_path;
  std::string check_scenario;
  double rho_opt = 1.0;
  double dt_eval = 0.05;
  auto* check_cmd = app.add_subcommand("check", "robustness of a formula over a trace CSV");
  check_cmd->add_option("--formula", formula, "STL formula")->required();
  check_cmd->add_option("--trace", trace_path, "trace or plan CSV")->required()->check(CLI::ExistingFile);
  check_cmd->add_option("--rho-opt", rho_opt, "bound for vacuous truth")->check(CLI::PositiveNumber);
  check_cmd->add_option("--dt-eval", dt_eval, "evaluation grid step")->check(CLI::PositiveNumber);
  check_cmd->add_option("--scenario", check_scenario, "take --rho-opt and --dt-eval from a scenario")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSatisfied : kInputError;
  }

  try {
    if (*plan_cmd) {
      const Pipeline p = prepare(plan_args.scenario, plan_args.refit);
      const auto reports = fan_out(plan_args, [&](std::uint64_t seed, const fs::path& dir) {
        return cmd_plan(p, seed, dir, plan_args.iterations);
      });
      return summarize(reports, false, out, err);
    }
    if (*exec_cmd) {
      const Pipeline p = prepare(exec_args.scenario, exec_args.refit);
      ExecuteRequest base;
      if (!plan_path.empty()) base.plan_csv = plan_path;
      base.iterations = exec_args.iterations;
      base.config = exec_cfg;
      base.config.noise = {noise_pos, noise_ang};
      if (kick_node) base.config.disturbances.push_back({*kick_node, kick_offset, 0.1});
      const auto reports = fan_out(exec_args, [&](std::uint64_t seed, const fs::path& dir) {
        ExecuteRequest req = base;
        req.seed = seed;
        req.config.seed = seed;
        return cmd_execute(p, req, dir);
      });
      return summarize(reports, true, out, err);
    }
    stl::EvalOptions opts{dt_eval, rho_opt};
    if (!check_scenario.empty()) opts = load_scenario(check_scenario).eval_options();
    const double rho = cmd_check(formula, trace_path, opts);
    out << fixed9(rho) << '\n';
    return kSatisfied;
  } catch (const stl::ParseError& e) {
    err << "formula error: " << e.what() << '\n';
  } catch (const stl::EvaluationError& e) {
    err << "evaluation error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kInputError;
}

}  // namespace stlplan::cli
