#include "support.hpp"

#include "stlplan/cli.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace stlplan;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "stlplan");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("stlplan_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

fs::path write_trace(const fs::path& p, const TimedTrajectory& traj) {
  ExecutionTrace t;
  t.realized = traj;
  std::ofstream os(p);
  write_trace_csv(os, t);
  return p;
}

const char* kBoxWorld = "G[0,200](box(x,(0,0),(3,3))) & F[0,200](ball(x,(1.5,1.5)) <= 1.2)";

}  // namespace

TEST_CASE("check prints robustness") {
  const fs::path dir = scratch("check");
  const auto trace = write_trace(dir / "t.csv", TimedTrajectory({{{1, 1}, 0, 0}, {{2, 1}, 0, 5}}));

  auto r = run({"check", "--formula", "true", "--trace", trace.string()});
  CHECK(r.code == cli::kSatisfied);
  CHECK(r.out == "1.000000000\n");

  r = run({"check", "--formula", "true", "--trace", trace.string(), "--rho-opt", "2.5"});
  CHECK(r.out == "2.500000000\n");

  r = run({"check", "--formula", "F[0,5](ball(x,(2,1)) <= 0.5)", "--trace", trace.string()});
  CHECK(r.code == cli::kSatisfied);
  CHECK(std::stod(r.out) == doctest::Approx(0.5));

  r = run({"check", "--formula", "G[0,9](box(x,(0,0),(3,3)))", "--trace", trace.string()});
  CHECK(r.code == cli::kInputError);
  CHECK(r.err.find("evaluation error") != std::string::npos);

  r = run({"check", "--formula", "F[0,5](", "--trace", trace.string()});
  CHECK(r.code == cli::kInputError);
  CHECK(r.err.find("formula error") != std::string::npos);
}

TEST_CASE("check on the phi1 reference trajectory") {
  const fs::path dir = scratch("phi1ref");
  const fs::path scn = fs::path(STLPLAN_SCENARIO_DIR) / "phi1.scn";
  const Scenario world = load_scenario(scn);
  const auto trace = write_trace(dir / "trace.csv", testing::phi1_reference());
  const auto r = run({"check", "--formula", stl::to_string(*world.formula), "--trace", trace.string(),
                      "--scenario", scn.string()});
  REQUIRE(r.code == cli::kSatisfied);
  CHECK(std::stod(r.out) >= 0.0);
}

TEST_CASE("usage errors") {
  CHECK(run({}).code == cli::kInputError);
  CHECK(run({"plan"}).code == cli::kInputError);
  CHECK(run({"plan", "--scenario", "/nonexistent.scn"}).code == cli::kInputError);
  const fs::path dir = scratch("usage");
  const auto bad = write_file(dir / "bad.scn", "[workspace]\nlower = 0, 0\n");
  const auto r = run({"plan", "--scenario", bad.string(), "--out", (dir / "o").string()});
  CHECK(r.code == cli::kInputError);
  CHECK_FALSE(r.err.empty());
  CHECK(run({"--help"}).code == cli::kSatisfied);
}

TEST_CASE("plan writes outputs and is reproducible") {
  const fs::path dir = scratch("plan");
  const auto scn = write_file(dir / "box.scn", testing::open_world(kBoxWorld, 200));
  const auto a = run({"plan", "--scenario", scn.string(), "--seed", "4", "--out", (dir / "a").string()});
  const auto b = run({"plan", "--scenario", scn.string(), "--seed", "4", "--out", (dir / "b").string()});
  REQUIRE(a.code == cli::kSatisfied);
  CHECK(a.out.find("seed 4: robustness") == 0);
  CHECK(fs::exists(dir / "a" / "plan.svg"));
  CHECK(fs::exists(dir / "a" / "report.txt"));
  CHECK(fs::exists(cli::estimator_cache(scn)));
  CHECK(slurp(dir / "a" / "plan.csv") == slurp(dir / "b" / "plan.csv"));

  // plan CSV round trip
  const auto lib = policy_library(RobotModel::by_id(RobotModel::kDiffDrive), 3);
  std::ifstream is(dir / "a" / "plan.csv");
  const PlanResult back = read_plan_csv(is, lib);
  std::ostringstream os;
  write_plan_csv(os, back);
  CHECK(os.str() == slurp(dir / "a" / "plan.csv"));

  const auto many = run({"plan", "--scenario", scn.string(), "--runs", "2", "--out", (dir / "m").string()});
  CHECK(fs::exists(dir / "m" / "seed_1" / "plan.csv"));
  CHECK(fs::exists(dir / "m" / "seed_2" / "report.txt"));
  CHECK(many.out.find("seed 2:") != std::string::npos);
}

TEST_CASE("unsatisfiable plan exits with failure") {
  const fs::path dir = scratch("fail");
  const auto scn = write_file(dir / "far.scn", testing::open_world("F[0,5](ball(x,(2.9,2.9)) <= 0.05)", 60));
  const auto r = run({"plan", "--scenario", scn.string(), "--out", (dir / "o").string()});
  CHECK(r.code == cli::kFailure);
  CHECK(r.out.find("not satisfied") != std::string::npos);
  CHECK(slurp(dir / "o" / "report.txt").find("error: no satisfying") != std::string::npos);
}

TEST_CASE("execute from a stored plan") {
  const fs::path dir = scratch("exec");
  const auto scn = write_file(dir / "box.scn", testing::open_world(kBoxWorld, 200));
  REQUIRE(run({"plan", "--scenario", scn.string(), "--seed", "2", "--out", (dir / "p").string()}).code == 0);
  const auto r = run({"execute", "--scenario", scn.string(), "--plan", (dir / "p" / "plan.csv").string(), "--out",
                      (dir / "e").string()});
  CHECK(r.code == cli::kSatisfied);
  const std::string trace = slurp(dir / "e" / "trace.csv");
  CHECK(trace.rfind("t,x,y,heading,event\n", 0) == 0);
  CHECK(trace.find("segment_start") != std::string::npos);
  CHECK(fs::exists(dir / "e" / "trace.svg"));

  // the realized trace re-checks to the reported robustness
  const auto report = slurp(dir / "e" / "report.txt");
  const auto pos = report.find("executed_robustness: ");
  REQUIRE(pos != std::string::npos);
  const double reported = std::stod(report.substr(pos + 21));
  std::ifstream is(dir / "e" / "trace.csv");
  const Scenario world = load_scenario(scn);
  const TimedTrajectory held = read_trajectory_csv(is).held_until(200.0);
  CHECK(stl::robustness(*world.formula, held, 0.0, world.eval_options()) == doctest::Approx(reported).epsilon(1e-6));
}
