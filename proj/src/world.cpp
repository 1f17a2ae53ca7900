#include "stlplan/world.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace stlplan {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<double> numbers(const std::string& value, const std::string& where) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    double v = 0.0;
    auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
      throw ScenarioError(where + ": expected number, got '" + t + "'");
    }
    out.push_back(v);
  }
  return out;
}

double scalar(const std::string& value, const std::string& where) {
  auto v = numbers(value, where);
  if (v.size() != 1) throw ScenarioError(where + ": expected a single number");
  return v[0];
}

Vec2 point(const std::string& value, const std::string& where) {
  auto v = numbers(value, where);
  if (v.size() != 2) throw ScenarioError(where + ": expected 'x, y'");
  return {v[0], v[1]};
}

void point_on_segment_times(double t0, double t1, const Scenario& world, std::vector<double>& out) {
  for (const auto& o : world.obstacles) {
    if (!o.active) continue;
    for (double b : {o.active->lo, o.active->hi}) {
      if (b > t0 && b < t1) out.push_back(b);
    }
  }
}

}  // namespace

void Scenario::validate() const {
  if (!(workspace.lower.x < workspace.upper.x && workspace.lower.y < workspace.upper.y)) {
    throw ScenarioError("workspace lower corner must be below upper corner");
  }
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const auto& o = obstacles[i];
    if (!(o.radius > 0.0)) throw ScenarioError("obstacle " + std::to_string(i) + ": radius must be > 0");
    if (o.active && !(o.active->lo < o.active->hi)) {
      throw ScenarioError("obstacle " + std::to_string(i) + ": active window needs t1 < t2");
    }
  }
  if (!workspace.contains(start.position)) throw ScenarioError("start position outside workspace");
  if (start.time < 0.0) throw ScenarioError("start time must be >= 0");
  if (!formula) throw ScenarioError("missing [formula]");
  if (policy_levels < 1) throw ScenarioError("robot levels must be >= 1");
  if (robot_radius < 0.0) throw ScenarioError("robot radius must be >= 0");
  if (planner.max_iterations < 0) throw ScenarioError("max_iterations must be >= 0");
  if (!(planner.dt_eval > 0.0) || !(planner.collision_step > 0.0)) {
    throw ScenarioError("dt_eval and collision_step must be positive");
  }
}

Scenario parse_scenario(std::string_view text, std::string name) {
  Scenario sc;
  sc.id = std::move(name);
  std::map<std::string, Obstacle> obstacles;
  std::string formula_text;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (line.front() == '[' && line.back() == ']') {
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.rfind("obstacle.", 0) == 0) obstacles.try_emplace(section);
      continue;
    }
    if (section == "formula") {
      formula_text += (formula_text.empty() ? "" : " ") + line;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ScenarioError(where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const std::string at = where + " [" + section + "] " + key;

    if (section == "workspace") {
      if (key == "lower") sc.workspace.lower = point(value, at);
      else if (key == "upper") sc.workspace.upper = point(value, at);
      else throw ScenarioError(at + ": unknown key");
    } else if (section.rfind("obstacle.", 0) == 0) {
      Obstacle& o = obstacles[section];
      if (key == "center") o.center = point(value, at);
      else if (key == "radius") o.radius = scalar(value, at);
      else if (key == "active") {
        const Vec2 w = point(value, at);
        o.active = stl::TimeInterval{w.x, w.y};
      } else throw ScenarioError(at + ": unknown key");
    } else if (section == "start") {
      if (key == "position") sc.start.position = point(value, at);
      else if (key == "heading") sc.start.heading = scalar(value, at);
      else if (key == "time") sc.start.time = scalar(value, at);
      else throw ScenarioError(at + ": unknown key");
    } else if (section == "robot") {
      if (key == "model") sc.robot_model = value;
      else if (key == "levels") sc.policy_levels = static_cast<int>(scalar(value, at));
      else if (key == "radius") sc.robot_radius = scalar(value, at);
      else throw ScenarioError(at + ": unknown key");
    } else if (section == "planner") {
      if (key == "max_iterations") sc.planner.max_iterations = static_cast<int>(scalar(value, at));
      else if (key == "seed") sc.planner.seed = static_cast<std::uint64_t>(scalar(value, at));
      else if (key == "dt_eval") sc.planner.dt_eval = scalar(value, at);
      else if (key == "rho_opt") sc.planner.rho_opt = scalar(value, at);
      else if (key == "collision_step") sc.planner.collision_step = scalar(value, at);
      else if (key == "theta_tol") sc.planner.theta_tol = scalar(value, at);
      else if (key == "near") {
        if (value == "range") sc.planner.near = NearPolicy::Range;
        else if (value == "shrinking") sc.planner.near = NearPolicy::Shrinking;
        else throw ScenarioError(at + ": near must be 'range' or 'shrinking'");
      }
      else throw ScenarioError(at + ": unknown key");
    } else {
      throw ScenarioError(where + ": key outside a known section");
    }
  }
  for (auto& [_, o] : obstacles) sc.obstacles.push_back(o);
  if (formula_text.empty()) throw ScenarioError("missing [formula]");
  try {
    sc.formula = stl::parse_formula(formula_text);
  } catch (const stl::ParseError& e) {
    throw ScenarioError(std::string("[formula] ") + e.what());
  } catch (const stl::FormulaError& e) {
    throw ScenarioError(std::string("[formula] ") + e.what());
  }
  sc.validate();
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.stem().string());
}

bool point_free(Vec2 p, double t, const Scenario& world) {
  if (!world.workspace.contains(p)) return false;
  for (const auto& o : world.obstacles) {
    if (o.active_at(t) && !(distance(p, o.center) > o.radius + world.robot_radius)) return false;
  }
  return true;
}

Pose simulate_segments(const RobotModel& model, const Pose& start, std::span<const Segment> segments) {
  Pose pose = start;
  for (const auto& s : segments) pose = model.step(pose, s.policy, s.duration);
  return pose;
}

bool edge_free(const Sample& parent, std::span<const Segment> segments, const Scenario& world,
               double step) {
  Vec2 pos = parent.position;
  double heading = parent.heading;
  double t = parent.time;
  if (!point_free(pos, t, world)) return false;
  std::vector<double> instants;
  for (const auto& seg : segments) {
    const double t_end = t + seg.duration;
    instants.clear();
    point_on_segment_times(t, t_end, world, instants);
    if (seg.policy.rotates()) {
      instants.push_back(t_end);
      for (double ti : instants) {
        if (!point_free(pos, ti, world)) return false;
      }
      heading += seg.policy.velocity * seg.duration;
    } else {
      const double speed = std::abs(seg.policy.velocity);
      const double length = speed * seg.duration;
      for (long k = 1;; ++k) {
        const double s = static_cast<double>(k) * step;
        if (s >= length) break;
        instants.push_back(t + s / speed);
      }
      instants.push_back(t_end);
      const Vec2 dir = unit_heading(heading) * seg.policy.velocity;
      for (double ti : instants) {
        if (!point_free(pos + dir * (ti - t), ti, world)) return false;
      }
      pos = pos + dir * seg.duration;
    }
    t = t_end;
  }
  return true;
}

}  // namespace stlplan
