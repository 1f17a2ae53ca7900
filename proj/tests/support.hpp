#pragma once

// Shared test helpers and independent reference evaluators.

#include "stlplan/planner.hpp"
#include "stlplan/stl.hpp"
#include "stlplan/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace testing {

using namespace stlplan;

// Direct recursive robustness: re-derives every value from the formula and
// the raw samples, with no caching and its own interpolation and grid.
class Oracle {
 public:
  Oracle(const TimedTrajectory& traj, double dt) : samples_(traj.samples().begin(), traj.samples().end()), dt_(dt) {}

  double eval(const stl::Formula& f, double t) const {
    using stl::Op;
    switch (f.op()) {
      case Op::True: return std::numeric_limits<double>::infinity();
      case Op::Predicate: return atom(f.atom(), at(t));
      case Op::Not: return -eval(f.left(), t);
      case Op::And: return std::min(eval(f.left(), t), eval(f.right(), t));
      case Op::Or: return std::max(eval(f.left(), t), eval(f.right(), t));
      case Op::Always: {
        double v = std::numeric_limits<double>::infinity();
        for (double s : grid(f.interval())) v = std::min(v, eval(f.left(), s));
        return v;
      }
      case Op::Eventually: {
        double v = -std::numeric_limits<double>::infinity();
        for (double s : grid(f.interval())) v = std::max(v, eval(f.left(), s));
        return v;
      }
      case Op::Until: {
        const auto g = grid(f.interval());
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < g.size(); ++i) {
          double hold = std::numeric_limits<double>::infinity();
          for (std::size_t j = 0; j <= i; ++j) hold = std::min(hold, eval(f.left(), g[j]));
          best = std::max(best, std::min(eval(f.right(), g[i]), hold));
        }
        return best;
      }
    }
    return 0.0;
  }

  // Top-level value with infinities mapped to +/- rho_opt.
  double top(const stl::Formula& f, double t, double rho_opt) const {
    const double v = eval(f, t);
    if (std::isinf(v)) return v > 0 ? rho_opt : -rho_opt;
    return v;
  }

  std::vector<double> grid(stl::TimeInterval iv) const {
    std::vector<double> g;
    for (int k = 0;; ++k) {
      const double s = iv.lo + k * dt_;
      if (!(s < iv.hi)) break;
      g.push_back(s);
    }
    g.push_back(iv.hi);
    for (const auto& s : samples_) {
      if (s.time > iv.lo && s.time < iv.hi) g.push_back(s.time);
    }
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
  }

  Vec2 at(double t) const {
    if (t <= samples_.front().time) return samples_.front().position;
    for (std::size_t i = 1; i < samples_.size(); ++i) {
      const Sample& a = samples_[i - 1];
      const Sample& b = samples_[i];
      if (t <= b.time) {
        const double u = (t - a.time) / (b.time - a.time);
        return {a.position.x + u * (b.position.x - a.position.x), a.position.y + u * (b.position.y - a.position.y)};
      }
    }
    return samples_.back().position;
  }

  static double atom(const stl::Atom& a, Vec2 x) {
    if (const auto* b = std::get_if<stl::BallAtom>(&a)) {
      const double d = std::hypot(x.x - b->center.x, x.y - b->center.y);
      return b->inside ? b->radius - d : d - b->radius;
    }
    if (const auto* b = std::get_if<stl::BoxAtom>(&a)) {
      const double m = std::min({x.x - b->lower.x, b->upper.x - x.x, x.y - b->lower.y, b->upper.y - x.y});
      return b->inside ? m : -m;
    }
    const auto& h = std::get<stl::HalfPlaneAtom>(a);
    const double v = h.axis == 0 ? x.x : x.y;
    return (v - h.a) * (v - h.b);
  }

 private:
  std::vector<Sample> samples_;
  double dt_;
};

inline TimedTrajectory random_trajectory(std::mt19937_64& rng, int n, double t0, double span) {
  std::uniform_real_distribution<double> pos(0.0, 3.0);
  std::uniform_real_distribution<double> gap(0.2, 1.0);
  std::vector<double> times{t0};
  for (int i = 1; i < n; ++i) times.push_back(times.back() + gap(rng));
  const double scale = span / (times.back() - t0);
  std::vector<Sample> out;
  for (int i = 0; i < n; ++i) out.push_back({{pos(rng), pos(rng)}, 0.0, t0 + (times[i] - t0) * scale});
  return TimedTrajectory(std::move(out));
}

inline stl::Atom random_atom(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> c(0.0, 3.0);
  std::uniform_real_distribution<double> r(0.1, 1.0);
  std::bernoulli_distribution coin(0.5);
  switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
    case 0: return stl::BallAtom{{c(rng), c(rng)}, r(rng), coin(rng)};
    case 1: {
      const double x0 = c(rng), y0 = c(rng);
      return stl::BoxAtom{{x0, y0}, {x0 + r(rng), y0 + r(rng)}, coin(rng)};
    }
    default: {
      const double a = c(rng);
      return stl::HalfPlaneAtom{coin(rng) ? 1 : 0, a, a + r(rng)};
    }
  }
}

// Random formula of the given depth; temporal operators only where no
// temporal operator sits above.
inline stl::FormulaPtr random_formula(std::mt19937_64& rng, int depth, bool temporal_ok, double span) {
  if (depth <= 1) {
    return std::bernoulli_distribution(0.05)(rng) ? stl::make_true() : stl::predicate(random_atom(rng));
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int choices = temporal_ok ? 7 : 4;
  const int pick = std::uniform_int_distribution<int>(0, choices - 1)(rng);
  auto interval = [&] {
    double a = u(rng) * span, b = u(rng) * span;
    if (a > b) std::swap(a, b);
    if (b - a < 0.01) b = std::min(span, a + 0.5);
    if (b - a < 0.01) a = b - 0.5;
    return stl::TimeInterval{a, b};
  };
  switch (pick) {
    case 0: return stl::predicate(random_atom(rng));
    case 1: return stl::negation(random_formula(rng, depth - 1, temporal_ok, span));
    case 2: return stl::conjunction(random_formula(rng, depth - 1, temporal_ok, span),
                                    random_formula(rng, depth - 1, temporal_ok, span));
    case 3: return stl::disjunction(random_formula(rng, depth - 1, temporal_ok, span),
                                    random_formula(rng, depth - 1, temporal_ok, span));
    case 4: return stl::always(random_formula(rng, depth - 1, false, span), interval());
    case 5: return stl::eventually(random_formula(rng, depth - 1, false, span), interval());
    default: return stl::until(random_formula(rng, depth - 1, false, span),
                               random_formula(rng, depth - 1, false, span), interval());
  }
}

// Dense point-sampling reference for edge collision checks.
inline bool dense_edge_free(const Sample& parent, std::span<const Segment> segments, const Scenario& world,
                            double spacing) {
  Vec2 p = parent.position;
  double heading = parent.heading;
  double t = parent.time;
  if (!point_free(p, t, world)) return false;
  for (const auto& seg : segments) {
    if (seg.policy.rotates()) {
      const int n = std::max(1, static_cast<int>(std::ceil(seg.duration / 0.001)));
      for (int k = 1; k <= n; ++k) {
        if (!point_free(p, t + seg.duration * k / n, world)) return false;
      }
      heading += seg.policy.velocity * seg.duration;
    } else {
      const double len = std::abs(seg.policy.velocity) * seg.duration;
      const int n = std::max(1, static_cast<int>(std::ceil(len / spacing)));
      const Vec2 dir{std::cos(heading) * (seg.policy.velocity > 0 ? 1 : -1),
                     std::sin(heading) * (seg.policy.velocity > 0 ? 1 : -1)};
      for (int k = 1; k <= n; ++k) {
        const double u = static_cast<double>(k) / n;
        if (!point_free(p + dir * (len * u), t + seg.duration * u, world)) return false;
      }
      p = p + dir * len;
    }
    t += seg.duration;
  }
  return true;
}

inline Scenario scenario_from(const std::string& text) { return parse_scenario(text, "test"); }

// Scenario text with an open 3x3 workspace and the given formula.
inline std::string open_world(const std::string& formula, int iterations = 300) {
  return "[workspace]\nlower = 0, 0\nupper = 3, 3\n[start]\nposition = 0.5, 0.5\nheading = 0\n"
         "[planner]\nmax_iterations = " + std::to_string(iterations) + "\n[formula]\n" + formula + "\n";
}

struct Leg {
  Vec2 to;
  int forward_level;  ///< 1..3 of the three-level library
};

// Turn-and-drive schedule through the waypoints using the three-level
// diff-drive library with its slowest rotations.
inline std::vector<Segment> compose(Pose start, std::span<const Leg> legs) {
  const RobotModel model = RobotModel::by_id(RobotModel::kDiffDrive);
  const auto lib = policy_library(model, 3);
  std::vector<Segment> out;
  Pose pose = start;
  for (const auto& leg : legs) {
    const Vec2 d = leg.to - pose.position;
    const double turn = wrap_angle(std::atan2(d.y, d.x) - pose.heading);
    if (std::abs(turn) > 1e-12) {
      const Policy& rot = turn > 0 ? lib[3] : lib[0];
      out.push_back({rot, std::abs(turn) / std::abs(rot.velocity)});
      pose = model.step(pose, rot, out.back().duration);
    }
    const Policy& fwd = lib[static_cast<std::size_t>(5 + leg.forward_level)];
    out.push_back({fwd, d.norm() / fwd.velocity});
    pose = model.step(pose, fwd, out.back().duration);
  }
  return out;
}

inline TimedTrajectory rollout_schedule(Pose start, double t0, std::span<const Segment> schedule,
                                        std::optional<double> hold_until = std::nullopt) {
  const RobotModel model = RobotModel::by_id(RobotModel::kDiffDrive);
  TimedTrajectory out({{start.position, start.heading, t0}});
  Pose pose = start;
  for (const auto& seg : schedule) {
    const auto part = model.rollout(pose, out.end_time(), seg.policy, seg.duration, {}, nullptr, 0.05);
    out.splice(part);
    pose = {part.back().position, part.back().heading};
  }
  return hold_until ? out.held_until(*hold_until) : out;
}

// The same schedule as a plan with one node per waypoint.
inline PlanResult composed_plan(Pose start, double t0, std::span<const Leg> legs) {
  const RobotModel model = RobotModel::by_id(RobotModel::kDiffDrive);
  PlanResult r;
  r.nodes.push_back({start.position, start.heading, t0, {}});
  Pose pose = start;
  double t = t0;
  for (const auto& leg : legs) {
    const Leg one[] = {leg};
    PlanNode n;
    n.incoming = compose(pose, one);
    for (const auto& seg : n.incoming) {
      pose = model.step(pose, seg.policy, seg.duration);
      t += seg.duration;
    }
    n.position = pose.position;
    n.heading = pose.heading;
    n.time = t;
    r.schedule.insert(r.schedule.end(), n.incoming.begin(), n.incoming.end());
    r.nodes.push_back(std::move(n));
  }
  return r;
}

inline const std::vector<Leg>& phi1_legs() {
  static const std::vector<Leg> legs{
      {{1.0, 0.85}, 2}, {{2.0, 0.85}, 2}, {{2.5, 0.5}, 1},  // g1 around 21 s
      {{1.5, 1.5}, 1},                                      // past the timed disc after 30 s
      {{0.5, 2.5}, 3},                                      // g2 before 50 s
  };
  return legs;
}

// Hand-composed trajectory for the bundled phi1 task: through the gap
// between o1 and the timed disc to g1, then diagonally to g2 once the
// timed disc has cleared.
inline TimedTrajectory phi1_reference() {
  const auto schedule = compose({{0.5, 0.5}, 0.0}, phi1_legs());
  return rollout_schedule({{0.5, 0.5}, 0.0}, 0.0, schedule, 55.0);
}

struct Kit {
  Scenario world;
  RobotModel model;
  std::vector<Policy> policies;
  EstimatorSet estimators;
  DistanceRange range;
};

inline Kit make_kit(Scenario world) {
  RobotModel model = RobotModel::by_id(world.robot_model);
  auto policies = policy_library(model, world.policy_levels);
  auto estimators = build_estimators(model, policies);
  const auto range = translation_range(policies, estimators);
  return {std::move(world), std::move(model), std::move(policies), std::move(estimators), range};
}

}  // namespace testing
