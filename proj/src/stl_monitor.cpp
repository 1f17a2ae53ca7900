#include "stlplan/stl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stlplan::stl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTimeEps = 1e-9;

double state_at(const Formula& f, Vec2 x) {
  switch (f.op()) {
    case Op::True: return kInf;
    case Op::Predicate: return evaluate_atom(f.atom(), x);
    case Op::Not: return -state_at(f.left(), x);
    case Op::And: return std::min(state_at(f.left(), x), state_at(f.right(), x));
    case Op::Or: return std::max(state_at(f.left(), x), state_at(f.right(), x));
    default: break;
  }
  throw EvaluationError("temporal operator in state position");
}

}  // namespace

IncrementalMonitor::IncrementalMonitor(FormulaPtr formula, EvalOptions opts)
    : formula_(std::move(formula)), opts_(opts) {
  if (!formula_) throw FormulaError("monitor needs a formula");
  if (!(opts_.dt_eval > 0.0)) throw EvaluationError("dt_eval must be positive");
  visit(*formula_);
}

void IncrementalMonitor::visit(const Formula& f) {
  if (f.is_temporal()) {
    temporal_.push_back(&f);
    return;
  }
  if (f.left_ptr()) visit(f.left());
  if (f.right_ptr()) visit(f.right());
}

void IncrementalMonitor::absorb(std::size_t op, Aggregate& agg, double, Vec2 x) const {
  const Formula& f = *temporal_[op];
  switch (f.op()) {
    case Op::Always: agg.value = std::min(agg.value, state_at(f.left(), x)); break;
    case Op::Eventually: agg.value = std::max(agg.value, state_at(f.left(), x)); break;
    case Op::Until:
      agg.hold = std::min(agg.hold, state_at(f.left(), x));
      agg.value = std::max(agg.value, std::min(state_at(f.right(), x), agg.hold));
      break;
    default: break;
  }
}

IncrementalMonitor::State IncrementalMonitor::start(const TimedTrajectory& prefix) const {
  if (prefix.empty()) throw EvaluationError("empty trajectory");
  State s;
  s.start_time = prefix.start_time();
  s.end_time = prefix.end_time();
  s.origin = prefix.front().position;
  s.ops.reserve(temporal_.size());
  for (std::size_t i = 0; i < temporal_.size(); ++i) {
    const Formula& f = *temporal_[i];
    Aggregate agg{kInf, f.op() == Op::Always ? kInf : -kInf};
    if (f.interval().lo <= s.end_time) {
      for (double g : evaluation_grid(f.interval(), prefix, opts_.dt_eval)) {
        if (g > s.end_time) break;
        absorb(i, agg, g, prefix.position_at(g));
      }
    }
    s.ops.push_back(agg);
  }
  return s;
}

void IncrementalMonitor::collect_instants(std::size_t op, double t_a, double t_b,
                                          std::span<const Sample> samples,
                                          std::vector<double>& out) const {
  const TimeInterval& iv = temporal_[op]->interval();
  out.clear();
  if (iv.lo > t_b || iv.hi <= t_a) return;
  const double dt = opts_.dt_eval;
  long k = t_a > iv.lo ? static_cast<long>(std::floor((t_a - iv.lo) / dt)) : 0;
  for (;; ++k) {
    const double g = iv.lo + static_cast<double>(k) * dt;
    if (g >= iv.hi || g > t_b) break;
    if (g > t_a) out.push_back(g);
  }
  if (iv.hi > t_a && iv.hi <= t_b) out.push_back(iv.hi);
  for (std::size_t j = 1; j < samples.size(); ++j) {
    const double t = samples[j].time;
    if (t > iv.lo && t < iv.hi) out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

IncrementalMonitor::State IncrementalMonitor::extend(const State& state,
                                                     std::span<const Sample> samples) const {
  if (samples.size() < 2) return state;
  if (std::abs(samples.front().time - state.end_time) > kTimeEps) {
    throw EvaluationError("extension does not start at the monitored end time");
  }
  const TimedTrajectory local(std::vector<Sample>(samples.begin(), samples.end()));
  State s = state;
  s.end_time = samples.back().time;
  std::vector<double> instants;
  for (std::size_t i = 0; i < temporal_.size(); ++i) {
    collect_instants(i, state.end_time, s.end_time, samples, instants);
    for (double g : instants) absorb(i, s.ops[i], g, local.position_at(g));
  }
  return s;
}

double IncrementalMonitor::combine(const Formula& f, const State& s, bool complete,
                                   std::size_t& next) const {
  switch (f.op()) {
    case Op::Not: return -combine(f.left(), s, complete, next);
    case Op::And: {
      const double a = combine(f.left(), s, complete, next);
      return std::min(a, combine(f.right(), s, complete, next));
    }
    case Op::Or: {
      const double a = combine(f.left(), s, complete, next);
      return std::max(a, combine(f.right(), s, complete, next));
    }
    case Op::Always:
    case Op::Eventually:
    case Op::Until: {
      const Aggregate& agg = s.ops[next++];
      const TimeInterval& iv = f.interval();
      if (complete || iv.hi <= s.end_time + kTimeEps) return agg.value;
      if (iv.lo > s.end_time + kTimeEps) return opts_.rho_opt;
      if (f.op() == Op::Always) return agg.value;
      if (f.op() == Op::Eventually) return std::max(agg.value, opts_.rho_opt);
      return std::max(agg.value, std::min(agg.hold, opts_.rho_opt));
    }
    default: return state_at(f, s.origin);
  }
}

double IncrementalMonitor::prefix_value(const State& state) const {
  std::size_t next = 0;
  const double v = combine(*formula_, state, false, next);
  return std::isinf(v) ? std::copysign(opts_.rho_opt, v) : v;
}

double IncrementalMonitor::complete_value(const State& state) const {
  if (horizon(*formula_) > state.end_time + kTimeEps) {
    throw EvaluationError("monitored signal ends before the formula horizon");
  }
  std::size_t next = 0;
  const double v = combine(*formula_, state, true, next);
  return std::isinf(v) ? std::copysign(opts_.rho_opt, v) : v;
}

}  // namespace stlplan::stl
