#include "stlplan/stl.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace stlplan::stl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTimeEps = 1e-9;

struct AtomEval {
  Vec2 x;
  double operator()(const BallAtom& a) const {
    const double d = distance(x, a.center);
    return a.inside ? a.radius - d : d - a.radius;
  }
  double operator()(const BoxAtom& a) const {
    double m = kInf;
    for (int i = 0; i < 2; ++i) m = std::min({m, x[i] - a.lower[i], a.upper[i] - x[i]});
    return a.inside ? m : -m;
  }
  double operator()(const HalfPlaneAtom& a) const { return (x[a.axis] - a.a) * (x[a.axis] - a.b); }
};

std::string fmt_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_point(Vec2 p) { return "(" + fmt_number(p.x) + "," + fmt_number(p.y) + ")"; }

std::string fmt_interval(const TimeInterval& i) {
  return "[" + fmt_number(i.lo) + "," + fmt_number(i.hi) + "]";
}

void validate_interval(const TimeInterval& i) {
  if (!std::isfinite(i.lo) || !std::isfinite(i.hi) || i.lo < 0.0 || !(i.lo < i.hi)) {
    throw FormulaError("invalid time interval " + fmt_interval(i) + ": need 0 <= t1 < t2");
  }
}

double clamp_infinite(double v, double rho_opt) {
  if (v == kInf) return rho_opt;
  if (v == -kInf) return -rho_opt;
  return v;
}

class Evaluator {
 public:
  Evaluator(const TimedTrajectory& traj, const EvalOptions& opts) : traj_(traj), opts_(opts) {}

  // Value of a formula without temporal operators at instant t.
  double state(const Formula& f, double t) const {
    switch (f.op()) {
      case Op::True: return kInf;
      case Op::Predicate: return evaluate_atom(f.atom(), traj_.position_at(t));
      case Op::Not: return -state(f.left(), t);
      case Op::And: return std::min(state(f.left(), t), state(f.right(), t));
      case Op::Or: return std::max(state(f.left(), t), state(f.right(), t));
      default: break;
    }
    throw EvaluationError("temporal operator in state position");
  }

  double exact(const Formula& f, double t) const {
    switch (f.op()) {
      case Op::Not: return -exact(f.left(), t);
      case Op::And: return std::min(exact(f.left(), t), exact(f.right(), t));
      case Op::Or: return std::max(exact(f.left(), t), exact(f.right(), t));
      case Op::Always:
      case Op::Eventually:
      case Op::Until: {
        require_covered(f.interval());
        return temporal(f, evaluation_grid(f.interval(), traj_, opts_.dt_eval), false);
      }
      default: return state(f, t);
    }
  }

  double prefix(const Formula& f, double t, double t_end) const {
    switch (f.op()) {
      case Op::Not: return -prefix(f.left(), t, t_end);
      case Op::And: return std::min(prefix(f.left(), t, t_end), prefix(f.right(), t, t_end));
      case Op::Or: return std::max(prefix(f.left(), t, t_end), prefix(f.right(), t, t_end));
      case Op::Always:
      case Op::Eventually:
      case Op::Until: {
        const TimeInterval& iv = f.interval();
        if (iv.lo > t_end + kTimeEps) return opts_.rho_opt;
        if (iv.hi <= t_end + kTimeEps) return exact(f, t);
        require_covered({iv.lo, t_end});
        std::vector<double> grid = evaluation_grid(iv, traj_, opts_.dt_eval);
        std::erase_if(grid, [&](double g) { return g > t_end; });
        if (grid.empty() || grid.back() < t_end) grid.push_back(t_end);
        return temporal(f, grid, true);
      }
      default: return state(f, t);
    }
  }

 private:
  void require_covered(const TimeInterval& iv) const {
    if (iv.lo < traj_.start_time() - kTimeEps || iv.hi > traj_.end_time() + kTimeEps) {
      throw EvaluationError("interval " + fmt_interval(iv) + " is not covered by trajectory span " +
                            fmt_interval({traj_.start_time(), traj_.end_time()}));
    }
  }

  // Min/max over the grid; `open_future` adds the optimistic continuation of
  // a window that has not fully elapsed.
  double temporal(const Formula& f, const std::vector<double>& grid, bool open_future) const {
    switch (f.op()) {
      case Op::Always: {
        double v = kInf;
        for (double g : grid) v = std::min(v, state(f.left(), g));
        return v;
      }
      case Op::Eventually: {
        double v = -kInf;
        for (double g : grid) v = std::max(v, state(f.left(), g));
        return open_future ? std::max(v, opts_.rho_opt) : v;
      }
      case Op::Until: {
        double hold = kInf;
        double v = -kInf;
        for (double g : grid) {
          hold = std::min(hold, state(f.left(), g));
          v = std::max(v, std::min(state(f.right(), g), hold));
        }
        return open_future ? std::max(v, std::min(hold, opts_.rho_opt)) : v;
      }
      default: break;
    }
    throw EvaluationError("not a temporal operator");
  }

  const TimedTrajectory& traj_;
  const EvalOptions& opts_;
};

}  // namespace

double evaluate_atom(const Atom& atom, Vec2 x) { return std::visit(AtomEval{x}, atom); }

bool Formula::operator==(const Formula& other) const {
  if (op_ != other.op_) return false;
  switch (op_) {
    case Op::True: return true;
    case Op::Predicate: return atom_ == other.atom_;
    case Op::Not: return *left_ == *other.left_;
    case Op::And:
    case Op::Or: return *left_ == *other.left_ && *right_ == *other.right_;
    case Op::Until:
      return interval_ == other.interval_ && *left_ == *other.left_ && *right_ == *other.right_;
    case Op::Always:
    case Op::Eventually: return interval_ == other.interval_ && *left_ == *other.left_;
  }
  return false;
}

FormulaPtr make_node(Op op, Atom atom, FormulaPtr left, FormulaPtr right, TimeInterval interval) {
  auto node = std::shared_ptr<Formula>(new Formula());
  node->op_ = op;
  node->atom_ = atom;
  node->left_ = std::move(left);
  node->right_ = std::move(right);
  node->interval_ = interval;
  const bool below = (node->left_ && node->left_->has_temporal()) ||
                     (node->right_ && node->right_->has_temporal());
  if (node->is_temporal()) {
    validate_interval(interval);
    if (below) {
      throw FormulaError("nested temporal operators are not supported (intervals are absolute)");
    }
  }
  node->has_temporal_ = below || node->is_temporal();
  return node;
}

FormulaPtr make_true() { return make_node(Op::True, {}, nullptr, nullptr, {}); }

FormulaPtr predicate(Atom atom) {
  if (const auto* ball = std::get_if<BallAtom>(&atom); ball && !(ball->radius >= 0.0)) {
    throw FormulaError("ball radius must be non-negative");
  }
  if (const auto* box = std::get_if<BoxAtom>(&atom);
      box && !(box->lower.x <= box->upper.x && box->lower.y <= box->upper.y)) {
    throw FormulaError("box lower corner must not exceed upper corner");
  }
  if (const auto* hp = std::get_if<HalfPlaneAtom>(&atom); hp && (hp->axis < 0 || hp->axis > 1)) {
    throw FormulaError("halfplane axis must be 0 or 1");
  }
  return make_node(Op::Predicate, atom, nullptr, nullptr, {});
}

FormulaPtr negation(FormulaPtr f) { return make_node(Op::Not, {}, std::move(f), nullptr, {}); }

FormulaPtr conjunction(FormulaPtr a, FormulaPtr b) {
  return make_node(Op::And, {}, std::move(a), std::move(b), {});
}

FormulaPtr disjunction(FormulaPtr a, FormulaPtr b) {
  return make_node(Op::Or, {}, std::move(a), std::move(b), {});
}

FormulaPtr until(FormulaPtr hold, FormulaPtr reach, TimeInterval interval) {
  return make_node(Op::Until, {}, std::move(hold), std::move(reach), interval);
}

FormulaPtr always(FormulaPtr f, TimeInterval interval) {
  return make_node(Op::Always, {}, std::move(f), nullptr, interval);
}

FormulaPtr eventually(FormulaPtr f, TimeInterval interval) {
  return make_node(Op::Eventually, {}, std::move(f), nullptr, interval);
}

double horizon(const Formula& f) {
  double h = f.is_temporal() ? f.interval().hi : 0.0;
  if (f.left_ptr()) h = std::max(h, horizon(f.left()));
  if (f.right_ptr()) h = std::max(h, horizon(f.right()));
  return h;
}

std::string to_string(const Formula& f) {
  switch (f.op()) {
    case Op::True: return "true";
    case Op::Predicate: {
      const Atom& a = f.atom();
      if (const auto* ball = std::get_if<BallAtom>(&a)) {
        return "ball(x," + fmt_point(ball->center) + (ball->inside ? ") <= " : ") >= ") +
               fmt_number(ball->radius);
      }
      if (const auto* box = std::get_if<BoxAtom>(&a)) {
        return std::string(box->inside ? "" : "!") + "box(x," + fmt_point(box->lower) + "," +
               fmt_point(box->upper) + ")";
      }
      const auto& hp = std::get<HalfPlaneAtom>(a);
      return "halfplane(x" + std::to_string(hp.axis) + "," + fmt_number(hp.a) + "," +
             fmt_number(hp.b) + ")";
    }
    case Op::Not: return "!(" + to_string(f.left()) + ")";
    case Op::And: return "(" + to_string(f.left()) + " & " + to_string(f.right()) + ")";
    case Op::Or: return "(" + to_string(f.left()) + " | " + to_string(f.right()) + ")";
    case Op::Until:
      return "(" + to_string(f.left()) + " U" + fmt_interval(f.interval()) + " " +
             to_string(f.right()) + ")";
    case Op::Always: return "G" + fmt_interval(f.interval()) + "(" + to_string(f.left()) + ")";
    case Op::Eventually: return "F" + fmt_interval(f.interval()) + "(" + to_string(f.left()) + ")";
  }
  return {};
}

std::vector<double> evaluation_grid(TimeInterval interval, const TimedTrajectory& traj,
                                    double dt_eval) {
  if (!(dt_eval > 0.0)) throw EvaluationError("dt_eval must be positive");
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>((interval.hi - interval.lo) / dt_eval) + traj.size() + 2);
  for (long k = 0;; ++k) {
    const double g = interval.lo + static_cast<double>(k) * dt_eval;
    if (g >= interval.hi) break;
    grid.push_back(g);
  }
  grid.push_back(interval.hi);
  for (const auto& s : traj.samples()) {
    if (s.time > interval.lo && s.time < interval.hi) grid.push_back(s.time);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

double robustness(const Formula& f, const TimedTrajectory& traj, double at,
                  const EvalOptions& opts) {
  if (traj.empty()) throw EvaluationError("empty trajectory");
  if (at < traj.start_time() - kTimeEps || at > traj.end_time() + kTimeEps) {
    throw EvaluationError("evaluation instant " + fmt_number(at) + " outside trajectory span " +
                          fmt_interval({traj.start_time(), traj.end_time()}));
  }
  return clamp_infinite(Evaluator(traj, opts).exact(f, at), opts.rho_opt);
}

double prefix_robustness(const Formula& f, const TimedTrajectory& traj, const EvalOptions& opts) {
  if (traj.empty()) throw EvaluationError("empty trajectory");
  if (traj.complete()) return robustness(f, traj, traj.start_time(), opts);
  return clamp_infinite(Evaluator(traj, opts).prefix(f, traj.start_time(), traj.end_time()),
                        opts.rho_opt);
}

}  // namespace stlplan::stl
