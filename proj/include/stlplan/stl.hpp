#pragma once

// Signal temporal logic: formula AST, concrete syntax, and quantitative
// (robustness) semantics over planar timed trajectories.
//
// Temporal intervals are absolute times. A temporal operator's operands must
// be state formulas (no temporal operator below another one); the builders
// and the parser reject nesting.

#include "stlplan/geometry.hpp"
#include "stlplan/trajectory.hpp"

#include <memory>
#include <span>
#include <vector>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace stlplan::stl {

struct TimeInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const TimeInterval&) const = default;
};

/// h(x) = radius - |x - center| when inside, else |x - center| - radius.
struct BallAtom {
  Vec2 center;
  double radius = 0.0;
  bool inside = true;
  bool operator==(const BallAtom&) const = default;
};

/// h(x) = min_i min(x_i - lower_i, upper_i - x_i), negated when !inside.
struct BoxAtom {
  Vec2 lower;
  Vec2 upper;
  bool inside = true;
  bool operator==(const BoxAtom&) const = default;
};

/// h(x) = (x_axis - a) * (x_axis - b); true outside the strip between a and b.
struct HalfPlaneAtom {
  int axis = 0;
  double a = 0.0;
  double b = 0.0;
  bool operator==(const HalfPlaneAtom&) const = default;
};

using Atom = std::variant<BallAtom, BoxAtom, HalfPlaneAtom>;

double evaluate_atom(const Atom& atom, Vec2 x);

enum class Op { True, Predicate, Not, And, Or, Until, Always, Eventually };

class Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

class FormulaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Immutable AST node. Build through the free functions below.
class Formula {
 public:
  Op op() const { return op_; }
  const Atom& atom() const { return atom_; }
  /// Operand of unary nodes; left operand of binary nodes.
  const Formula& left() const { return *left_; }
  const Formula& right() const { return *right_; }
  const FormulaPtr& left_ptr() const { return left_; }
  const FormulaPtr& right_ptr() const { return right_; }
  const TimeInterval& interval() const { return interval_; }

  bool is_temporal() const {
    return op_ == Op::Until || op_ == Op::Always || op_ == Op::Eventually;
  }
  /// True when a temporal operator occurs anywhere in this subtree.
  bool has_temporal() const { return has_temporal_; }

  bool operator==(const Formula& other) const;

 private:
  friend FormulaPtr make_node(Op, Atom, FormulaPtr, FormulaPtr, TimeInterval);
  Formula() = default;

  Op op_ = Op::True;
  Atom atom_{};
  FormulaPtr left_;
  FormulaPtr right_;
  TimeInterval interval_{};
  bool has_temporal_ = false;
};

FormulaPtr make_true();
FormulaPtr predicate(Atom atom);
FormulaPtr negation(FormulaPtr f);
FormulaPtr conjunction(FormulaPtr a, FormulaPtr b);
FormulaPtr disjunction(FormulaPtr a, FormulaPtr b);
FormulaPtr until(FormulaPtr hold, FormulaPtr reach, TimeInterval interval);
FormulaPtr always(FormulaPtr f, TimeInterval interval);
FormulaPtr eventually(FormulaPtr f, TimeInterval interval);

/// Latest interval end over all temporal operators; 0 when there are none.
double horizon(const Formula& f);

/// Fully parenthesized concrete syntax; parse_formula(to_string(f)) == f.
std::string to_string(const Formula& f);

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, int line, int column, std::set<std::string> expected);
  int line() const { return line_; }
  int column() const { return column_; }
  const std::set<std::string>& expected() const { return expected_; }

 private:
  int line_;
  int column_;
  std::set<std::string> expected_;
};

/// Parses the textual syntax:
///   true | ball(x,(cx,cy)) <= r | ball(x,(cx,cy)) >= r
///   box(x,(lx,ly),(ux,uy)) | !box(...) | halfplane(x0,a,b)
///   !f | f & g | f | g | G[a,b](f) | F[a,b](f) | f U[a,b] g | (f)
/// `&` binds tighter than `|`; `U` binds tighter than both.
/// Throws ParseError on syntax errors and FormulaError on bad intervals or
/// nested temporal operators.
FormulaPtr parse_formula(std::string_view text);

// ---------------------------------------------------------------------------
// Robustness

struct EvalOptions {
  double dt_eval = 0.05;  ///< dense grid spacing (s)
  double rho_opt = 1.0;   ///< optimistic bound; also stands in for +inf
};

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// rho(f, traj, at) with absolute-time intervals. Requires every temporal
/// interval to be covered by the trajectory. Infinite results (from `true`)
/// are reported as +/- rho_opt.
double robustness(const Formula& f, const TimedTrajectory& traj, double at,
                  const EvalOptions& opts);

/// Partial robustness of a growing prefix ending at traj.end_time():
/// unelapsed obligations are optimistic, partially elapsed Always is
/// evaluated over its elapsed window only. A complete trajectory yields
/// robustness(f, traj, traj.start_time()).
double prefix_robustness(const Formula& f, const TimedTrajectory& traj, const EvalOptions& opts);

/// Evaluation instants for an interval: lo + k*dt, the interval ends, and
/// every trajectory sample time inside it. Sorted, unique.
std::vector<double> evaluation_grid(TimeInterval interval, const TimedTrajectory& traj,
                                    double dt_eval);


/// Incremental form of prefix_robustness for signals that grow by appending
/// samples, as planner tree edges do. A State summarizes every grid instant
/// up to its end time; extending it only visits instants inside the new span.
/// Agrees with the batch evaluators on the same signal.
class IncrementalMonitor {
 public:
  struct Aggregate {
    double hold;   ///< running min of the Until hold operand
    double value;  ///< min (Always), max (Eventually) or best witness (Until)
  };
  struct State {
    std::vector<Aggregate> ops;  ///< one per temporal operator, pre-order
    double start_time = 0.0;
    double end_time = 0.0;
    Vec2 origin;  ///< position at start_time
  };

  IncrementalMonitor(FormulaPtr formula, EvalOptions opts);

  const Formula& formula() const { return *formula_; }
  const EvalOptions& options() const { return opts_; }

  /// Summary of `prefix` (all grid instants up to its end).
  State start(const TimedTrajectory& prefix) const;
  /// `samples.front()` must be the state's end sample; the rest follow it.
  State extend(const State& state, std::span<const Sample> samples) const;

  /// prefix_robustness of the summarized (incomplete) signal.
  double prefix_value(const State& state) const;
  /// robustness at start_time; every interval must have elapsed.
  double complete_value(const State& state) const;

 private:
  void visit(const Formula& f);
  double combine(const Formula& f, const State& s, bool complete, std::size_t& next) const;
  void absorb(std::size_t op, Aggregate& agg, double t, Vec2 x) const;
  void collect_instants(std::size_t op, double t_a, double t_b, std::span<const Sample> samples,
                        std::vector<double>& out) const;

  FormulaPtr formula_;
  EvalOptions opts_;
  std::vector<const Formula*> temporal_;
};

}  // namespace stlplan::stl
