#include "stlplan/reach.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <thread>
#include <sstream>

namespace stlplan {

bool ReachEstimator::in_range(double d) const {
  const double slack = 1e-12 * std::max(1.0, std::abs(d_max));
  return d >= d_min - slack && d <= d_max + slack;
}

double ReachEstimator::evaluate(double d) const {
  double v = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) v = v * d + *it;
  return v;
}

double ReachEstimator::derivative(double d) const {
  double v = 0.0;
  for (int i = degree(); i >= 1; --i) v = v * d + i * coefficients[static_cast<std::size_t>(i)];
  return v;
}

std::vector<double> default_horizons() {
  std::vector<double> h;
  for (int k = 1; k <= 100; ++k) h.push_back(k / 10.0);
  return h;
}

std::vector<ReachSample> collect_samples(const RobotModel& model, const Policy& policy,
                                         std::span<const double> horizons) {
  std::vector<ReachSample> out;
  out.reserve(horizons.size());
  double previous = 0.0;
  for (double h : horizons) {
    if (!(h > previous)) throw FitError("horizons must be positive and strictly increasing");
    previous = h;
    const Pose end = model.step({}, policy, h);
    model.check(policy);
    const double d = policy.rotates() ? std::abs(end.heading) : end.position.norm();
    out.push_back({h, d});
  }
  return out;
}

ReachEstimator fit_estimator(std::span<const ReachSample> samples, int degree,
                             double holdout_fraction, int policy_id) {
  if (degree < 1) throw FitError("estimator degree must be >= 1");
  std::vector<ReachSample> train;
  std::vector<ReachSample> held;
  const std::size_t stride =
      holdout_fraction > 0.0 ? static_cast<std::size_t>(std::lround(1.0 / holdout_fraction)) : 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (stride > 1 && i % stride == stride - 1) {
      held.push_back(samples[i]);
    } else {
      train.push_back(samples[i]);
    }
  }
  const auto k = static_cast<std::size_t>(degree);
  if (train.size() < k + 1) {
    throw FitError("need at least " + std::to_string(k + 1) + " training samples for degree " +
                   std::to_string(degree));
  }

  Eigen::MatrixXd A(train.size(), k + 1);
  Eigen::VectorXd b(train.size());
  for (std::size_t r = 0; r < train.size(); ++r) {
    double p = 1.0;
    for (std::size_t c = 0; c <= k; ++c) {
      A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = p;
      p *= train[r].displacement;
    }
    b(static_cast<Eigen::Index>(r)) = train[r].duration;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < static_cast<Eigen::Index>(k + 1)) {
    throw FitError("rank-deficient reachability fit (displacements not distinct enough)");
  }
  const Eigen::VectorXd c = qr.solve(b);

  ReachEstimator est;
  est.policy_id = policy_id;
  est.coefficients.assign(c.data(), c.data() + c.size());
  auto [lo, hi] = std::minmax_element(train.begin(), train.end(), [](auto& x, auto& y) {
    return x.displacement < y.displacement;
  });
  est.d_min = lo->displacement;
  est.d_max = hi->displacement;

  constexpr int kMonotoneChecks = 1000;
  for (int i = 0; i <= kMonotoneChecks; ++i) {
    const double d = est.d_min + (est.d_max - est.d_min) * i / kMonotoneChecks;
    if (!(est.derivative(d) > 0.0)) {
      throw FitError("fitted estimator is not increasing at d=" + std::to_string(d) +
                     "; use a lower degree");
    }
  }
  if (!(est.evaluate(est.d_min) > 0.0)) throw FitError("fitted estimator is not positive at d_min");

  const auto& check = held.empty() ? train : held;
  for (const auto& s : check) {
    est.residual = std::max(est.residual, std::abs(est.evaluate(s.displacement) - s.duration) / s.duration);
  }
  return est;
}

ReachEstimator fit_estimator_with_fallback(std::span<const ReachSample> samples, int degree,
                                           double holdout_fraction, int policy_id) {
  try {
    return fit_estimator(samples, degree, holdout_fraction, policy_id);
  } catch (const FitError&) {
    if (degree == 1) throw;
    return fit_estimator(samples, 1, holdout_fraction, policy_id);
  }
}

double predict_duration(const ReachEstimator& estimator, double displacement) {
  if (!estimator.in_range(displacement)) {
    throw RangeError("displacement " + std::to_string(displacement) + " outside estimator range [" +
                     std::to_string(estimator.d_min) + ", " + std::to_string(estimator.d_max) + "]");
  }
  return estimator.evaluate(displacement);
}

DistanceRange compute_distance_range(std::span<const ReachEstimator> translation_estimators) {
  if (translation_estimators.empty()) throw FitError("no translation estimators");
  DistanceRange r{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (const auto& e : translation_estimators) {
    r.d_min = std::max(r.d_min, e.d_min);
    r.d_max = std::min(r.d_max, e.d_max);
  }
  if (!(r.d_min < r.d_max)) {
    throw FitError("estimator ranges do not intersect (d_min " + std::to_string(r.d_min) +
                   " >= d_max " + std::to_string(r.d_max) + ")");
  }
  return r;
}

EstimatorSet build_estimators(const RobotModel& model, std::span<const Policy> policies,
                              const EstimatorConfig& config) {
  EstimatorSet out;
  for (const auto& p : policies) {
    const auto samples = collect_samples(model, p, config.horizons);
    out.emplace(p.id, fit_estimator_with_fallback(samples, config.degree, config.holdout_fraction, p.id));
  }
  return out;
}

DistanceRange translation_range(std::span<const Policy> policies, const EstimatorSet& estimators) {
  std::vector<ReachEstimator> fwd;
  for (const auto& p : policies) {
    if (p.kind == PrimitiveKind::Forward) fwd.push_back(estimators.at(p.id));
  }
  return compute_distance_range(fwd);
}

std::string serialize_estimators(const EstimatorSet& set, const std::string& model, int levels) {
  std::ostringstream os;
  os << "# model " << model << " levels " << levels << "\n";
  os << "# policy_id degree coefficients... d_min d_max residual\n";
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, " %.17g", v);
    os << buf;
  };
  for (const auto& [id, e] : set) {
    os << id << ' ' << e.degree();
    for (double c : e.coefficients) put(c);
    put(e.d_min);
    put(e.d_max);
    put(e.residual);
    os << '\n';
  }
  return os.str();
}

EstimatorSet parse_estimators(const std::string& text, const std::string& model, int levels) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) return {};
  std::istringstream header(line);
  std::string hash, kw_model, got_model, kw_levels;
  int got_levels = 0;
  header >> hash >> kw_model >> got_model >> kw_levels >> got_levels;
  if (hash != "#" || got_model != model || got_levels != levels) return {};
  EstimatorSet out;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    ReachEstimator e;
    int degree = 0;
    if (!(row >> e.policy_id >> degree) || degree < 1) return {};
    e.coefficients.resize(static_cast<std::size_t>(degree) + 1);
    for (double& c : e.coefficients) {
      if (!(row >> c)) return {};
    }
    if (!(row >> e.d_min >> e.d_max >> e.residual)) return {};
    out.emplace(e.policy_id, e);
  }
  return out;
}

EstimatorSet load_or_fit_estimators(const std::filesystem::path& path, const RobotModel& model,
                                    std::span<const Policy> policies, int levels, bool refit) {
  if (!refit) {
    std::ifstream in(path);
    if (in) {
      std::stringstream ss;
      ss << in.rdbuf();
      EstimatorSet cached = parse_estimators(ss.str(), model.id(), levels);
      const bool complete = cached.size() == policies.size() &&
                            std::all_of(policies.begin(), policies.end(),
                                        [&](const Policy& p) { return cached.contains(p.id); });
      if (complete) return cached;
    }
  }
  EstimatorSet fitted = build_estimators(model, policies);
  // atomic replace
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp);
    if (out) out << serialize_estimators(fitted, model.id(), levels);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) std::filesystem::remove(tmp, ec);
  return fitted;
}

}  // namespace stlplan
