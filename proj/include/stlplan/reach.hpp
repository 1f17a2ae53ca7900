#pragma once

// Reachability-time estimators: fitted maps from displacement achieved under
// a policy to the duration the policy must be applied.

#include "stlplan/primitives.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stlplan {

struct ReachSample {
  double duration = 0.0;      ///< s
  double displacement = 0.0;  ///< m for translations, rad for rotations (magnitude)
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// duration = sum_i coefficients[i] * d^i, valid on [d_min, d_max].
struct ReachEstimator {
  int policy_id = 0;
  std::vector<double> coefficients;
  double d_min = 0.0;
  double d_max = 0.0;
  double residual = 0.0;  ///< max relative duration error on held-out samples

  int degree() const { return static_cast<int>(coefficients.size()) - 1; }
  bool in_range(double d) const;
  /// Polynomial value without range checking.
  double evaluate(double d) const;
  double derivative(double d) const;
};

/// Rollout horizons 0.1, 0.2, ..., 10 s.
std::vector<double> default_horizons();

/// One noiseless rollout per horizon from the origin, heading 0; records the
/// travelled distance (translations) or turned angle (rotations).
std::vector<ReachSample> collect_samples(const RobotModel& model, const Policy& policy,
                                         std::span<const double> horizons);

/// Least-squares polynomial fit of duration against displacement. Every
/// round(1/holdout_fraction)-th sample (by index) is held out for the
/// residual; with no holdout the residual is measured on the training data.
/// Throws FitError when the system is rank deficient or the fit is not
/// strictly increasing with positive values over the training range.
ReachEstimator fit_estimator(std::span<const ReachSample> samples, int degree,
                             double holdout_fraction, int policy_id = 0);

/// fit_estimator at `degree`, retrying at degree 1 if that fit is rejected.
ReachEstimator fit_estimator_with_fallback(std::span<const ReachSample> samples, int degree,
                                           double holdout_fraction, int policy_id = 0);

/// Throws RangeError outside [d_min, d_max].
double predict_duration(const ReachEstimator& estimator, double displacement);

struct DistanceRange {
  double d_min = 0.0;
  double d_max = 0.0;
};

/// Intersection of the estimators' ranges, so that every translation policy
/// can realize any steered edge length. Throws FitError when empty.
DistanceRange compute_distance_range(std::span<const ReachEstimator> translation_estimators);

/// Estimators keyed by policy id.
using EstimatorSet = std::map<int, ReachEstimator>;

struct EstimatorConfig {
  int degree = 3;
  double holdout_fraction = 0.2;
  std::vector<double> horizons = default_horizons();
};

/// Collects samples and fits an estimator for every policy.
EstimatorSet build_estimators(const RobotModel& model, std::span<const Policy> policies,
                              const EstimatorConfig& config = {});

/// The translation range over the Forward policies of `policies`.
DistanceRange translation_range(std::span<const Policy> policies, const EstimatorSet& estimators);

/// Text table: a `# model <id> levels <n>` header, then one row per
/// estimator: `policy_id degree c0..ck d_min d_max residual`.
std::string serialize_estimators(const EstimatorSet& set, const std::string& model, int levels);
/// Empty when the header does not match or a row is malformed.
EstimatorSet parse_estimators(const std::string& text, const std::string& model, int levels);

/// Loads `path` when it matches (model, levels, policy count); otherwise, or
/// when `refit` is set, fits and rewrites it.
EstimatorSet load_or_fit_estimators(const std::filesystem::path& path, const RobotModel& model,
                                    std::span<const Policy> policies, int levels, bool refit);

}  // namespace stlplan
