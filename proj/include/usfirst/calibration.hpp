#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "usfirst/measurements.hpp"

namespace usfirst {

/// Affine bias correction y~ = a * y^ + b fitted by least absolute deviations.
struct AffineCorrection {
  Target target = Target::Alpha;
  double a = 1.0;
  double b = 0.0;
  std::size_t n_fit = 0;
  // Set when the predictor had no spread and the shift-only fallback ran.
  bool fallback = false;

  double apply(double pred_raw) const { return a * pred_raw + b; }

  friend bool operator==(const AffineCorrection&, const AffineCorrection&) = default;
};

struct ConformalRadius {
  Target target = Target::Alpha;
  double rho = 0.1;
  // k-th smallest of the negated residuals; +inf when k > n_cal.
  double q_plus = 0.0;
  std::size_t n_cal = 0;
  std::size_t k = 0;  // 1-based order statistic index

  bool never_certifies() const { return q_plus == std::numeric_limits<double>::infinity(); }

  friend bool operator==(const ConformalRadius&, const ConformalRadius&) = default;
};

struct LowerBoundParams {
  AffineCorrection correction;
  ConformalRadius radius;
  double delta = 0.0;  // inflation, >= 0
};

// Sum of |a * pred_i + b - label_i|.
double lad_objective(const Eigen::Ref<const Eigen::VectorXd>& pred,
                     const Eigen::Ref<const Eigen::VectorXd>& label, double a, double b);

/// Exact minimiser of sum |a * pred_i + b - label_i|.
///
/// Some optimal line passes through two data points, so for every pivot
/// point the slope is chosen as the lower weighted median of the slopes to
/// the other points (weights |pred_j - pred_i|). Among optimal lines the
/// lexicographically smallest (a, b) is returned. O(n^2 log n).
///
/// Throws InsufficientData for n < 2. When the predictor spread is below
/// tolerance, returns a = 1, b = lower median of (label - pred) with
/// `fallback` set.
AffineCorrection fit_affine_lad(const Eigen::Ref<const Eigen::VectorXd>& pred,
                                const Eigen::Ref<const Eigen::VectorXd>& label,
                                Target target = Target::Alpha);

// k = ceil((n + 1) * (1 - rho)), the split-conformal order statistic.
std::size_t conformal_rank(std::size_t n_cal, double rho);

/// One-sided conformal radius from residuals r_i = y_i - y~_i: the k-th
/// smallest of {-r_i}, or +inf when k exceeds n_cal. Not clamped at 0.
ConformalRadius conformal_radius(const Eigen::Ref<const Eigen::VectorXd>& residuals, double rho,
                                 Target target = Target::Alpha);

// a * pred_raw + b - (1 + delta) * q_plus; -inf when q_plus is +inf.
double lower_bound(double pred_raw, const LowerBoundParams& params);

struct LabeledPrediction {
  double pred_raw = 0.0;
  double label = 0.0;
};

// Fraction of items with label >= lower_bound(pred_raw). EmptyEvalSet when empty.
double empirical_coverage(const std::vector<LabeledPrediction>& eval_set,
                          const LowerBoundParams& params);

/// Fitted per-target calibrator: correction plus conformal radius.
struct TargetCalibrator {
  AffineCorrection correction;
  ConformalRadius radius;

  LowerBoundParams with_delta(double delta) const { return {correction, radius, delta}; }
};

// Fits the affine correction, then the radius on the corrected residuals.
// With `split_halves`, the correction uses the first half of the items and
// the radius the second half.
TargetCalibrator calibrate_target(const std::vector<LabeledPrediction>& cal_set, double rho,
                                  Target target, bool split_halves = false);

// JSON {target, a, b, rho, q_plus, n_cal, fallback_flag, n_fit, k}; q_plus
// is the string "+inf" for the never-certify sentinel.
std::string calibrator_to_json(const TargetCalibrator& calibrator);
TargetCalibrator calibrator_from_json(const std::string& text);

}  // namespace usfirst
