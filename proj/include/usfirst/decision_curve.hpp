#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "usfirst/policy.hpp"

namespace usfirst {

struct UtilityParams {
  double lambda = 0.0;  // radiation cost per radiograph
  double mu = 0.0;      // penalty per missed XR abnormality
};

// Throws InvalidArgument unless both weights are finite and >= 0.
void validate(const UtilityParams& params);

// u = -lambda * (1 - d) - mu * z * d. UnknownAbnormality for unknown z.
double pair_utility(bool us_only, Abnormality z, const UtilityParams& params);

struct BaselineUtilities {
  double acquire_all = 0.0;   // every pair gets a radiograph
  double acquire_none = 0.0;  // no pair gets a radiograph
};

// Over pairs with known z; NoLabeledPairs when there are none.
BaselineUtilities baselines(std::span<const Abnormality> z, const UtilityParams& params);

struct CellUtility {
  double utility = 0.0;  // mean utility over labeled pairs
  double xr_use = 0.0;
};

// Mean utility of a decision vector over the pairs with known z.
CellUtility cell_utility(std::span<const Decision> decisions, std::span<const Abnormality> z,
                         const UtilityParams& params);

inline constexpr const char* kAcquireAll = "acquire_all";
inline constexpr const char* kAcquireNone = "acquire_none";

struct EnvelopePoint {
  double lambda = 0.0;
  double mu = 0.0;
  std::string best_family;  // rule family name, or acquire_all / acquire_none
  std::optional<double> best_delta_alpha;
  std::optional<double> best_delta_cov;
  double utility = 0.0;
  double xr_use = 0.0;
  double baseline_all = 0.0;
  double baseline_none = 0.0;
};

/// For every (lambda, mu), the best of all grid cells and both baselines.
/// Utilities within 1e-12 tie; ties go to higher XR use, then to the
/// lexicographically smallest (family name, delta_alpha, delta_cov).
/// Output is mu-major in `mu_list` order, then `lambda_grid` order.
std::vector<EnvelopePoint> envelope(const DecisionCube& cube, std::span<const Abnormality> z,
                                    const std::vector<double>& lambda_grid,
                                    const std::vector<double>& mu_list);

// 21 evenly spaced points on [0, 1].
std::vector<double> default_lambda_grid();
std::vector<double> default_mu_list();

// mu,lambda,utility,best_family,best_da,best_dc,baseline_all,baseline_none
std::string decision_curve_csv(const std::vector<EnvelopePoint>& points);

}  // namespace usfirst
