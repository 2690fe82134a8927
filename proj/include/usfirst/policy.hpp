#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "usfirst/calibration.hpp"
#include "usfirst/dataset.hpp"

namespace usfirst {

enum class RuleFamily { AlphaOnly, AlphaOrCov, AlphaAndCov };

// "alpha_only", "alpha_or_cov", "alpha_and_cov".
std::string_view to_string(RuleFamily family);
// Table label: "ALPHA", "OR", "AND".
std::string_view short_label(RuleFamily family);
std::optional<RuleFamily> parse_family(std::string_view text);

/// Clinical normality thresholds indexed by the ossific-nucleus flag o.
struct Thresholds {
  std::array<double, 2> t_alpha{60.0, 60.0};  // degrees
  std::array<double, 2> t_cov{50.0, 50.0};    // percent

  double alpha(bool o) const { return t_alpha[o ? 1 : 0]; }
  double cov(bool o) const { return t_cov[o ? 1 : 0]; }

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

struct PolicySpec {
  RuleFamily family = RuleFamily::AlphaOnly;
  Thresholds thresholds;
  double delta_alpha = 0.0;
  double delta_cov = 0.0;  // recorded but unused by AlphaOnly
  double rho = 0.1;
};

// Calibrators for the two ultrasound targets.
struct Calibrators {
  TargetCalibrator alpha;
  TargetCalibrator coverage;
};

struct UsPrediction {
  std::optional<double> alpha;
  std::optional<double> coverage;
};

/// Outcome for one pair. Margins are lower bound minus threshold; a missing
/// input leaves its bound and margin empty.
struct Decision {
  bool us_only = false;  // d = 1 means US-only, d = 0 defer to XR
  std::optional<double> lb_alpha;
  std::optional<double> lb_cov;
  std::optional<double> margin_alpha;
  std::optional<double> margin_cov;
  // A measurement the family needs was missing; the decision deferred.
  bool missing_measurement = false;

  int d() const { return us_only ? 1 : 0; }

  friend bool operator==(const Decision&, const Decision&) = default;
};

/// Threshold deferral rule. Comparisons use >=, so a bound exactly at the
/// threshold certifies. A missing alpha prediction, or a missing coverage
/// prediction under a family that uses coverage, defers (d = 0) and sets
/// `missing_measurement`.
Decision decide(const UsPrediction& us_pred_raw, bool ossific, const Calibrators& calibs,
                const PolicySpec& spec);

// Recomputes d from the stored margins; equals decision.us_only for every
// decision produced by decide().
bool recompute_us_only(const Decision& decision, RuleFamily family);

struct PolicyGrid {
  std::vector<double> deltas{0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40};
  std::vector<RuleFamily> families{RuleFamily::AlphaOnly, RuleFamily::AlphaOrCov,
                                   RuleFamily::AlphaAndCov};
};

// Throws InvalidArgument unless deltas are nonempty, >= 0 and strictly increasing.
void validate(const PolicyGrid& grid);

struct CubeCell {
  RuleFamily family = RuleFamily::AlphaOnly;
  double delta_alpha = 0.0;
  double delta_cov = 0.0;
  std::vector<Decision> decisions;  // aligned with DecisionCube::pair_ids
};

/// Decisions for every (family, delta_alpha, delta_cov) cell over a fixed
/// list of pairs. Cells are ordered family-major, then delta_alpha, then
/// delta_cov, following the grid's orders.
struct DecisionCube {
  std::vector<std::string> pair_ids;
  std::vector<Abnormality> z;  // aligned with pair_ids
  std::vector<double> deltas;
  std::vector<RuleFamily> families;
  std::vector<CubeCell> cells;

  std::size_t cell_index(std::size_t family_idx, std::size_t da_idx, std::size_t dc_idx) const {
    return (family_idx * deltas.size() + da_idx) * deltas.size() + dc_idx;
  }
  // nullptr when (family, da, dc) is not on the grid.
  const CubeCell* find(RuleFamily family, double delta_alpha, double delta_cov) const;
};

// Per-pair inputs to the rules, taken from the US record of each pair.
UsPrediction us_prediction(const StrictPair& pair);

/// Evaluates every grid cell. AlphaOnly does not depend on delta_cov, so it
/// is evaluated once per delta_alpha and broadcast across the delta_cov axis.
DecisionCube sweep_grid(const std::vector<StrictPair>& pairs, const Calibrators& calibs,
                        const PolicyGrid& grid, const Thresholds& thresholds, double rho);

// Long-format export: family,delta_alpha,delta_cov,pair_id,d,lb_alpha,lb_cov,
// margin_alpha,margin_cov,missing. Missing bounds are empty cells.
std::string cube_to_csv(const DecisionCube& cube);
std::string cube_to_json(const DecisionCube& cube);
DecisionCube cube_from_csv(std::string_view text);

}  // namespace usfirst
