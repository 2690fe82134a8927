#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "usfirst/calibration.hpp"
#include "usfirst/policy.hpp"

namespace usfirst {

// Labeled evaluation US images, one list per target.
struct EvalUsSet {
  std::vector<LabeledPrediction> alpha;
  std::vector<LabeledPrediction> coverage;

  const std::vector<LabeledPrediction>& get(Target t) const {
    return t == Target::Alpha ? alpha : coverage;
  }
};

// Every evaluation US record that has both a label and a prediction for the
// target, in input order.
EvalUsSet eval_us_set(const std::vector<StudyRecord>& eval_records);

struct CellMetrics {
  RuleFamily family = RuleFamily::AlphaOnly;
  double delta_alpha = 0.0;
  double delta_cov = 0.0;
  double us_only_rate = 0.0;
  double xr_use = 1.0;
  std::optional<double> miss_rate;  // undefined when no US-only decisions
  std::size_t n_pairs = 0;          // pairs with known z
  std::size_t n_us_only = 0;
  std::size_t n_missed = 0;
  std::optional<double> cov_alpha;  // undefined when the eval set lacks the target
  std::optional<double> cov_cov;
};

/// Safety diagnostics for one grid cell. Pairs with unknown z are excluded
/// from N; NoLabeledPairs when none remain. Coverage is target-global: it is
/// computed on the whole evaluation US set at the cell's deltas.
CellMetrics cell_metrics(std::span<const Decision> decisions, std::span<const Abnormality> z,
                         const EvalUsSet& eval_us, const Calibrators& calibs, RuleFamily family,
                         double delta_alpha, double delta_cov);

std::vector<CellMetrics> grid_metrics(const DecisionCube& cube, const EvalUsSet& eval_us,
                                      const Calibrators& calibs);

struct CoveragePoint {
  double delta = 0.0;
  double coverage = 0.0;
};

/// Empirical coverage of one target across `deltas` (sorted ascending in the
/// output). `fixed_other_delta` is the other target's inflation, which does
/// not change a single-target bound; it is carried into the CSV for context.
std::vector<CoveragePoint> coverage_curve(Target target, std::vector<double> deltas,
                                          double fixed_other_delta,
                                          const std::vector<LabeledPrediction>& eval_set,
                                          const Calibrators& calibs);

// family,delta_alpha,delta_cov,value. Miss rate cells with no US-only
// decisions carry the literal null.
std::string heatmap_usonly_csv(const std::vector<CellMetrics>& metrics);
std::string heatmap_missrate_csv(const std::vector<CellMetrics>& metrics);
std::string cell_metrics_csv(const std::vector<CellMetrics>& metrics);

struct CoverageCurveRow {
  Target target;
  double fixed_other_delta;
  std::vector<CoveragePoint> points;
};
std::string coverage_curve_csv(const std::vector<CoverageCurveRow>& curves);

struct SnapshotCell {
  RuleFamily family;
  double delta_alpha;
  double delta_cov;
};

// AND 0.10/0.10, AND 0.20/0.20, OR 0.35/0.35, OR 0.40/0.40.
std::vector<SnapshotCell> default_snapshot_cells();

/// Markdown table with columns Rule, delta_alpha/delta_cov, US-only, XR use,
/// cov_alpha for the requested cells that exist in `metrics`.
std::string snapshots_markdown(const std::vector<CellMetrics>& metrics,
                               const std::vector<SnapshotCell>& cells);

const CellMetrics* find_metrics(const std::vector<CellMetrics>& metrics, RuleFamily family,
                                double delta_alpha, double delta_cov);

}  // namespace usfirst
