#include "usfirst/metrics.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "usfirst/errors.hpp"
#include "usfirst/text_io.hpp"

namespace usfirst {

EvalUsSet eval_us_set(const std::vector<StudyRecord>& eval_records) {
  EvalUsSet out;
  for (const auto& r : eval_records) {
    if (r.modality != Modality::US || !r.predictions) continue;
    const auto labels = effective_labels(r);
    if (!labels) continue;
    if (r.predictions->alpha && labels->alpha) {
      out.alpha.push_back({*r.predictions->alpha, *labels->alpha});
    }
    if (r.predictions->coverage && labels->coverage) {
      out.coverage.push_back({*r.predictions->coverage, *labels->coverage});
    }
  }
  return out;
}

CellMetrics cell_metrics(std::span<const Decision> decisions, std::span<const Abnormality> z,
                         const EvalUsSet& eval_us, const Calibrators& calibs, RuleFamily family,
                         double delta_alpha, double delta_cov) {
  if (decisions.size() != z.size()) {
    throw InvalidArgument("cell_metrics: decisions and z are not aligned");
  }
  CellMetrics m;
  m.family = family;
  m.delta_alpha = delta_alpha;
  m.delta_cov = delta_cov;
  for (std::size_t j = 0; j < decisions.size(); ++j) {
    if (z[j] == Abnormality::Unknown) continue;
    ++m.n_pairs;
    if (decisions[j].us_only) {
      ++m.n_us_only;
      if (z[j] == Abnormality::Abnormal) ++m.n_missed;
    }
  }
  if (m.n_pairs == 0) throw NoLabeledPairs("no pairs with XR ground truth");
  m.us_only_rate = static_cast<double>(m.n_us_only) / static_cast<double>(m.n_pairs);
  m.xr_use = 1.0 - m.us_only_rate;
  if (m.n_us_only > 0) {
    m.miss_rate = static_cast<double>(m.n_missed) / static_cast<double>(m.n_us_only);
  }
  if (!eval_us.alpha.empty()) {
    m.cov_alpha = empirical_coverage(eval_us.alpha, calibs.alpha.with_delta(delta_alpha));
  }
  if (!eval_us.coverage.empty()) {
    m.cov_cov = empirical_coverage(eval_us.coverage, calibs.coverage.with_delta(delta_cov));
  }
  return m;
}

std::vector<CellMetrics> grid_metrics(const DecisionCube& cube, const EvalUsSet& eval_us,
                                      const Calibrators& calibs) {
  std::vector<CellMetrics> out;
  out.reserve(cube.cells.size());
  for (const auto& cell : cube.cells) {
    out.push_back(cell_metrics(cell.decisions, cube.z, eval_us, calibs, cell.family,
                               cell.delta_alpha, cell.delta_cov));
  }
  return out;
}

std::vector<CoveragePoint> coverage_curve(Target target, std::vector<double> deltas,
                                          double /*fixed_other_delta*/,
                                          const std::vector<LabeledPrediction>& eval_set,
                                          const Calibrators& calibs) {
  if (eval_set.empty()) throw EmptyEvalSet("coverage_curve needs a nonempty eval set");
  std::sort(deltas.begin(), deltas.end());
  const TargetCalibrator& calib = target == Target::Alpha ? calibs.alpha : calibs.coverage;
  std::vector<CoveragePoint> out;
  out.reserve(deltas.size());
  for (const double d : deltas) out.push_back({d, empirical_coverage(eval_set, calib.with_delta(d))});
  return out;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : "null"; }

std::string cell_prefix(const CellMetrics& m) {
  return fmt::format("{},{},{}", to_string(m.family), format_number(m.delta_alpha),
                     format_number(m.delta_cov));
}

}  // namespace

std::string heatmap_usonly_csv(const std::vector<CellMetrics>& metrics) {
  std::string out = "family,delta_alpha,delta_cov,value\n";
  for (const auto& m : metrics) out += cell_prefix(m) + "," + format_number(m.us_only_rate) + "\n";
  return out;
}

std::string heatmap_missrate_csv(const std::vector<CellMetrics>& metrics) {
  std::string out = "family,delta_alpha,delta_cov,value\n";
  for (const auto& m : metrics) out += cell_prefix(m) + "," + opt(m.miss_rate) + "\n";
  return out;
}

std::string cell_metrics_csv(const std::vector<CellMetrics>& metrics) {
  std::string out =
      "family,delta_alpha,delta_cov,us_only_rate,xr_use,miss_rate,n_pairs,n_us_only,n_missed,"
      "cov_alpha,cov_cov\n";
  for (const auto& m : metrics) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", cell_prefix(m), format_number(m.us_only_rate),
                       format_number(m.xr_use), opt(m.miss_rate), m.n_pairs, m.n_us_only,
                       m.n_missed, opt(m.cov_alpha), opt(m.cov_cov));
  }
  return out;
}

std::string coverage_curve_csv(const std::vector<CoverageCurveRow>& curves) {
  std::string out = "target,delta,fixed_other_delta,coverage\n";
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      out += fmt::format("{},{},{},{}\n", to_string(c.target), format_number(p.delta),
                         format_number(c.fixed_other_delta), format_number(p.coverage));
    }
  }
  return out;
}

std::vector<SnapshotCell> default_snapshot_cells() {
  return {{RuleFamily::AlphaAndCov, 0.10, 0.10},
          {RuleFamily::AlphaAndCov, 0.20, 0.20},
          {RuleFamily::AlphaOrCov, 0.35, 0.35},
          {RuleFamily::AlphaOrCov, 0.40, 0.40}};
}

const CellMetrics* find_metrics(const std::vector<CellMetrics>& metrics, RuleFamily family,
                                double delta_alpha, double delta_cov) {
  for (const auto& m : metrics) {
    if (m.family == family && m.delta_alpha == delta_alpha && m.delta_cov == delta_cov) return &m;
  }
  return nullptr;
}

std::string snapshots_markdown(const std::vector<CellMetrics>& metrics,
                               const std::vector<SnapshotCell>& cells) {
  const std::size_t n = metrics.empty() ? 0 : metrics.front().n_pairs;
  std::string out = fmt::format("Policy snapshots (strict eval pairs, N={}).\n\n", n);
  out += "| Rule | δα/δcov | US-only | XR use | cov_α |\n";
  out += "|------|---------|---------|--------|-------|\n";
  for (const auto& c : cells) {
    const CellMetrics* m = find_metrics(metrics, c.family, c.delta_alpha, c.delta_cov);
    if (!m) continue;
    out += fmt::format("| {} | {} / {} | {} | {} | {} |\n", short_label(c.family),
                       format_fixed(c.delta_alpha, 2), format_fixed(c.delta_cov, 2),
                       format_fixed(m->us_only_rate, 2), format_fixed(m->xr_use, 2),
                       m->cov_alpha ? format_fixed(*m->cov_alpha, 2) : std::string("-"));
  }
  return out;
}

}  // namespace usfirst
