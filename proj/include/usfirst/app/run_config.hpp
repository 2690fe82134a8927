#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "usfirst/dataset.hpp"
#include "usfirst/decision_curve.hpp"
#include "usfirst/metrics.hpp"
#include "usfirst/policy.hpp"

namespace usfirst::app {

/// Everything a pipeline run depends on. Written beside the outputs as
/// run_config.json.
struct RunConfig {
  std::filesystem::path records;
  std::filesystem::path splits;
  std::filesystem::path out = "run";
  std::filesystem::path report;  // defaults to <out>/report.json
  Thresholds thresholds;
  PolicyGrid grid;
  AbnormalityRule rule;
  double rho = 0.10;
  std::vector<double> lambda_grid = default_lambda_grid();
  std::vector<double> mu_list = default_mu_list();
  std::vector<SnapshotCell> snapshots = default_snapshot_cells();
  // Fit the affine correction and the radius on disjoint halves of the
  // calibration split.
  bool split_calibration = false;
  bool write_json_cube = true;
  bool write_svg = false;

  std::filesystem::path report_path() const {
    return report.empty() ? out / "report.json" : report;
  }
};

std::string to_json(const RunConfig& config);
RunConfig run_config_from_json(std::string_view text);

// Flag value parsers; each throws InvalidArgument with a usage hint.
std::vector<double> parse_number_list(std::string_view text);
// "start:stop:count" (inclusive, evenly spaced) or a comma list.
std::vector<double> parse_lambda_grid(std::string_view text);
// "t_alpha,t_cov" or "t_alpha0,t_alpha1,t_cov0,t_cov1".
Thresholds parse_thresholds(std::string_view text);
// "ai_threshold,ce_threshold,ihdi_min_abnormal", e.g. "30,20,II".
AbnormalityRule parse_abnormality_rule(std::string_view text);

}  // namespace usfirst::app
