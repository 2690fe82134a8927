#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "usfirst/app/run_config.hpp"
#include "usfirst/synthetic.hpp"

namespace usfirst::app {

// Exit-code contract shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitValidation = 2,
  kExitEmptyResult = 3,
};

struct CommandResult {
  int exit_code = kExitOk;
  std::vector<std::string> messages;
};

// records.json + splits.csv for a synthetic cohort.
CommandResult cmd_generate(const CohortSpec& spec, const std::filesystem::path& out_dir);

// calibrator_alpha.json, calibrator_coverage.json, calibration_report.json.
CommandResult cmd_calibrate(const RunConfig& config);

// decision_cube.{csv,json}, pairs.csv, eval_us.csv, cell_metrics.csv,
// heatmap_usonly.csv, heatmap_missrate.csv, coverage_curve.csv, snapshots.md.
// Needs the calibrators from cmd_calibrate in config.out.
CommandResult cmd_sweep(const RunConfig& config);

// decision_curve.csv and decision_curve_meta.json from the stored cube.
CommandResult cmd_decision_curve(const RunConfig& config);

// calibrate, sweep and decision-curve in sequence; stops at the first failure.
CommandResult cmd_run(const RunConfig& config);

// Per-pair table written by cmd_sweep and read back by the API.
struct PairRow {
  std::string pair_id;
  std::string us_record_id;
  std::string xr_record_id;
  Abnormality z = Abnormality::Unknown;
  UsPrediction pred;
  bool ossific = false;
};

std::string pairs_to_csv(const std::vector<StrictPair>& pairs);
std::vector<PairRow> pairs_from_csv(std::string_view text);

std::string eval_us_to_csv(const EvalUsSet& eval);
EvalUsSet eval_us_from_csv(std::string_view text);

Calibrators load_calibrators(const std::filesystem::path& run_dir);

}  // namespace usfirst::app
