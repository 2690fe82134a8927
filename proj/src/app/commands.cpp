#include "usfirst/app/commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>

#include <fmt/format.h>

#include "json.hpp"
#include "usfirst/errors.hpp"
#include "usfirst/text_io.hpp"

namespace usfirst::app {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// <command>.timestamp holds the UTC time of the last run.
void touch_timestamp(const fs::path& out, std::string_view command) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  write_file(out / fmt::format("{}.timestamp", command), std::string(buf) + "\n");
}

struct LoadedDataset {
  PartitionedDataset parts;
  std::vector<Rejection> rejections;
};

// Validation failures become exit code 2 with one message per record.
std::optional<LoadedDataset> load_dataset(const RunConfig& config, CommandResult& result) {
  try {
    LoadResult loaded = load_records(config.records);
    if (!loaded.rejections.empty()) {
      write_file(config.report_path(), report_to_json(loaded.rejections, nullptr));
      for (const auto& r : loaded.rejections) {
        result.messages.push_back(
            fmt::format("row {} ({}): {}", r.row, r.record_id.empty() ? "?" : r.record_id, r.message));
      }
      result.exit_code = kExitValidation;
      return std::nullopt;
    }
    const auto splits = load_splits(config.splits);
    return LoadedDataset{assign_splits(loaded.records, splits), {}};
  } catch (const Error& e) {
    result.messages.push_back(e.what());
  }
  result.exit_code = kExitValidation;
  return std::nullopt;
}

std::vector<LabeledPrediction> calibration_items(const std::vector<StudyRecord>& records,
                                                 Target target) {
  std::vector<LabeledPrediction> out;
  for (const auto& r : records) {
    if (r.modality != Modality::US || !r.predictions) continue;
    const auto labels = effective_labels(r);
    const auto pred = r.predictions->get(target);
    if (labels && pred && labels->get(target)) out.push_back({*pred, *labels->get(target)});
  }
  return out;
}

ordered_json calibration_report_entry(const TargetCalibrator& c,
                                      const std::vector<LabeledPrediction>& items,
                                      bool split) {
  double before = 0.0, after = 0.0;
  for (const auto& it : items) {
    before += std::abs(it.pred_raw - it.label);
    after += std::abs(c.correction.apply(it.pred_raw) - it.label);
  }
  const double n = static_cast<double>(items.size());
  ordered_json j;
  j["target"] = std::string(to_string(c.correction.target));
  j["n_items"] = items.size();
  j["n_fit"] = c.correction.n_fit;
  j["n_cal"] = c.radius.n_cal;
  j["rho"] = c.radius.rho;
  j["k"] = c.radius.k;
  j["q_plus"] = c.radius.never_certifies() ? ordered_json("+inf") : ordered_json(c.radius.q_plus);
  j["a"] = c.correction.a;
  j["b"] = c.correction.b;
  j["fallback_flag"] = c.correction.fallback;
  j["mae_before"] = before / n;
  j["mae_after"] = after / n;
  j["split_calibration"] = split;
  return j;
}

std::string svg_heatmaps(const std::vector<CellMetrics>& metrics, const DecisionCube& cube) {
  const int cell = 28, pad = 40, nd = static_cast<int>(cube.deltas.size());
  const int panel = nd * cell + pad;
  const int width = static_cast<int>(cube.families.size()) * panel + pad;
  const int height = 2 * panel + pad;
  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-size=\"9\">\n"
      "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\">"
      "<path d=\"M0,6 L6,0\" stroke=\"#888\"/></pattern></defs>\n",
      width, height);
  for (int row = 0; row < 2; ++row) {
    for (std::size_t f = 0; f < cube.families.size(); ++f) {
      const int x0 = pad + static_cast<int>(f) * panel;
      const int y0 = pad + row * panel;
      s += fmt::format("<text x=\"{}\" y=\"{}\">{} {}</text>\n", x0, y0 - 6,
                       short_label(cube.families[f]), row == 0 ? "US-only rate" : "miss rate");
      for (int a = 0; a < nd; ++a) {
        for (int c = 0; c < nd; ++c) {
          const auto& m = metrics[cube.cell_index(f, static_cast<std::size_t>(a),
                                                  static_cast<std::size_t>(c))];
          const std::optional<double> v = row == 0 ? std::optional<double>(m.us_only_rate) : m.miss_rate;
          const std::string fill =
              v ? fmt::format("rgb({0},{0},255)", static_cast<int>(std::lround(255 * (1.0 - *v))))
                : std::string("url(#hatch)");
          s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n",
                           x0 + c * cell, y0 + (nd - 1 - a) * cell, cell, cell, fill);
        }
      }
    }
  }
  return s + "</svg>\n";
}

}  // namespace

CommandResult cmd_generate(const CohortSpec& spec, const fs::path& out_dir) {
  CommandResult result;
  try {
    write_cohort(generate(spec), out_dir);
  } catch (const InvalidSpec& e) {
    result.exit_code = kExitValidation;
    result.messages.push_back(e.what());
  }
  return result;
}

CommandResult cmd_calibrate(const RunConfig& config) {
  CommandResult result;
  auto data = load_dataset(config, result);
  if (!data) return result;
  fs::create_directories(config.out);

  ordered_json report;
  report["rho"] = config.rho;
  report["split_calibration"] = config.split_calibration;
  report["targets"] = ordered_json::array();
  for (const Target target : {Target::Alpha, Target::Coverage}) {
    const auto items = calibration_items(data->parts.calibration, target);
    TargetCalibrator c;
    try {
      c = calibrate_target(items, config.rho, target, config.split_calibration);
    } catch (const Error& e) {
      result.exit_code = kExitValidation;
      result.messages.push_back(fmt::format("calibration of {} failed: {}", to_string(target),
                                            e.what()));
      return result;
    }
    write_file(config.out / fmt::format("calibrator_{}.json", to_string(target)),
               calibrator_to_json(c));
    report["targets"].push_back(calibration_report_entry(c, items, config.split_calibration));
    result.messages.push_back(fmt::format("{}: a={} b={} q_plus={} (k={} of n_cal={})",
                                          to_string(target), c.correction.a, c.correction.b,
                                          c.radius.q_plus, c.radius.k, c.radius.n_cal));
  }
  write_file(config.out / "calibration_report.json", report.dump(2) + "\n");
  write_file(config.out / "run_config.json", to_json(config));
  touch_timestamp(config.out, "calibrate");
  return result;
}

Calibrators load_calibrators(const fs::path& run_dir) {
  Calibrators c;
  c.alpha = calibrator_from_json(read_file(run_dir / "calibrator_alpha.json"));
  c.coverage = calibrator_from_json(read_file(run_dir / "calibrator_coverage.json"));
  return c;
}

std::string pairs_to_csv(const std::vector<StrictPair>& pairs) {
  std::string out = "pair_id,us_record_id,xr_record_id,z,pred_alpha,pred_cov,ossific\n";
  for (const auto& p : pairs) {
    const auto pred = us_prediction(p);
    out += fmt::format("{},{},{},{},{},{},{}\n", p.pair_id, p.us_record.record_id,
                       p.xr_record.record_id, to_string(p.z),
                       pred.alpha ? format_number(*pred.alpha) : "",
                       pred.coverage ? format_number(*pred.coverage) : "",
                       ossific_flag(p.us_record) ? 1 : 0);
  }
  return out;
}

std::vector<PairRow> pairs_from_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw ParseError("pairs CSV: missing header");
  std::vector<PairRow> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 7) throw ParseError(fmt::format("pairs CSV: row {} malformed", i));
    PairRow row;
    row.pair_id = f[0];
    row.us_record_id = f[1];
    row.xr_record_id = f[2];
    row.z = f[3] == "1" ? Abnormality::Abnormal
            : f[3] == "0" ? Abnormality::Normal
                          : Abnormality::Unknown;
    row.pred.alpha = parse_number(f[4]);
    row.pred.coverage = parse_number(f[5]);
    row.ossific = f[6] == "1";
    out.push_back(std::move(row));
  }
  return out;
}

std::string eval_us_to_csv(const EvalUsSet& eval) {
  std::string out = "target,pred_raw,label\n";
  for (const Target t : {Target::Alpha, Target::Coverage}) {
    for (const auto& item : eval.get(t)) {
      out += fmt::format("{},{},{}\n", to_string(t), format_number(item.pred_raw),
                         format_number(item.label));
    }
  }
  return out;
}

EvalUsSet eval_us_from_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw ParseError("eval_us CSV: missing header");
  EvalUsSet out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_csv_line(lines[i]);
    auto target = f.size() == 3 ? parse_target(f[0]) : std::nullopt;
    auto pred = f.size() == 3 ? parse_number(f[1]) : std::nullopt;
    auto label = f.size() == 3 ? parse_number(f[2]) : std::nullopt;
    if (!target || !pred || !label) throw ParseError(fmt::format("eval_us CSV: row {} malformed", i));
    (*target == Target::Alpha ? out.alpha : out.coverage).push_back({*pred, *label});
  }
  return out;
}

CommandResult cmd_sweep(const RunConfig& config) {
  CommandResult result;
  try {
    validate(config.grid);
    validate(config.rule);
  } catch (const Error& e) {
    result.exit_code = kExitValidation;
    result.messages.push_back(e.what());
    return result;
  }
  auto data = load_dataset(config, result);
  if (!data) return result;

  Calibrators calibs;
  try {
    calibs = load_calibrators(config.out);
  } catch (const Error& e) {
    result.exit_code = kExitValidation;
    result.messages.push_back(std::string("calibrators missing or unreadable (run calibrate first): ") +
                              e.what());
    return result;
  }

  const PairingResult pairing = build_strict_pairs(data->parts.evaluation, config.rule);
  write_file(config.report_path(), report_to_json({}, &pairing));
  for (const auto& w : pairing.warnings) result.messages.push_back("warning: " + w);

  const DecisionCube cube =
      sweep_grid(pairing.pairs, calibs, config.grid, config.thresholds, config.rho);
  const EvalUsSet eval_us = eval_us_set(data->parts.evaluation);

  std::vector<CellMetrics> metrics;
  try {
    metrics = grid_metrics(cube, eval_us, calibs);
  } catch (const NoLabeledPairs& e) {
    result.exit_code = kExitEmptyResult;
    result.messages.push_back(std::string("no strict pairs with XR ground truth: ") + e.what());
    return result;
  }

  const fs::path& out = config.out;
  write_file(out / "decision_cube.csv", cube_to_csv(cube));
  if (config.write_json_cube) write_file(out / "decision_cube.json", cube_to_json(cube));
  write_file(out / "pairs.csv", pairs_to_csv(pairing.pairs));
  write_file(out / "eval_us.csv", eval_us_to_csv(eval_us));
  write_file(out / "cell_metrics.csv", cell_metrics_csv(metrics));
  write_file(out / "heatmap_usonly.csv", heatmap_usonly_csv(metrics));
  write_file(out / "heatmap_missrate.csv", heatmap_missrate_csv(metrics));

  // Each curve holds the other target's inflation at the grid median.
  const double median_delta = config.grid.deltas[(config.grid.deltas.size() - 1) / 2];
  std::vector<CoverageCurveRow> curves;
  for (const Target t : {Target::Alpha, Target::Coverage}) {
    if (eval_us.get(t).empty()) continue;
    curves.push_back({t, median_delta,
                      coverage_curve(t, config.grid.deltas, median_delta, eval_us.get(t), calibs)});
  }
  write_file(out / "coverage_curve.csv", coverage_curve_csv(curves));
  write_file(out / "snapshots.md", snapshots_markdown(metrics, config.snapshots));
  if (config.write_svg) write_file(out / "heatmaps.svg", svg_heatmaps(metrics, cube));
  write_file(out / "run_config.json", to_json(config));
  touch_timestamp(out, "sweep");
  result.messages.push_back(fmt::format("{} strict pairs ({} with XR ground truth), {} cells",
                                        pairing.pairs.size(), metrics.front().n_pairs,
                                        cube.cells.size()));
  return result;
}

CommandResult cmd_decision_curve(const RunConfig& config) {
  CommandResult result;
  DecisionCube cube;
  std::vector<PairRow> pairs;
  try {
    cube = cube_from_csv(read_file(config.out / "decision_cube.csv"));
    pairs = pairs_from_csv(read_file(config.out / "pairs.csv"));
  } catch (const Error& e) {
    result.exit_code = kExitEmptyResult;
    result.messages.push_back(std::string("no decision cube (run sweep first): ") + e.what());
    return result;
  }
  if (cube.cells.empty() || pairs.size() != cube.pair_ids.size()) {
    result.exit_code = kExitEmptyResult;
    result.messages.push_back("decision cube is empty or does not match pairs.csv");
    return result;
  }
  for (std::size_t j = 0; j < pairs.size(); ++j) cube.z[j] = pairs[j].z;

  std::vector<EnvelopePoint> points;
  try {
    points = envelope(cube, cube.z, config.lambda_grid, config.mu_list);
  } catch (const NoLabeledPairs& e) {
    result.exit_code = kExitEmptyResult;
    result.messages.push_back(e.what());
    return result;
  } catch (const Error& e) {
    result.exit_code = kExitValidation;
    result.messages.push_back(e.what());
    return result;
  }
  write_file(config.out / "decision_curve.csv", decision_curve_csv(points));
  ordered_json meta;
  meta["envelope"] = "max over rule families x delta grid cells plus acquire-all/acquire-none";
  meta["caveat"] =
      "the envelope is maximised on the same evaluation pairs it reports (optimistic, not held out)";
  meta["tie_break"] = "higher XR use, then lexicographic (family, delta_alpha, delta_cov)";
  meta["lambda_grid"] = config.lambda_grid;
  meta["mu_list"] = config.mu_list;
  write_file(config.out / "decision_curve_meta.json", meta.dump(2) + "\n");
  touch_timestamp(config.out, "decision_curve");
  return result;
}

CommandResult cmd_run(const RunConfig& config) {
  CommandResult all;
  for (auto* step : {&cmd_calibrate, &cmd_sweep, &cmd_decision_curve}) {
    CommandResult r = step(config);
    all.messages.insert(all.messages.end(), r.messages.begin(), r.messages.end());
    if (r.exit_code != kExitOk) {
      all.exit_code = r.exit_code;
      break;
    }
  }
  return all;
}

}  // namespace usfirst::app
