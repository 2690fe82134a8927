// usfirst: calibrate, sweep and summarise ultrasound-first imaging policies.

#include <csignal>
#include <cstdio>
#include <exception>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "usfirst/app/commands.hpp"
#include "usfirst/app/service.hpp"
#include "usfirst/errors.hpp"

namespace {

using namespace usfirst;
using namespace usfirst::app;

// Raw flag text, converted once CLI11 has finished parsing.
struct PipelineFlags {
  std::string records, splits, out = "run", report;
  double rho = 0.10;
  std::string delta_grid, thresholds, rule, mu_list, lambda_grid;
  bool split_calibration = false;
  bool svg = false;
  bool no_json_cube = false;
  int serve_port = -1;
};

void add_pipeline_flags(CLI::App* cmd, PipelineFlags& f, bool needs_data) {
  auto* records = cmd->add_option("--records", f.records, "Study records (.json or .csv)");
  auto* splits = cmd->add_option("--splits", f.splits, "Subject split assignments (CSV)");
  if (needs_data) {
    records->required()->check(CLI::ExistingFile);
    splits->required()->check(CLI::ExistingFile);
  }
  cmd->add_option("--out", f.out, "Run directory for artifacts")->capture_default_str();
  cmd->add_option("--report", f.report, "Validation/pairing report path (default <out>/report.json)");
  cmd->add_option("--rho", f.rho, "Miscoverage level rho in (0,1)")->capture_default_str();
  cmd->add_option("--delta-grid", f.delta_grid, "Comma list of inflation factors");
  cmd->add_option("--thresholds", f.thresholds, "t_alpha,t_cov or ta0,ta1,tc0,tc1 (by ossific flag)");
  cmd->add_option("--abnormality-rule", f.rule, "ai,ce,IHDI, e.g. 30,20,II");
  cmd->add_option("--mu-list", f.mu_list, "Comma list of miss penalties");
  cmd->add_option("--lambda-grid", f.lambda_grid, "start:stop:count or comma list");
  cmd->add_flag("--split-calibration", f.split_calibration,
                "Fit correction and radius on disjoint calibration halves");
  cmd->add_flag("--svg", f.svg, "Also write heatmaps.svg");
  cmd->add_flag("--no-json-cube", f.no_json_cube, "Skip decision_cube.json");
}

RunConfig to_config(const PipelineFlags& f) {
  RunConfig c;
  c.records = f.records;
  c.splits = f.splits;
  c.out = f.out;
  c.report = f.report;
  c.rho = f.rho;
  if (!f.delta_grid.empty()) c.grid.deltas = parse_number_list(f.delta_grid);
  if (!f.thresholds.empty()) c.thresholds = parse_thresholds(f.thresholds);
  if (!f.rule.empty()) c.rule = parse_abnormality_rule(f.rule);
  if (!f.mu_list.empty()) c.mu_list = parse_number_list(f.mu_list);
  if (!f.lambda_grid.empty()) c.lambda_grid = parse_lambda_grid(f.lambda_grid);
  c.split_calibration = f.split_calibration;
  c.write_svg = f.svg;
  c.write_json_cube = !f.no_json_cube;
  return c;
}

int report(const CommandResult& r) {
  for (const auto& m : r.messages) {
    std::fprintf(r.exit_code == kExitOk ? stdout : stderr, "%s\n", m.c_str());
  }
  return r.exit_code;
}

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int serve(const std::string& run_dir, const std::string& host, int port) {
  const RunService service = RunService::load(run_dir);
  HttpServer server(service);
  const int bound = server.bind(host, port);
  if (bound < 0) {
    fmt::print(stderr, "cannot bind {}:{}\n", host, port);
    return kExitFailure;
  }
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  fmt::print("serving {} on http://{}:{}\n", run_dir, host, bound);
  std::fflush(stdout);
  server.listen();
  g_server = nullptr;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ultrasound-first selective imaging: calibration, policy sweep, decision curves"};
  app.require_subcommand(1);

  CohortSpec spec;
  std::string gen_out = "cohort";
  auto* gen = app.add_subcommand("generate", "Write a synthetic cohort (records.json, splits.csv)");
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();
  gen->add_option("--seed", spec.seed, "RNG seed")->capture_default_str();
  gen->add_option("--subjects", spec.n_subjects, "Number of subjects")->capture_default_str();
  gen->add_option("--pair-fraction", spec.pair_fraction, "P(hip has an XR)")->capture_default_str();
  gen->add_option("--abnormal-fraction", spec.abnormal_fraction, "Abnormality rate at alpha threshold")
      ->capture_default_str();
  gen->add_option("--alpha-noise-sd", spec.alpha_noise.sd)->capture_default_str();
  gen->add_option("--alpha-noise-bias", spec.alpha_noise.bias)->capture_default_str();
  gen->add_option("--cov-noise-sd", spec.cov_noise.sd)->capture_default_str();
  gen->add_option("--cov-noise-bias", spec.cov_noise.bias)->capture_default_str();
  gen->add_option("--unlabeled-xr-fraction", spec.unlabeled_xr_fraction)->capture_default_str();
  gen->add_option("--post-train-fraction", spec.post_train_fraction)->capture_default_str();
  gen->add_option("--calibration-fraction", spec.calibration_fraction)->capture_default_str();

  PipelineFlags cal_flags, sweep_flags, dc_flags, run_flags;
  auto* cal = app.add_subcommand("calibrate", "Fit affine corrections and conformal radii");
  add_pipeline_flags(cal, cal_flags, true);
  auto* sweep = app.add_subcommand("sweep", "Evaluate every policy cell on strict evaluation pairs");
  add_pipeline_flags(sweep, sweep_flags, true);
  auto* dc = app.add_subcommand("decision-curve", "Utility envelope from a stored decision cube");
  add_pipeline_flags(dc, dc_flags, false);
  auto* run = app.add_subcommand("run", "calibrate + sweep + decision-curve");
  add_pipeline_flags(run, run_flags, true);
  run->add_option("--serve", run_flags.serve_port, "Serve the API on this port afterwards");

  std::string serve_dir = "run", host = "127.0.0.1";
  int port = 8080;
  auto* srv = app.add_subcommand("serve", "Serve the operating-point API for a run directory");
  srv->add_option("--run-dir,--out", serve_dir, "Run directory")->capture_default_str();
  srv->add_option("--host", host)->capture_default_str();
  srv->add_option("--port", port)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (gen->parsed()) return report(cmd_generate(spec, gen_out));
    if (cal->parsed()) return report(cmd_calibrate(to_config(cal_flags)));
    if (sweep->parsed()) return report(cmd_sweep(to_config(sweep_flags)));
    if (dc->parsed()) return report(cmd_decision_curve(to_config(dc_flags)));
    if (run->parsed()) {
      const RunConfig config = to_config(run_flags);
      const int code = report(cmd_run(config));
      if (code != kExitOk || run_flags.serve_port < 0) return code;
      return serve(config.out.string(), host, run_flags.serve_port);
    }
    if (srv->parsed()) return serve(serve_dir, host, port);
  } catch (const InvalidArgument& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
