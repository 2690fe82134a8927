#include "usfirst/app/run_config.hpp"

#include <cmath>

#include <fmt/format.h>

#include "json.hpp"
#include "usfirst/errors.hpp"
#include "usfirst/text_io.hpp"

namespace usfirst::app {

using nlohmann::ordered_json;

std::string to_json(const RunConfig& c) {
  ordered_json j;
  j["records"] = c.records.string();
  j["splits"] = c.splits.string();
  j["out"] = c.out.string();
  j["report"] = c.report_path().string();
  j["rho"] = c.rho;
  j["thresholds"] = {{"t_alpha", c.thresholds.t_alpha}, {"t_cov", c.thresholds.t_cov}};
  j["delta_grid"] = c.grid.deltas;
  j["families"] = ordered_json::array();
  for (auto f : c.grid.families) j["families"].push_back(std::string(to_string(f)));
  j["abnormality_rule"] = {{"ai_threshold", c.rule.ai_threshold},
                           {"ce_threshold", c.rule.ce_threshold},
                           {"ihdi_min_abnormal", std::string(to_string(c.rule.ihdi_min_abnormal))}};
  j["lambda_grid"] = c.lambda_grid;
  j["mu_list"] = c.mu_list;
  j["snapshots"] = ordered_json::array();
  for (const auto& s : c.snapshots) {
    j["snapshots"].push_back({{"family", std::string(to_string(s.family))},
                              {"delta_alpha", s.delta_alpha},
                              {"delta_cov", s.delta_cov}});
  }
  j["split_calibration"] = c.split_calibration;
  j["write_json_cube"] = c.write_json_cube;
  j["write_svg"] = c.write_svg;
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(std::string_view text) {
  RunConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    c.records = j.value("records", std::string());
    c.splits = j.value("splits", std::string());
    c.out = j.value("out", std::string("run"));
    c.report = j.value("report", std::string());
    c.rho = j.value("rho", c.rho);
    if (j.contains("thresholds")) {
      c.thresholds.t_alpha = j["thresholds"].at("t_alpha").get<std::array<double, 2>>();
      c.thresholds.t_cov = j["thresholds"].at("t_cov").get<std::array<double, 2>>();
    }
    if (j.contains("delta_grid")) c.grid.deltas = j["delta_grid"].get<std::vector<double>>();
    if (j.contains("families")) {
      c.grid.families.clear();
      for (const auto& f : j["families"]) {
        auto fam = parse_family(f.get<std::string>());
        if (!fam) throw ParseError("run config: unknown family");
        c.grid.families.push_back(*fam);
      }
    }
    if (j.contains("abnormality_rule")) {
      const auto& r = j["abnormality_rule"];
      c.rule.ai_threshold = r.value("ai_threshold", c.rule.ai_threshold);
      c.rule.ce_threshold = r.value("ce_threshold", c.rule.ce_threshold);
      if (r.contains("ihdi_min_abnormal")) {
        auto g = parse_ihdi(r["ihdi_min_abnormal"].get<std::string>());
        if (!g) throw ParseError("run config: bad ihdi_min_abnormal");
        c.rule.ihdi_min_abnormal = *g;
      }
    }
    if (j.contains("lambda_grid")) c.lambda_grid = j["lambda_grid"].get<std::vector<double>>();
    if (j.contains("mu_list")) c.mu_list = j["mu_list"].get<std::vector<double>>();
    if (j.contains("snapshots")) {
      c.snapshots.clear();
      for (const auto& s : j["snapshots"]) {
        auto fam = parse_family(s.at("family").get<std::string>());
        if (!fam) throw ParseError("run config: unknown snapshot family");
        c.snapshots.push_back({*fam, s.at("delta_alpha").get<double>(),
                               s.at("delta_cov").get<double>()});
      }
    }
    c.split_calibration = j.value("split_calibration", false);
    c.write_json_cube = j.value("write_json_cube", true);
    c.write_svg = j.value("write_svg", false);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("run config: ") + e.what());
  }
  return c;
}

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  for (const auto& field : split_csv_line(text)) {
    auto v = parse_number(field);
    if (!v || !std::isfinite(*v)) {
      throw InvalidArgument(fmt::format("expected comma-separated numbers, got \"{}\"", text));
    }
    out.push_back(*v);
  }
  return out;
}

std::vector<double> parse_lambda_grid(std::string_view text) {
  if (text.find(':') == std::string_view::npos) return parse_number_list(text);
  const auto first = text.find(':');
  const auto second = text.find(':', first + 1);
  if (second == std::string_view::npos) {
    throw InvalidArgument("lambda grid must be start:stop:count or a comma list");
  }
  auto start = parse_number(text.substr(0, first));
  auto stop = parse_number(text.substr(first + 1, second - first - 1));
  auto count = parse_number(text.substr(second + 1));
  if (!start || !stop || !count || *count < 1 || *count != std::floor(*count)) {
    throw InvalidArgument("lambda grid must be start:stop:count or a comma list");
  }
  const int n = static_cast<int>(*count);
  std::vector<double> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(n == 1 ? *start : *start + (*stop - *start) * i / (n - 1));
  }
  return out;
}

Thresholds parse_thresholds(std::string_view text) {
  const auto v = parse_number_list(text);
  Thresholds t;
  if (v.size() == 2) {
    t.t_alpha = {v[0], v[0]};
    t.t_cov = {v[1], v[1]};
  } else if (v.size() == 4) {
    t.t_alpha = {v[0], v[1]};
    t.t_cov = {v[2], v[3]};
  } else {
    throw InvalidArgument("thresholds must be \"t_alpha,t_cov\" or \"ta0,ta1,tc0,tc1\"");
  }
  return t;
}

AbnormalityRule parse_abnormality_rule(std::string_view text) {
  const auto f = split_csv_line(text);
  if (f.size() != 3) throw InvalidArgument("abnormality rule must be \"ai,ce,IHDI\", e.g. 30,20,II");
  auto ai = parse_number(f[0]);
  auto ce = parse_number(f[1]);
  auto grade = parse_ihdi(f[2]);
  if (!ai || !ce || !grade) {
    throw InvalidArgument("abnormality rule must be \"ai,ce,IHDI\", e.g. 30,20,II");
  }
  AbnormalityRule rule{*ai, *ce, *grade};
  validate(rule);
  return rule;
}

}  // namespace usfirst::app
