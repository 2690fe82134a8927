#include "usfirst/app/service.hpp"

#include <cmath>

#include <fmt/format.h>

#include "httplib.h"
#include "json.hpp"
#include "usfirst/errors.hpp"
#include "usfirst/text_io.hpp"

namespace usfirst::app {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

HttpResponse json_response(int status, const ordered_json& j) { return {status, j.dump()}; }

HttpResponse error_response(int status, const std::string& message) {
  return json_response(status, ordered_json{{"error", message}});
}

ordered_json opt(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

// Non-finite values (the never-certify bound) are not valid JSON numbers.
ordered_json finite_or_string(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(format_number(v));
}

ordered_json metrics_json(const CellMetrics& m) {
  return {{"family", std::string(to_string(m.family))},
          {"delta_alpha", m.delta_alpha},
          {"delta_cov", m.delta_cov},
          {"us_only_rate", m.us_only_rate},
          {"xr_use", m.xr_use},
          {"miss_rate", opt(m.miss_rate)},
          {"n_pairs", m.n_pairs},
          {"n_us_only", m.n_us_only},
          {"n_missed", m.n_missed},
          {"cov_alpha", opt(m.cov_alpha)},
          {"cov_cov", opt(m.cov_cov)}};
}

ordered_json calibrator_json(const TargetCalibrator& c) {
  return {{"a", c.correction.a},
          {"b", c.correction.b},
          {"fallback_flag", c.correction.fallback},
          {"rho", c.radius.rho},
          {"n_cal", c.radius.n_cal},
          {"k", c.radius.k},
          {"q_plus", finite_or_string(c.radius.q_plus)}};
}

// Query value as a finite number; nullopt when absent. Throws on garbage.
std::optional<double> query_number(const QueryParams& q, std::string_view key) {
  const auto it = q.find(key);
  if (it == q.end()) return std::nullopt;
  const auto v = parse_number(it->second);
  if (!v || !std::isfinite(*v)) {
    throw InvalidArgument(fmt::format("query parameter {} must be a finite number", key));
  }
  if (*v < 0.0) throw OutOfRange(fmt::format("query parameter {} must be >= 0", key));
  return v;
}

std::string_view strip_trailing_slash(std::string_view path) {
  while (path.size() > 1 && path.back() == '/') path.remove_suffix(1);
  return path;
}

}  // namespace

RunService RunService::load(const fs::path& run_dir) {
  RunService s;
  s.config_ = run_config_from_json(read_file(run_dir / "run_config.json"));
  s.config_.out = run_dir;
  s.calibs_ = load_calibrators(run_dir);
  s.pairs_ = pairs_from_csv(read_file(run_dir / "pairs.csv"));
  s.cube_ = cube_from_csv(read_file(run_dir / "decision_cube.csv"));
  if (s.cube_.pair_ids.size() != s.pairs_.size()) {
    throw ParseError("decision_cube.csv and pairs.csv disagree on the pair list");
  }
  for (std::size_t j = 0; j < s.pairs_.size(); ++j) {
    if (s.cube_.pair_ids[j] != s.pairs_[j].pair_id) {
      throw ParseError("decision_cube.csv and pairs.csv disagree on the pair order");
    }
    s.cube_.z[j] = s.pairs_[j].z;
  }
  s.eval_us_ = eval_us_from_csv(read_file(run_dir / "eval_us.csv"));
  try {
    s.metrics_ = grid_metrics(s.cube_, s.eval_us_, s.calibs_);
  } catch (const NoLabeledPairs&) {
    s.metrics_.clear();
  }
  return s;
}

HttpResponse RunService::handle(std::string_view method, std::string_view path,
                                const QueryParams& query, std::string_view body) const {
  path = strip_trailing_slash(path);
  const bool known = path == "/run/meta" || path == "/grid" || path == "/curve" || path == "/whatif";
  if (!known) return error_response(404, fmt::format("no such endpoint: {}", path));
  const std::string_view want = path == "/whatif" ? "POST" : "GET";
  if (method != want) return error_response(405, fmt::format("{} expects {}", path, want));
  try {
    if (path == "/run/meta") return meta();
    if (path == "/grid") return grid(query);
    if (path == "/curve") return curve(query);
    return whatif(body);
  } catch (const InvalidArgument& e) {
    return error_response(400, e.what());
  } catch (const Error& e) {
    return error_response(422, e.what());
  }
}

HttpResponse RunService::meta() const {
  ordered_json j;
  j["config"] = ordered_json::parse(to_json(config_));
  j["n_pairs"] = pairs_.size();
  std::size_t labeled = 0;
  for (const auto& p : pairs_) labeled += p.z != Abnormality::Unknown ? 1 : 0;
  j["n_labeled_pairs"] = labeled;
  j["n_eval_us"] = {{"alpha", eval_us_.alpha.size()}, {"coverage", eval_us_.coverage.size()}};
  j["deltas"] = cube_.deltas;
  j["families"] = ordered_json::array();
  for (auto f : cube_.families) j["families"].push_back(std::string(to_string(f)));
  j["calibrators"] = {{"alpha", calibrator_json(calibs_.alpha)},
                      {"coverage", calibrator_json(calibs_.coverage)}};
  return json_response(200, j);
}

HttpResponse RunService::grid(const QueryParams& query) const {
  std::optional<RuleFamily> family;
  if (const auto it = query.find("family"); it != query.end()) {
    family = parse_family(it->second);
    if (!family) throw InvalidArgument(fmt::format("unknown family \"{}\"", it->second));
  }
  const auto mu = query_number(query, "mu");
  const auto lambda = query_number(query, "lambda");
  if (mu.has_value() != lambda.has_value()) {
    throw InvalidArgument("mu and lambda must be given together");
  }
  std::optional<UtilityParams> params;
  if (mu) {
    params = UtilityParams{*lambda, *mu};
  }
  if (metrics_.empty()) throw NoLabeledPairs("run has no pairs with XR ground truth");

  ordered_json cells = ordered_json::array();
  for (std::size_t i = 0; i < cube_.cells.size(); ++i) {
    const auto& cell = cube_.cells[i];
    if (family && cell.family != *family) continue;
    ordered_json c = metrics_json(metrics_[i]);
    if (params) c["utility"] = cell_utility(cell.decisions, cube_.z, *params).utility;
    cells.push_back(std::move(c));
  }
  ordered_json j;
  j["deltas"] = cube_.deltas;
  if (params) {
    const auto base = baselines(cube_.z, *params);
    j["lambda"] = params->lambda;
    j["mu"] = params->mu;
    j["baseline_all"] = base.acquire_all;
    j["baseline_none"] = base.acquire_none;
  }
  j["cells"] = std::move(cells);
  return json_response(200, j);
}

HttpResponse RunService::curve(const QueryParams& query) const {
  const auto mu = query_number(query, "mu");
  if (!mu) throw InvalidArgument("mu is required");
  const auto points = envelope(cube_, cube_.z, config_.lambda_grid, {*mu});
  ordered_json arr = ordered_json::array();
  for (const auto& p : points) {
    arr.push_back({{"lambda", p.lambda},
                   {"utility", p.utility},
                   {"xr_use", p.xr_use},
                   {"best_family", p.best_family},
                   {"best_delta_alpha", opt(p.best_delta_alpha)},
                   {"best_delta_cov", opt(p.best_delta_cov)},
                   {"baseline_all", p.baseline_all},
                   {"baseline_none", p.baseline_none}});
  }
  return json_response(200, ordered_json{{"mu", *mu}, {"points", std::move(arr)}});
}

HttpResponse RunService::whatif(std::string_view body) const {
  RuleFamily family;
  double da = 0.0, dc = 0.0;
  try {
    const auto j = nlohmann::json::parse(body);
    const auto f = parse_family(j.at("family").get<std::string>());
    if (!f) throw InvalidArgument("unknown family");
    family = *f;
    da = j.at("delta_alpha").get<double>();
    dc = j.at("delta_cov").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("body must be {family, delta_alpha, delta_cov}: ") + e.what());
  }
  const double lo = cube_.deltas.front(), hi = cube_.deltas.back();
  for (const double d : {da, dc}) {
    if (!std::isfinite(d) || d < 0.0 || d < lo || d > hi) {
      throw OutOfRange(fmt::format("delta {} outside the swept range [{}, {}]", d, lo, hi));
    }
  }

  const PolicySpec spec{family, config_.thresholds, da, dc, config_.rho};
  std::vector<Decision> decisions;
  decisions.reserve(pairs_.size());
  for (const auto& p : pairs_) decisions.push_back(decide(p.pred, p.ossific, calibs_, spec));

  ordered_json per_pair = ordered_json::array();
  for (std::size_t j = 0; j < pairs_.size(); ++j) {
    const auto& d = decisions[j];
    per_pair.push_back({{"pair_id", pairs_[j].pair_id},
                        {"d", d.d()},
                        {"lb_alpha", d.lb_alpha ? finite_or_string(*d.lb_alpha) : nullptr},
                        {"lb_cov", d.lb_cov ? finite_or_string(*d.lb_cov) : nullptr},
                        {"missing", d.missing_measurement}});
  }
  ordered_json out;
  out["on_grid"] = cube_.find(family, da, dc) != nullptr;
  out["metrics"] = metrics_json(cell_metrics(decisions, cube_.z, eval_us_, calibs_, family, da, dc));
  out["decisions"] = std::move(per_pair);
  return json_response(200, out);
}

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(const RunService& service) : impl_(std::make_unique<Impl>()) {
  auto route = [&service](const httplib::Request& req, httplib::Response& res) {
    QueryParams query;
    for (const auto& [k, v] : req.params) query.emplace(k, v);
    const HttpResponse r = service.handle(req.method, req.path, query, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  impl_->server.Get(".*", route);
  impl_->server.Post(".*", route);
  impl_->server.Put(".*", route);
  impl_->server.Delete(".*", route);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace usfirst::app
