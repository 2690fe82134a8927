#include "usfirst/policy.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "json.hpp"
#include "usfirst/errors.hpp"
#include "usfirst/text_io.hpp"

namespace usfirst {

std::string_view to_string(RuleFamily family) {
  switch (family) {
    case RuleFamily::AlphaOnly: return "alpha_only";
    case RuleFamily::AlphaOrCov: return "alpha_or_cov";
    case RuleFamily::AlphaAndCov: return "alpha_and_cov";
  }
  return "?";
}

std::string_view short_label(RuleFamily family) {
  switch (family) {
    case RuleFamily::AlphaOnly: return "ALPHA";
    case RuleFamily::AlphaOrCov: return "OR";
    case RuleFamily::AlphaAndCov: return "AND";
  }
  return "?";
}

std::optional<RuleFamily> parse_family(std::string_view text) {
  if (text == "alpha_only" || text == "ALPHA" || text == "AlphaOnly") return RuleFamily::AlphaOnly;
  if (text == "alpha_or_cov" || text == "OR" || text == "AlphaOrCov") return RuleFamily::AlphaOrCov;
  if (text == "alpha_and_cov" || text == "AND" || text == "AlphaAndCov") {
    return RuleFamily::AlphaAndCov;
  }
  return std::nullopt;
}

Decision decide(const UsPrediction& pred, bool ossific, const Calibrators& calibs,
                const PolicySpec& spec) {
  Decision out;
  if (pred.alpha) {
    out.lb_alpha = lower_bound(*pred.alpha, calibs.alpha.with_delta(spec.delta_alpha));
    out.margin_alpha = *out.lb_alpha - spec.thresholds.alpha(ossific);
  }
  const bool uses_cov = spec.family != RuleFamily::AlphaOnly;
  if (uses_cov && pred.coverage) {
    out.lb_cov = lower_bound(*pred.coverage, calibs.coverage.with_delta(spec.delta_cov));
    out.margin_cov = *out.lb_cov - spec.thresholds.cov(ossific);
  }
  out.missing_measurement = !pred.alpha || (uses_cov && !pred.coverage);
  out.us_only = recompute_us_only(out, spec.family);
  return out;
}

bool recompute_us_only(const Decision& d, RuleFamily family) {
  if (d.missing_measurement || !d.margin_alpha) return false;
  const bool alpha_ok = *d.margin_alpha >= 0.0;
  if (family == RuleFamily::AlphaOnly) return alpha_ok;
  if (!d.margin_cov) return false;
  const bool cov_ok = *d.margin_cov >= 0.0;
  return family == RuleFamily::AlphaOrCov ? (alpha_ok || cov_ok) : (alpha_ok && cov_ok);
}

void validate(const PolicyGrid& grid) {
  if (grid.deltas.empty()) throw InvalidArgument("policy grid needs at least one delta");
  if (grid.families.empty()) throw InvalidArgument("policy grid needs at least one family");
  for (std::size_t i = 0; i < grid.deltas.size(); ++i) {
    const double d = grid.deltas[i];
    if (!std::isfinite(d) || d < 0.0) throw InvalidArgument("deltas must be finite and >= 0");
    if (i > 0 && !(d > grid.deltas[i - 1])) {
      throw InvalidArgument("deltas must be strictly increasing");
    }
  }
}

const CubeCell* DecisionCube::find(RuleFamily family, double delta_alpha, double delta_cov) const {
  const auto f = std::find(families.begin(), families.end(), family);
  const auto a = std::find(deltas.begin(), deltas.end(), delta_alpha);
  const auto c = std::find(deltas.begin(), deltas.end(), delta_cov);
  if (f == families.end() || a == deltas.end() || c == deltas.end()) return nullptr;
  return &cells[cell_index(static_cast<std::size_t>(f - families.begin()),
                           static_cast<std::size_t>(a - deltas.begin()),
                           static_cast<std::size_t>(c - deltas.begin()))];
}

UsPrediction us_prediction(const StrictPair& pair) {
  UsPrediction p;
  if (pair.us_record.predictions) {
    p.alpha = pair.us_record.predictions->alpha;
    p.coverage = pair.us_record.predictions->coverage;
  }
  return p;
}

DecisionCube sweep_grid(const std::vector<StrictPair>& pairs, const Calibrators& calibs,
                        const PolicyGrid& grid, const Thresholds& thresholds, double rho) {
  validate(grid);
  DecisionCube cube;
  cube.deltas = grid.deltas;
  cube.families = grid.families;
  std::vector<UsPrediction> preds;
  std::vector<bool> ossific;
  for (const auto& p : pairs) {
    cube.pair_ids.push_back(p.pair_id);
    cube.z.push_back(p.z);
    preds.push_back(us_prediction(p));
    ossific.push_back(ossific_flag(p.us_record));
  }

  auto evaluate = [&](RuleFamily family, double da, double dc) {
    const PolicySpec spec{family, thresholds, da, dc, rho};
    std::vector<Decision> out;
    out.reserve(pairs.size());
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      out.push_back(decide(preds[j], ossific[j], calibs, spec));
    }
    return out;
  };

  cube.cells.reserve(grid.families.size() * grid.deltas.size() * grid.deltas.size());
  for (const RuleFamily family : grid.families) {
    for (const double da : grid.deltas) {
      std::vector<Decision> alpha_only;
      if (family == RuleFamily::AlphaOnly) alpha_only = evaluate(family, da, grid.deltas.front());
      for (const double dc : grid.deltas) {
        CubeCell cell{family, da, dc, {}};
        if (family == RuleFamily::AlphaOnly) {
          cell.decisions = alpha_only;
        } else {
          cell.decisions = evaluate(family, da, dc);
        }
        cube.cells.push_back(std::move(cell));
      }
    }
  }
  return cube;
}

namespace {

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

}  // namespace

std::string cube_to_csv(const DecisionCube& cube) {
  std::string out =
      "family,delta_alpha,delta_cov,pair_id,d,lb_alpha,lb_cov,margin_alpha,margin_cov,missing\n";
  for (const auto& cell : cube.cells) {
    const std::string prefix = fmt::format("{},{},{},", to_string(cell.family),
                                           format_number(cell.delta_alpha),
                                           format_number(cell.delta_cov));
    for (std::size_t j = 0; j < cell.decisions.size(); ++j) {
      const auto& d = cell.decisions[j];
      out += prefix;
      out += fmt::format("{},{},{},{},{},{},{}\n", cube.pair_ids[j], d.d(), opt_number(d.lb_alpha),
                         opt_number(d.lb_cov), opt_number(d.margin_alpha),
                         opt_number(d.margin_cov), d.missing_measurement ? 1 : 0);
    }
  }
  return out;
}

std::string cube_to_json(const DecisionCube& cube) {
  using nlohmann::ordered_json;
  auto num = [](const std::optional<double>& v) -> ordered_json {
    if (!v) return nullptr;
    if (std::isinf(*v)) return *v > 0 ? "+inf" : "-inf";
    return *v;
  };
  ordered_json doc;
  doc["pair_ids"] = cube.pair_ids;
  doc["z"] = ordered_json::array();
  for (auto z : cube.z) doc["z"].push_back(std::string(to_string(z)));
  doc["deltas"] = cube.deltas;
  doc["families"] = ordered_json::array();
  for (auto f : cube.families) doc["families"].push_back(std::string(to_string(f)));
  doc["cells"] = ordered_json::array();
  for (const auto& cell : cube.cells) {
    ordered_json c;
    c["family"] = std::string(to_string(cell.family));
    c["delta_alpha"] = cell.delta_alpha;
    c["delta_cov"] = cell.delta_cov;
    c["decisions"] = ordered_json::array();
    for (const auto& d : cell.decisions) {
      c["decisions"].push_back({{"d", d.d()},
                                {"lb_alpha", num(d.lb_alpha)},
                                {"lb_cov", num(d.lb_cov)},
                                {"margin_alpha", num(d.margin_alpha)},
                                {"margin_cov", num(d.margin_cov)},
                                {"missing", d.missing_measurement}});
    }
    doc["cells"].push_back(std::move(c));
  }
  return doc.dump(1) + "\n";
}

DecisionCube cube_from_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || split_csv_line(lines.front()).size() != 10) {
    throw ParseError("decision cube CSV: bad header");
  }
  DecisionCube cube;
  auto add_unique = [](auto& vec, const auto& v) {
    if (std::find(vec.begin(), vec.end(), v) == vec.end()) vec.push_back(v);
  };
  std::vector<std::tuple<RuleFamily, double, double, std::string, Decision>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 10) throw ParseError(fmt::format("decision cube CSV: row {} malformed", i));
    auto family = parse_family(f[0]);
    auto da = parse_number(f[1]);
    auto dc = parse_number(f[2]);
    if (!family || !da || !dc) throw ParseError(fmt::format("decision cube CSV: row {} malformed", i));
    Decision d;
    d.us_only = f[4] == "1";
    d.lb_alpha = parse_number(f[5]);
    d.lb_cov = parse_number(f[6]);
    d.margin_alpha = parse_number(f[7]);
    d.margin_cov = parse_number(f[8]);
    d.missing_measurement = f[9] == "1";
    add_unique(cube.families, *family);
    add_unique(cube.deltas, *da);
    add_unique(cube.pair_ids, f[3]);
    rows.emplace_back(*family, *da, *dc, f[3], d);
  }
  std::sort(cube.deltas.begin(), cube.deltas.end());
  const std::size_t nd = cube.deltas.size();
  const std::size_t np = cube.pair_ids.size();
  cube.cells.resize(cube.families.size() * nd * nd);
  for (std::size_t fi = 0; fi < cube.families.size(); ++fi) {
    for (std::size_t a = 0; a < nd; ++a) {
      for (std::size_t c = 0; c < nd; ++c) {
        auto& cell = cube.cells[cube.cell_index(fi, a, c)];
        cell.family = cube.families[fi];
        cell.delta_alpha = cube.deltas[a];
        cell.delta_cov = cube.deltas[c];
      }
    }
  }
  for (auto& [family, da, dc, pair_id, d] : rows) {
    const std::size_t fi = static_cast<std::size_t>(
        std::find(cube.families.begin(), cube.families.end(), family) - cube.families.begin());
    const std::size_t a = static_cast<std::size_t>(
        std::find(cube.deltas.begin(), cube.deltas.end(), da) - cube.deltas.begin());
    const auto cit = std::find(cube.deltas.begin(), cube.deltas.end(), dc);
    if (cit == cube.deltas.end()) throw ParseError("decision cube CSV: delta_cov off the grid");
    auto& cell = cube.cells[cube.cell_index(fi, a, static_cast<std::size_t>(cit - cube.deltas.begin()))];
    cell.decisions.push_back(d);
    const std::size_t j = cell.decisions.size() - 1;
    if (j >= np || cube.pair_ids[j] != pair_id) {
      throw ParseError("decision cube CSV: pair order differs between cells");
    }
  }
  for (const auto& cell : cube.cells) {
    if (cell.decisions.size() != np) throw ParseError("decision cube CSV: incomplete cell");
  }
  cube.z.assign(np, Abnormality::Unknown);
  return cube;
}

}  // namespace usfirst
