#include "usfirst/decision_curve.hpp"

#include <cmath>
#include <tuple>

#include <fmt/format.h>

#include "usfirst/errors.hpp"
#include "usfirst/text_io.hpp"

namespace usfirst {
namespace {

constexpr double kUtilityTieTolerance = 1e-12;

struct Counts {
  std::size_t n = 0;
  std::size_t n_xr = 0;
  std::size_t n_missed = 0;
};

Counts count(std::span<const Decision> decisions, std::span<const Abnormality> z) {
  if (decisions.size() != z.size()) throw InvalidArgument("decisions and z are not aligned");
  Counts c;
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (z[j] == Abnormality::Unknown) continue;
    ++c.n;
    if (!decisions[j].us_only) {
      ++c.n_xr;
    } else if (z[j] == Abnormality::Abnormal) {
      ++c.n_missed;
    }
  }
  return c;
}

CellUtility utility_from_counts(const Counts& c, const UtilityParams& p) {
  const double n = static_cast<double>(c.n);
  return {0.0 - (p.lambda * static_cast<double>(c.n_xr) + p.mu * static_cast<double>(c.n_missed)) / n,
          static_cast<double>(c.n_xr) / n};
}

struct Candidate {
  std::string family;
  std::optional<double> da;
  std::optional<double> dc;
  double utility;
  double xr_use;
};

// True when `c` should replace `best`.
bool better(const Candidate& c, const Candidate& best) {
  if (c.utility > best.utility + kUtilityTieTolerance) return true;
  if (c.utility < best.utility - kUtilityTieTolerance) return false;
  if (c.xr_use != best.xr_use) return c.xr_use > best.xr_use;
  const double inf = INFINITY;
  return std::make_tuple(c.family, c.da.value_or(-inf), c.dc.value_or(-inf)) <
         std::make_tuple(best.family, best.da.value_or(-inf), best.dc.value_or(-inf));
}

}  // namespace

void validate(const UtilityParams& p) {
  if (!std::isfinite(p.lambda) || !std::isfinite(p.mu) || p.lambda < 0.0 || p.mu < 0.0) {
    throw InvalidArgument("utility weights must be finite and >= 0");
  }
}

double pair_utility(bool us_only, Abnormality z, const UtilityParams& p) {
  if (z == Abnormality::Unknown) throw UnknownAbnormality("pair has no XR ground truth");
  const double d = us_only ? 1.0 : 0.0;
  const double zz = z == Abnormality::Abnormal ? 1.0 : 0.0;
  return 0.0 - p.lambda * (1.0 - d) - p.mu * zz * d;
}

BaselineUtilities baselines(std::span<const Abnormality> z, const UtilityParams& p) {
  std::size_t n = 0, n_abnormal = 0;
  for (auto v : z) {
    if (v == Abnormality::Unknown) continue;
    ++n;
    if (v == Abnormality::Abnormal) ++n_abnormal;
  }
  if (n == 0) throw NoLabeledPairs("baselines need pairs with XR ground truth");
  return {0.0 - p.lambda, 0.0 - p.mu * static_cast<double>(n_abnormal) / static_cast<double>(n)};
}

CellUtility cell_utility(std::span<const Decision> decisions, std::span<const Abnormality> z,
                         const UtilityParams& params) {
  const Counts c = count(decisions, z);
  if (c.n == 0) throw NoLabeledPairs("cell utility needs pairs with XR ground truth");
  return utility_from_counts(c, params);
}

std::vector<EnvelopePoint> envelope(const DecisionCube& cube, std::span<const Abnormality> z,
                                    const std::vector<double>& lambda_grid,
                                    const std::vector<double>& mu_list) {
  std::vector<Counts> counts;
  counts.reserve(cube.cells.size());
  for (const auto& cell : cube.cells) counts.push_back(count(cell.decisions, z));

  std::vector<EnvelopePoint> out;
  for (const double mu : mu_list) {
    for (const double lambda : lambda_grid) {
      const UtilityParams p{lambda, mu};
      validate(p);
      const BaselineUtilities base = baselines(z, p);
      Candidate best{kAcquireAll, std::nullopt, std::nullopt, base.acquire_all, 1.0};
      const Candidate none{kAcquireNone, std::nullopt, std::nullopt, base.acquire_none, 0.0};
      if (better(none, best)) best = none;
      for (std::size_t i = 0; i < cube.cells.size(); ++i) {
        const auto& cell = cube.cells[i];
        const CellUtility u = utility_from_counts(counts[i], p);
        Candidate c{std::string(to_string(cell.family)), cell.delta_alpha, cell.delta_cov,
                    u.utility, u.xr_use};
        if (better(c, best)) best = std::move(c);
      }
      out.push_back({lambda, mu, best.family, best.da, best.dc, best.utility, best.xr_use,
                     base.acquire_all, base.acquire_none});
    }
  }
  return out;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(i / 20.0);
  return grid;
}

std::vector<double> default_mu_list() { return {0.0, 0.5}; }

std::string decision_curve_csv(const std::vector<EnvelopePoint>& points) {
  std::string out = "mu,lambda,utility,best_family,best_da,best_dc,baseline_all,baseline_none\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  for (const auto& p : points) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", format_number(p.mu), format_number(p.lambda),
                       format_number(p.utility), p.best_family, opt(p.best_delta_alpha),
                       opt(p.best_delta_cov), format_number(p.baseline_all),
                       format_number(p.baseline_none));
  }
  return out;
}

}  // namespace usfirst
