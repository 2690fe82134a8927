#pragma once

// Naive reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "usfirst/dataset.hpp"
#include "usfirst/geometry.hpp"

namespace oracle {

// Smallest sum |a x_i + b - y_i| over every line through two data points with
// distinct x. A 1-D affine LAD optimum always passes through two points.
// Falls back to the best horizontal shift when every x is equal.
inline double lad_min_objective(const std::vector<double>& x, const std::vector<double>& y) {
  auto objective = [&](double a, double b) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(a * x[i] + b - y[i]);
    return s;
  };
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      if (x[i] == x[j]) continue;
      any = true;
      const double a = (y[j] - y[i]) / (x[j] - x[i]);
      best = std::min(best, objective(a, y[i] - a * x[i]));
    }
  }
  if (!any) {
    for (std::size_t i = 0; i < x.size(); ++i) best = std::min(best, objective(1.0, y[i] - x[i]));
  }
  return best;
}

// Plain definition of the split-conformal radius: sort -r, take entry k.
inline double conformal_q(std::vector<double> neg_residuals, double rho) {
  std::sort(neg_residuals.begin(), neg_residuals.end());
  const double n = static_cast<double>(neg_residuals.size());
  std::size_t k = 0;
  while (static_cast<double>(k) < (n + 1.0) * (1.0 - rho) - 1e-9) ++k;
  if (k > neg_residuals.size()) return std::numeric_limits<double>::infinity();
  return neg_residuals[k - 1];
}

// Places an H-point in the requested IHDI region of a frame whose
// Hilgenreiner line is rotated by `tilt_deg`, with the lateral side chosen by
// hip side. Region boundaries are kept at least `margin` px away.
struct IhdiScene {
  usfirst::Line2D h_line, p_line, diag45;
  usfirst::Point2d h_point;
};

inline IhdiScene ihdi_scene(usfirst::IhdiGrade grade, usfirst::Side side, double tilt_deg,
                            usfirst::Point2d origin, double margin, std::mt19937_64& rng) {
  using usfirst::Point2d;
  const double t = tilt_deg * 3.14159265358979323846 / 180.0;
  // Patient right lies on the image left, so lateral is -x for a right hip.
  const double sx = side == usfirst::Side::Right ? -1.0 : 1.0;
  const Point2d lat = Point2d(std::cos(t), std::sin(t)) * sx;
  const Point2d inf = Point2d(-std::sin(t), std::cos(t));  // image y grows downward
  IhdiScene s;
  s.h_line = {origin - 100.0 * lat, origin + 100.0 * lat};
  s.p_line = {origin - 80.0 * inf, origin + 80.0 * inf};
  s.diag45 = {origin, origin + 60.0 * (lat + inf)};
  std::uniform_real_distribution<double> u(margin, 80.0);
  double l = 0.0, d = 0.0;  // lateral and inferior offsets
  switch (grade) {
    case usfirst::IhdiGrade::I:
      l = -u(rng);
      d = std::uniform_real_distribution<double>(-80.0, 80.0)(rng);
      break;
    case usfirst::IhdiGrade::II:
      l = u(rng);
      d = l + u(rng);
      break;
    case usfirst::IhdiGrade::III:
      d = u(rng);
      l = d + u(rng);
      break;
    case usfirst::IhdiGrade::IV:
      l = u(rng);
      d = -u(rng);
      break;
  }
  s.h_point = origin + l * lat + d * inf;
  return s;
}

// Envelope by exhaustive per-pair summation over every cell and both
// baselines, with the documented tie order.
struct Choice {
  std::string family;
  std::optional<double> da, dc;
  double utility = 0.0;
  double xr_use = 0.0;
};

inline double mean_pair_utility(const std::vector<int>& d, const std::vector<int>& z,
                                double lambda, double mu) {
  double s = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) s += -lambda * (1 - d[j]) - mu * z[j] * d[j];
  return s / static_cast<double>(d.size());
}

inline bool better(const Choice& c, const Choice& best) {
  if (c.utility > best.utility + 1e-12) return true;
  if (c.utility < best.utility - 1e-12) return false;
  if (c.xr_use != best.xr_use) return c.xr_use > best.xr_use;
  const double lo = -std::numeric_limits<double>::infinity();
  return std::make_tuple(c.family, c.da.value_or(lo), c.dc.value_or(lo)) <
         std::make_tuple(best.family, best.da.value_or(lo), best.dc.value_or(lo));
}

}  // namespace oracle
