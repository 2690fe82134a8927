#include "usfirst/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <fmt/format.h>

#include "json.hpp"
#include "usfirst/errors.hpp"

namespace usfirst {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Relative band inside which two objectives count as tied.
constexpr double kTieTolerance = 1e-12;

void require_same_size(const Eigen::Ref<const Eigen::VectorXd>& pred,
                       const Eigen::Ref<const Eigen::VectorXd>& label) {
  if (pred.size() != label.size()) {
    throw InvalidArgument(fmt::format("pred and label sizes differ ({} vs {})", pred.size(),
                                      label.size()));
  }
}

double lower_median(std::vector<double> values) {
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

}  // namespace

double lad_objective(const Eigen::Ref<const Eigen::VectorXd>& pred,
                     const Eigen::Ref<const Eigen::VectorXd>& label, double a, double b) {
  require_same_size(pred, label);
  return ((a * pred.array() + b) - label.array()).abs().sum();
}

AffineCorrection fit_affine_lad(const Eigen::Ref<const Eigen::VectorXd>& pred,
                                const Eigen::Ref<const Eigen::VectorXd>& label, Target target) {
  require_same_size(pred, label);
  const Eigen::Index n = pred.size();
  if (n < 2) throw InsufficientData("fit_affine_lad needs at least 2 points");
  if (!pred.allFinite() || !label.allFinite()) {
    throw InvalidArgument("fit_affine_lad: non-finite input");
  }

  AffineCorrection out;
  out.target = target;
  out.n_fit = static_cast<std::size_t>(n);

  const double spread = pred.maxCoeff() - pred.minCoeff();
  if (spread <= 1e-9 * std::max(1.0, pred.cwiseAbs().maxCoeff())) {
    const Eigen::VectorXd shift = label - pred;
    out.a = 1.0;
    out.b = lower_median(std::vector<double>(shift.data(), shift.data() + n));
    out.fallback = true;
    return out;
  }

  struct Slope {
    double value;
    double weight;
  };
  std::vector<Slope> slopes;
  slopes.reserve(static_cast<std::size_t>(n));

  double best_obj = kInf;
  double best_a = 0.0;
  double best_b = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    slopes.clear();
    double total_weight = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double dx = pred(j) - pred(i);
      if (dx == 0.0) continue;
      slopes.push_back({(label(j) - label(i)) / dx, std::abs(dx)});
      total_weight += std::abs(dx);
    }
    if (slopes.empty()) continue;
    std::sort(slopes.begin(), slopes.end(),
              [](const Slope& l, const Slope& r) { return l.value < r.value; });

    // Restricted to lines through point i the objective is
    // sum_j w_j |a - s_j| + const, minimised at the weighted median.
    double cumulative = 0.0;
    double a = slopes.back().value;
    for (const auto& s : slopes) {
      cumulative += s.weight;
      if (2.0 * cumulative >= total_weight * (1.0 - kTieTolerance)) {
        a = s.value;
        break;
      }
    }
    const double b = label(i) - a * pred(i);
    const double obj = lad_objective(pred, label, a, b);
    const double tol = kTieTolerance * std::max(1.0, best_obj == kInf ? obj : best_obj);
    if (obj < best_obj - tol ||
        (std::abs(obj - best_obj) <= tol && std::tie(a, b) < std::tie(best_a, best_b))) {
      best_obj = std::min(obj, best_obj);
      best_a = a;
      best_b = b;
    }
  }
  out.a = best_a;
  out.b = best_b;
  return out;
}

std::size_t conformal_rank(std::size_t n_cal, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw InvalidArgument("rho must lie in (0, 1)");
  const double level = static_cast<double>(n_cal + 1) * (1.0 - rho);
  // The small offset keeps exact products such as 10 * 0.9 from rounding up.
  return static_cast<std::size_t>(std::ceil(level - 1e-9));
}

ConformalRadius conformal_radius(const Eigen::Ref<const Eigen::VectorXd>& residuals, double rho,
                                 Target target) {
  if (residuals.size() == 0) throw EmptyResiduals("conformal_radius needs residuals");
  ConformalRadius out;
  out.target = target;
  out.rho = rho;
  out.n_cal = static_cast<std::size_t>(residuals.size());
  out.k = conformal_rank(out.n_cal, rho);
  if (out.k > out.n_cal) {
    out.q_plus = kInf;
    return out;
  }
  std::vector<double> scores(out.n_cal);
  for (std::size_t i = 0; i < out.n_cal; ++i) scores[i] = -residuals(static_cast<Eigen::Index>(i));
  std::sort(scores.begin(), scores.end());
  out.q_plus = scores[out.k - 1];
  return out;
}

double lower_bound(double pred_raw, const LowerBoundParams& params) {
  if (params.radius.never_certifies()) return -kInf;
  return params.correction.apply(pred_raw) - (1.0 + params.delta) * params.radius.q_plus;
}

double empirical_coverage(const std::vector<LabeledPrediction>& eval_set,
                          const LowerBoundParams& params) {
  if (eval_set.empty()) throw EmptyEvalSet("empirical_coverage needs a nonempty eval set");
  std::size_t covered = 0;
  for (const auto& item : eval_set) {
    if (item.label >= lower_bound(item.pred_raw, params)) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(eval_set.size());
}

TargetCalibrator calibrate_target(const std::vector<LabeledPrediction>& cal_set, double rho,
                                  Target target, bool split_halves) {
  const std::size_t n = cal_set.size();
  const std::size_t n_fit = split_halves ? n / 2 : n;
  if (n_fit < 2 || (split_halves && n - n_fit < 1)) {
    throw InsufficientData(fmt::format("calibration for {} needs more labeled items (have {})",
                                       to_string(target), n));
  }
  Eigen::VectorXd pred(static_cast<Eigen::Index>(n));
  Eigen::VectorXd label(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    pred(static_cast<Eigen::Index>(i)) = cal_set[i].pred_raw;
    label(static_cast<Eigen::Index>(i)) = cal_set[i].label;
  }
  const auto fit_n = static_cast<Eigen::Index>(n_fit);
  TargetCalibrator out;
  out.correction = fit_affine_lad(pred.head(fit_n), label.head(fit_n), target);

  const Eigen::Index first = split_halves ? fit_n : 0;
  const Eigen::Index count = static_cast<Eigen::Index>(n) - first;
  const Eigen::VectorXd corrected =
      out.correction.a * pred.segment(first, count).array() + out.correction.b;
  const Eigen::VectorXd residuals = label.segment(first, count) - corrected;
  out.radius = conformal_radius(residuals, rho, target);
  return out;
}

std::string calibrator_to_json(const TargetCalibrator& c) {
  nlohmann::ordered_json j;
  j["target"] = std::string(to_string(c.correction.target));
  j["a"] = c.correction.a;
  j["b"] = c.correction.b;
  j["rho"] = c.radius.rho;
  if (c.radius.never_certifies()) {
    j["q_plus"] = "+inf";
  } else {
    j["q_plus"] = c.radius.q_plus;
  }
  j["n_cal"] = c.radius.n_cal;
  j["fallback_flag"] = c.correction.fallback;
  j["n_fit"] = c.correction.n_fit;
  j["k"] = c.radius.k;
  return j.dump(2) + "\n";
}

TargetCalibrator calibrator_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    TargetCalibrator c;
    auto target = parse_target(j.at("target").get<std::string>());
    if (!target) throw ParseError("calibrator: unknown target");
    c.correction.target = *target;
    c.correction.a = j.at("a").get<double>();
    c.correction.b = j.at("b").get<double>();
    c.correction.fallback = j.at("fallback_flag").get<bool>();
    c.radius.target = *target;
    c.radius.rho = j.at("rho").get<double>();
    c.radius.n_cal = j.at("n_cal").get<std::size_t>();
    c.correction.n_fit = j.value("n_fit", c.radius.n_cal);
    c.radius.k = j.contains("k") ? j.at("k").get<std::size_t>()
                                 : conformal_rank(c.radius.n_cal, c.radius.rho);
    const auto& q = j.at("q_plus");
    if (q.is_string()) {
      if (q.get<std::string>() != "+inf") throw ParseError("calibrator: bad q_plus literal");
      c.radius.q_plus = kInf;
    } else {
      c.radius.q_plus = q.get<double>();
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("calibrator JSON: ") + e.what());
  }
}

}  // namespace usfirst
