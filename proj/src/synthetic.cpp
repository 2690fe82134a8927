#include "usfirst/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "usfirst/errors.hpp"
#include "usfirst/text_io.hpp"

namespace usfirst {

double uniform_open01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double sample_truncated_normal(std::mt19937_64& rng, double mean, double sd, double lo, double hi) {
  const double u = uniform_open01(rng);
  if (sd == 0.0) return std::clamp(mean, lo, hi);
  const boost::math::normal_distribution<double> unit;
  const double a = boost::math::cdf(unit, (lo - mean) / sd);
  const double b = boost::math::cdf(unit, (hi - mean) / sd);
  const double p = a + u * (b - a);
  if (!(p > 0.0 && p < 1.0)) return std::clamp(mean, lo, hi);
  return std::clamp(mean + sd * boost::math::quantile(unit, p), lo, hi);
}

namespace {

bool in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

void require_angle(const std::optional<double>& v, const char* name) {
  if (!v) throw OutOfRange(fmt::format("{} is required", name));
  if (!(std::isfinite(*v) && *v >= 0.0 && *v <= 90.0)) {
    throw OutOfRange(fmt::format("{} must lie in [0, 90] degrees", name));
  }
}

Point2d lateral_unit(Side side) { return side == Side::Right ? Point2d(-1, 0) : Point2d(1, 0); }

// Direction at `deg` from the horizontal, rising toward the image top.
Point2d rising(double deg) {
  const double rad = deg_to_rad(deg);
  return {std::cos(rad), -std::sin(rad)};
}

}  // namespace

UsAnnotation annotate_us_from_truth(const Measurements& m, Side side) {
  require_angle(m.alpha, "alpha");
  require_angle(m.beta, "beta");
  if (!m.coverage || !(std::isfinite(*m.coverage) && *m.coverage >= 0.0 && *m.coverage <= 100.0)) {
    throw OutOfRange("coverage must be present and lie in [0, 100]");
  }
  UsAnnotation a;
  a.side = side;
  const Point2d hinge(256.0, 240.0);
  a.baseline = {Point2d(96.0, 240.0), Point2d(416.0, 240.0)};
  a.alpha_line = {hinge, hinge + 120.0 * rising(*m.alpha)};
  // beta opens on the other side of the hinge
  const Point2d beta_dir = rising(*m.beta);
  a.beta_line = {hinge, hinge + 100.0 * Point2d(-beta_dir.x(), beta_dir.y())};
  a.total_len = 200.0;
  a.exposed_len = 2.0 * *m.coverage;
  if (m.ossific_flag) a.ossific_point = Point2d(300.0, 300.0);
  return a;
}

XrAnnotation annotate_xr_from_truth(const Measurements& m, Side side) {
  require_angle(m.ai, "ai");
  require_angle(m.ce, "ce");
  if (!m.ihdi) throw OutOfRange("ihdi is required");
  const Point2d lat = lateral_unit(side);
  const Point2d inf(0.0, 1.0);  // inferior, image y grows downward
  const Point2d origin(512.0, 300.0);

  XrAnnotation a;
  a.side = side;
  a.h_line = {origin - 200.0 * lat, origin + 200.0 * lat};
  a.p_line = {origin - 150.0 * inf, origin + 250.0 * inf};
  a.diag45_line = {origin, origin + 150.0 * (lat + inf)};
  switch (*m.ihdi) {
    case IhdiGrade::I: a.h_point = origin - 30.0 * lat + 20.0 * inf; break;
    case IhdiGrade::II: a.h_point = origin + 20.0 * lat + 40.0 * inf; break;
    case IhdiGrade::III: a.h_point = origin + 40.0 * lat + 20.0 * inf; break;
    case IhdiGrade::IV: a.h_point = origin + 30.0 * lat - 20.0 * inf; break;
  }
  // acetabular roof rises laterally from the triradiate region
  const Point2d roof = rising(*m.ai);
  const Point2d ai_start = origin + 20.0 * lat;
  a.ai_line = {ai_start, ai_start + 90.0 * Point2d(roof.x() * lat.x(), roof.y())};
  const double ce_rad = deg_to_rad(*m.ce);
  const Point2d head_centre = origin + 60.0 * lat + 50.0 * inf;
  a.ce_ray = {head_centre,
              head_centre + 110.0 * Point2d(std::sin(ce_rad) * lat.x(), -std::cos(ce_rad))};
  return a;
}

Annotation annotate_from_truth(const Measurements& m, Side side) {
  if (m.alpha) return annotate_us_from_truth(m, side);
  return annotate_xr_from_truth(m, side);
}

void validate(const CohortSpec& s) {
  if (s.n_subjects == 0) throw InvalidSpec("n_subjects must be >= 1");
  for (const auto& [name, v] : {std::pair{"pair_fraction", s.pair_fraction},
                                std::pair{"abnormal_fraction", s.abnormal_fraction},
                                std::pair{"ossific_fraction", s.ossific_fraction},
                                std::pair{"unlabeled_xr_fraction", s.unlabeled_xr_fraction},
                                std::pair{"post_train_fraction", s.post_train_fraction},
                                std::pair{"calibration_fraction", s.calibration_fraction}}) {
    if (!in_unit(v)) throw InvalidSpec(fmt::format("{} must lie in [0, 1]", name));
  }
  if (s.post_train_fraction + s.calibration_fraction > 1.0) {
    throw InvalidSpec("post_train_fraction + calibration_fraction must be <= 1");
  }
  for (const auto& [name, g] : {std::pair{"alpha_dist", s.alpha_dist},
                                std::pair{"beta_dist", s.beta_dist},
                                std::pair{"cov_dist", s.cov_dist}}) {
    if (!std::isfinite(g.mean) || !std::isfinite(g.sd) || g.sd < 0.0) {
      throw InvalidSpec(fmt::format("{}: mean must be finite and sd >= 0", name));
    }
  }
  for (const auto& [name, n] : {std::pair{"alpha_noise", s.alpha_noise},
                                std::pair{"cov_noise", s.cov_noise}}) {
    if (!std::isfinite(n.bias) || !std::isfinite(n.sd) || n.sd < 0.0) {
      throw InvalidSpec(fmt::format("{}: bias must be finite and sd >= 0", name));
    }
  }
  if (!std::isfinite(s.logistic_slope) || !std::isfinite(s.alpha_threshold)) {
    throw InvalidSpec("logistic link parameters must be finite");
  }
  if (!(s.rule.ai_threshold > 1.0 && s.rule.ai_threshold < 75.0)) {
    throw InvalidSpec("rule.ai_threshold must lie in (1, 75) for synthesis");
  }
  if (!(s.rule.ce_threshold >= 0.0 && s.rule.ce_threshold < 69.0)) {
    throw InvalidSpec("rule.ce_threshold must lie in [0, 69) for synthesis");
  }
  if (s.rule.ihdi_min_abnormal == IhdiGrade::I) throw InvalidSpec("rule.ihdi_min_abnormal must exceed I");
}

namespace {

double abnormal_probability(const CohortSpec& s, double alpha) {
  if (s.abnormal_fraction <= 0.0) return 0.0;
  if (s.abnormal_fraction >= 1.0) return 1.0;
  const double logit = std::log(s.abnormal_fraction / (1.0 - s.abnormal_fraction));
  return 1.0 / (1.0 + std::exp(-(logit + s.logistic_slope * (s.alpha_threshold - alpha))));
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform_open01(rng);
}

// XR ground truth whose abnormality under `rule` equals `abnormal`.
Measurements xr_truth(std::mt19937_64& rng, const AbnormalityRule& rule, bool abnormal) {
  Measurements m;
  m.ai = uniform(rng, std::max(0.0, rule.ai_threshold - 15.0), rule.ai_threshold - 1.0);
  m.ce = uniform(rng, rule.ce_threshold + 1.0, rule.ce_threshold + 20.0);
  m.ihdi = IhdiGrade::I;
  if (abnormal) {
    const double mode = uniform_open01(rng);
    if (mode < 1.0 / 3.0) {
      m.ai = uniform(rng, rule.ai_threshold, rule.ai_threshold + 15.0);
    } else if (mode < 2.0 / 3.0) {
      m.ce = uniform(rng, std::max(0.0, rule.ce_threshold - 15.0), rule.ce_threshold);
    } else {
      const int lo = static_cast<int>(rule.ihdi_min_abnormal);
      const int grade = lo + static_cast<int>(uniform_open01(rng) * (5 - lo));
      m.ihdi = static_cast<IhdiGrade>(std::min(grade, 4));
    }
  }
  return m;
}

}  // namespace

SyntheticCohort generate(const CohortSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  SyntheticCohort cohort;

  const auto n = spec.n_subjects;
  const auto n_post = static_cast<std::size_t>(std::llround(spec.post_train_fraction * n));
  const auto n_cal = std::min(n - n_post,
                              static_cast<std::size_t>(std::llround(spec.calibration_fraction * n)));
  const std::chrono::sys_days base = std::chrono::year{2024} / std::chrono::January / 1;

  for (std::size_t s = 0; s < n; ++s) {
    const std::string subject = fmt::format("S{:04d}", s + 1);
    const Split split = s < n_post ? Split::PostTrain
                        : s < n_post + n_cal ? Split::Calibration
                                             : Split::Evaluation;
    cohort.splits.push_back({split, subject});
    const Date date{base + std::chrono::days{static_cast<int>(s % 365)}};

    for (const Side side : {Side::Left, Side::Right}) {
      Measurements us;
      us.alpha = sample_truncated_normal(rng, spec.alpha_dist.mean, spec.alpha_dist.sd, 0.0, 90.0);
      us.beta = sample_truncated_normal(rng, spec.beta_dist.mean, spec.beta_dist.sd, 0.0, 90.0);
      us.coverage = sample_truncated_normal(rng, spec.cov_dist.mean, spec.cov_dist.sd, 0.0, 100.0);
      us.ossific_flag = uniform_open01(rng) < spec.ossific_fraction;

      Measurements pred;
      pred.alpha = sample_truncated_normal(rng, *us.alpha + spec.alpha_noise.bias,
                                           spec.alpha_noise.sd, 0.0, 90.0);
      pred.beta = sample_truncated_normal(rng, *us.beta + spec.alpha_noise.bias,
                                          spec.alpha_noise.sd, 0.0, 90.0);
      pred.coverage = sample_truncated_normal(rng, *us.coverage + spec.cov_noise.bias,
                                              spec.cov_noise.sd, 0.0, 100.0);
      pred.ossific_flag = us.ossific_flag;

      const std::string stem = fmt::format("{}-{}", subject, to_string(side));
      StudyRecord us_rec;
      us_rec.record_id = stem + "-US";
      us_rec.subject_id = subject;
      us_rec.study_date = date;
      us_rec.side = side;
      us_rec.modality = Modality::US;
      us_rec.annotation = annotate_us_from_truth(us, side);
      us_rec.labels = us;
      us_rec.predictions = pred;

      const bool abnormal = uniform_open01(rng) < abnormal_probability(spec, *us.alpha);
      const bool has_xr = uniform_open01(rng) < spec.pair_fraction;
      const bool unlabeled = uniform_open01(rng) < spec.unlabeled_xr_fraction;
      const Measurements xr = xr_truth(rng, spec.rule, abnormal);

      cohort.records.push_back(std::move(us_rec));
      if (!has_xr) continue;
      StudyRecord xr_rec;
      xr_rec.record_id = stem + "-XR";
      xr_rec.subject_id = subject;
      xr_rec.study_date = date;
      xr_rec.side = side;
      xr_rec.modality = Modality::XR;
      if (unlabeled) {
        Measurements guess;
        guess.ai = xr.ai;
        xr_rec.predictions = guess;
      } else {
        xr_rec.annotation = annotate_xr_from_truth(xr, side);
        xr_rec.labels = xr;
      }
      cohort.records.push_back(std::move(xr_rec));
    }
  }
  return cohort;
}

void write_cohort(const SyntheticCohort& cohort, const std::filesystem::path& dir) {
  write_file(dir / "records.json", records_to_json(cohort.records));
  write_file(dir / "splits.csv", splits_to_csv(cohort.splits));
}

}  // namespace usfirst
