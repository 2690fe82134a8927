#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "usfirst/dataset.hpp"
#include "usfirst/geometry.hpp"

namespace usfirst {

struct GaussianSpec {
  double mean = 0.0;
  double sd = 0.0;
};

struct NoiseSpec {
  double bias = 0.0;
  double sd = 0.0;
};

/// Parameters of a synthetic cohort. Every subject contributes one visit
/// with a left and a right hip; each hip has a US record and, with
/// probability `pair_fraction`, an XR record on the same date.
struct CohortSpec {
  std::size_t n_subjects = 75;
  double pair_fraction = 1.0;
  GaussianSpec alpha_dist{62.0, 8.0};   // degrees, truncated to [0, 90]
  GaussianSpec beta_dist{55.0, 8.0};    // degrees, truncated to [0, 90]
  GaussianSpec cov_dist{55.0, 12.0};    // percent, truncated to [0, 100]
  NoiseSpec alpha_noise{0.0, 6.0};
  NoiseSpec cov_noise{0.0, 10.0};
  // P(z = 1) = logistic(logit(abnormal_fraction) + logistic_slope * (alpha_threshold - alpha)),
  // so abnormal_fraction is the abnormality rate of a hip exactly at threshold.
  double abnormal_fraction = 0.25;
  double logistic_slope = 0.25;  // per degree
  double alpha_threshold = 60.0;
  double ossific_fraction = 0.3;
  // Fraction of XR records that carry no ground truth (z unknown).
  double unlabeled_xr_fraction = 0.0;
  // Subject shares for post-train and calibration; evaluation gets the rest.
  double post_train_fraction = 0.4;
  double calibration_fraction = 0.1;
  AbnormalityRule rule;
  std::uint64_t seed = 0;
};

// Throws InvalidSpec when a field is out of range.
void validate(const CohortSpec& spec);

struct SyntheticCohort {
  std::vector<StudyRecord> records;
  std::vector<SplitAssignment> splits;
};

/// Deterministic in `spec.seed`. Records carry ground-truth labels,
/// annotations that re-derive those labels through derive_us/derive_xr, and
/// (for US) noisy predictions = truth + bias + Gaussian noise, truncated to
/// the valid range by inverse-CDF sampling.
SyntheticCohort generate(const CohortSpec& spec);

// records.json + splits.csv under `dir`.
void write_cohort(const SyntheticCohort& cohort, const std::filesystem::path& dir);

// Lines and points whose derived measurements equal m. US needs alpha, beta
// and coverage; XR needs ai, ce and ihdi. Angles must lie in [0, 90] and
// coverage in [0, 100], else OutOfRange.
UsAnnotation annotate_us_from_truth(const Measurements& m, Side side);
XrAnnotation annotate_xr_from_truth(const Measurements& m, Side side);

// US when alpha is present, otherwise XR.
Annotation annotate_from_truth(const Measurements& m, Side side);

/// Truncated normal on [lo, hi] by inverse CDF; sd == 0 returns the mean
/// clamped into range.
double sample_truncated_normal(std::mt19937_64& rng, double mean, double sd, double lo, double hi);

// Uniform on the open interval (0, 1), from the top 53 bits of one draw.
double uniform_open01(std::mt19937_64& rng);

}  // namespace usfirst
