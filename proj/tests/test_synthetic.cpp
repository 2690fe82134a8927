#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "usfirst/calibration.hpp"
#include "usfirst/errors.hpp"
#include "usfirst/synthetic.hpp"

using namespace usfirst;

namespace {

std::vector<LabeledPrediction> alpha_items(const std::vector<StudyRecord>& records) {
  std::vector<LabeledPrediction> out;
  for (const auto& r : records) {
    if (r.modality == Modality::US) out.push_back({*r.predictions->alpha, *r.labels->alpha});
  }
  return out;
}

}  // namespace

TEST(Synthetic, DeterministicInSeed) {
  CohortSpec s;
  s.n_subjects = 20;
  s.seed = 5;
  const auto a = generate(s);
  const auto b = generate(s);
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.splits, b.splits);
  s.seed = 6;
  EXPECT_NE(generate(s).records, a.records);
}

TEST(Synthetic, ShapeAndSplitCounts) {
  CohortSpec s;
  s.n_subjects = 40;
  s.post_train_fraction = 0.25;
  s.calibration_fraction = 0.25;
  const auto c = generate(s);
  EXPECT_EQ(c.records.size(), 40u * 4u);  // L/R hips, US + XR each
  EXPECT_EQ(c.splits.size(), 40u);
  const auto parts = assign_splits(c.records, c.splits);
  EXPECT_EQ(parts.post_train.size(), 40u);
  EXPECT_EQ(parts.calibration.size(), 40u);
  EXPECT_EQ(parts.evaluation.size(), 80u);
  for (const auto& r : c.records) EXPECT_EQ(check_record(r), "") << r.record_id;
}

TEST(Synthetic, LabelsRederiveFromAnnotations) {
  CohortSpec s;
  s.n_subjects = 30;
  s.seed = 77;
  for (const auto& r : generate(s).records) {
    if (!r.labels || !r.annotation) continue;
    const auto derived = std::visit(
        [](const auto& ann) {
          if constexpr (std::is_same_v<std::decay_t<decltype(ann)>, UsAnnotation>) {
            return derive_us(ann);
          } else {
            return derive_xr(ann);
          }
        },
        *r.annotation);
    if (r.modality == Modality::US) {
      EXPECT_NEAR(*derived.alpha, *r.labels->alpha, 1e-9);
      EXPECT_NEAR(*derived.beta, *r.labels->beta, 1e-9);
      EXPECT_NEAR(*derived.coverage, *r.labels->coverage, 1e-9);
    } else {
      EXPECT_NEAR(*derived.ai, *r.labels->ai, 1e-9);
      EXPECT_NEAR(*derived.ce, *r.labels->ce, 1e-9);
      EXPECT_EQ(*derived.ihdi, *r.labels->ihdi);
    }
  }
}

TEST(Synthetic, PureShiftBiasIsRecoveredByLad) {
  CohortSpec s;
  s.n_subjects = 50;
  s.alpha_noise = {3.0, 0.0};
  s.alpha_dist = {62.0, 6.0};
  s.seed = 3;
  const auto c = generate(s);
  const auto parts = assign_splits(c.records, c.splits);
  const auto items = alpha_items(parts.calibration);
  const auto cal = calibrate_target(items, 0.1, Target::Alpha);
  EXPECT_NEAR(cal.correction.a, 1.0, 1e-9);
  EXPECT_NEAR(cal.correction.b, -3.0, 1e-9);
  double mae = 0.0;
  for (const auto& it : items) mae += std::abs(cal.correction.apply(it.pred_raw) - it.label);
  EXPECT_LT(mae / static_cast<double>(items.size()), 1e-9);
}

TEST(Synthetic, AbnormalityRisesAsAlphaFalls) {
  CohortSpec s;
  s.n_subjects = 400;
  s.seed = 8;
  s.logistic_slope = 0.3;
  const auto c = generate(s);
  const auto pairs = build_strict_pairs(c.records, s.rule).pairs;
  int low_n = 0, low_z = 0, high_n = 0, high_z = 0;
  for (const auto& p : pairs) {
    const double a = *p.us_record.labels->alpha;
    const int z = p.z == Abnormality::Abnormal ? 1 : 0;
    if (a < 55) {
      ++low_n;
      low_z += z;
    } else if (a > 69) {
      ++high_n;
      high_z += z;
    }
  }
  ASSERT_GT(low_n, 20);
  ASSERT_GT(high_n, 20);
  EXPECT_GT(static_cast<double>(low_z) / low_n, static_cast<double>(high_z) / high_n);
}

TEST(Synthetic, PairAndLabelFractions) {
  CohortSpec s;
  s.n_subjects = 300;
  s.pair_fraction = 0.5;
  s.unlabeled_xr_fraction = 1.0;
  const auto pairs = build_strict_pairs(generate(s).records).pairs;
  EXPECT_GT(pairs.size(), 240u);
  EXPECT_LT(pairs.size(), 360u);
  for (const auto& p : pairs) EXPECT_EQ(p.z, Abnormality::Unknown);
}

TEST(Synthetic, InvalidSpecs) {
  CohortSpec s;
  s.n_subjects = 0;
  EXPECT_THROW(validate(s), InvalidSpec);
  s = {};
  s.pair_fraction = 1.5;
  EXPECT_THROW(validate(s), InvalidSpec);
  s = {};
  s.post_train_fraction = 0.7;
  s.calibration_fraction = 0.5;
  EXPECT_THROW(validate(s), InvalidSpec);
  s = {};
  s.cov_noise.sd = -1;
  EXPECT_THROW(generate(s), InvalidSpec);
}

TEST(Synthetic, TruncatedNormalStaysInRange) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 5000; ++i) {
    const double v = sample_truncated_normal(rng, 95.0, 20.0, 0.0, 100.0);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 100.0);
    const double u = uniform_open01(rng);
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  EXPECT_EQ(sample_truncated_normal(rng, 120.0, 0.0, 0.0, 100.0), 100.0);
  EXPECT_EQ(sample_truncated_normal(rng, 40.0, 0.0, 0.0, 100.0), 40.0);
}

TEST(Synthetic, AnnotateRejectsOutOfRangeTruth) {
  Measurements m;
  m.alpha = 95;
  m.beta = 50;
  m.coverage = 50;
  EXPECT_THROW(annotate_us_from_truth(m, Side::Left), OutOfRange);
}

TEST(Synthetic, WriteCohortFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "usfirst_test_write_cohort";
  std::filesystem::remove_all(dir);
  CohortSpec s;
  s.n_subjects = 4;
  const auto c = generate(s);
  write_cohort(c, dir);
  const auto loaded = load_records(dir / "records.json");
  EXPECT_EQ(loaded.records, c.records);
  EXPECT_EQ(load_splits(dir / "splits.csv"), c.splits);
  std::filesystem::remove_all(dir);
}
