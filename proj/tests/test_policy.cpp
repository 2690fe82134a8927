#include <random>

#include <gtest/gtest.h>

#include "usfirst/errors.hpp"
#include "usfirst/policy.hpp"
#include "usfirst/synthetic.hpp"

using namespace usfirst;

namespace {

Calibrators calibs(double q_alpha, double q_cov) {
  Calibrators c;
  c.alpha.correction.target = Target::Alpha;
  c.alpha.radius.q_plus = q_alpha;
  c.coverage.correction.target = Target::Coverage;
  c.coverage.radius.q_plus = q_cov;
  return c;
}

PolicySpec spec(RuleFamily f, double da, double dc) {
  PolicySpec s;
  s.family = f;
  s.delta_alpha = da;
  s.delta_cov = dc;
  return s;
}

std::vector<StrictPair> synthetic_pairs(std::uint64_t seed, Calibrators& out_calibs) {
  CohortSpec cs;
  cs.n_subjects = 60;
  cs.seed = seed;
  const auto cohort = generate(cs);
  const auto parts = assign_splits(cohort.records, cohort.splits);
  std::vector<LabeledPrediction> a, c;
  for (const auto& r : parts.calibration) {
    if (r.modality != Modality::US) continue;
    a.push_back({*r.predictions->alpha, *r.labels->alpha});
    c.push_back({*r.predictions->coverage, *r.labels->coverage});
  }
  out_calibs.alpha = calibrate_target(a, 0.1, Target::Alpha);
  out_calibs.coverage = calibrate_target(c, 0.1, Target::Coverage);
  return build_strict_pairs(parts.evaluation).pairs;
}

std::size_t us_only_count(const CubeCell& cell) {
  std::size_t n = 0;
  for (const auto& d : cell.decisions) n += d.us_only ? 1 : 0;
  return n;
}

}  // namespace

TEST(Decide, CalibratedBoundAboveThresholdCertifies) {
  const auto c = calibs(10.75, 28.74);
  const auto d = decide({75.0, 40.0}, false, c, spec(RuleFamily::AlphaOnly, 0.10, 0.10));
  ASSERT_TRUE(d.lb_alpha);
  EXPECT_NEAR(*d.lb_alpha, 63.175, 1e-12);
  EXPECT_NEAR(*d.margin_alpha, 3.175, 1e-12);
  EXPECT_EQ(d.d(), 1);
  EXPECT_FALSE(d.lb_cov);
}

TEST(Decide, BoundExactlyAtThresholdCertifies) {
  const auto c = calibs(10.0, 10.0);
  const auto d = decide({71.0, 61.0}, false, c, spec(RuleFamily::AlphaAndCov, 0.10, 0.10));
  EXPECT_EQ(*d.lb_alpha, 60.0);
  EXPECT_EQ(*d.lb_cov, 50.0);
  EXPECT_TRUE(d.us_only);
}

TEST(Decide, FamilyLogicTable) {
  const auto c = calibs(0.0, 0.0);
  struct Row {
    double alpha, cov;
    bool alpha_only, or_rule, and_rule;
  };
  for (const Row& r : {Row{65, 55, true, true, true}, Row{65, 45, true, true, false},
                       Row{55, 55, false, true, false}, Row{55, 45, false, false, false}}) {
    EXPECT_EQ(decide({r.alpha, r.cov}, false, c, spec(RuleFamily::AlphaOnly, 0, 0)).us_only,
              r.alpha_only);
    EXPECT_EQ(decide({r.alpha, r.cov}, false, c, spec(RuleFamily::AlphaOrCov, 0, 0)).us_only,
              r.or_rule);
    EXPECT_EQ(decide({r.alpha, r.cov}, false, c, spec(RuleFamily::AlphaAndCov, 0, 0)).us_only,
              r.and_rule);
  }
}

TEST(Decide, MissingInputsDefer) {
  const auto c = calibs(0.0, 0.0);
  auto d = decide({std::nullopt, 90.0}, false, c, spec(RuleFamily::AlphaOrCov, 0, 0));
  EXPECT_FALSE(d.us_only);
  EXPECT_TRUE(d.missing_measurement);
  d = decide({90.0, std::nullopt}, false, c, spec(RuleFamily::AlphaOrCov, 0, 0));
  EXPECT_FALSE(d.us_only);
  EXPECT_TRUE(d.missing_measurement);
  d = decide({90.0, std::nullopt}, false, c, spec(RuleFamily::AlphaOnly, 0, 0));
  EXPECT_TRUE(d.us_only);
  EXPECT_FALSE(d.missing_measurement);
}

TEST(Decide, ThresholdsFollowOssificFlag) {
  const auto c = calibs(0.0, 0.0);
  auto s = spec(RuleFamily::AlphaOnly, 0, 0);
  s.thresholds.t_alpha = {60.0, 64.0};
  EXPECT_TRUE(decide({62.0, 50.0}, false, c, s).us_only);
  EXPECT_FALSE(decide({62.0, 50.0}, true, c, s).us_only);
}

TEST(Decide, NeverCertifyingRadiusAlwaysDefers) {
  auto c = calibs(std::numeric_limits<double>::infinity(), 0.0);
  EXPECT_FALSE(decide({89.0, 99.0}, false, c, spec(RuleFamily::AlphaOnly, 0, 0)).us_only);
  EXPECT_FALSE(decide({89.0, 99.0}, false, c, spec(RuleFamily::AlphaAndCov, 0, 0)).us_only);
  // OR can still certify through coverage.
  EXPECT_TRUE(decide({89.0, 99.0}, false, c, spec(RuleFamily::AlphaOrCov, 0, 0)).us_only);
}

TEST(Decide, RecomputeFromMarginsAgrees) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> a(30, 90), cv(10, 90), q(-5, 20), dl(0, 0.5);
  std::bernoulli_distribution miss(0.1);
  for (int i = 0; i < 2000; ++i) {
    const auto c = calibs(q(rng), q(rng));
    UsPrediction p;
    if (!miss(rng)) p.alpha = a(rng);
    if (!miss(rng)) p.coverage = cv(rng);
    for (auto f : {RuleFamily::AlphaOnly, RuleFamily::AlphaOrCov, RuleFamily::AlphaAndCov}) {
      const auto d = decide(p, miss(rng), c, spec(f, dl(rng), dl(rng)));
      EXPECT_EQ(recompute_us_only(d, f), d.us_only);
    }
  }
}

TEST(Grid, Validation) {
  PolicyGrid g;
  EXPECT_NO_THROW(validate(g));
  g.deltas = {};
  EXPECT_THROW(validate(g), InvalidArgument);
  g.deltas = {0.2, 0.1};
  EXPECT_THROW(validate(g), InvalidArgument);
  g.deltas = {-0.1, 0.1};
  EXPECT_THROW(validate(g), InvalidArgument);
}

TEST(Sweep, NestingAndMonotonicityOnSyntheticCohorts) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Calibrators c;
    const auto pairs = synthetic_pairs(seed, c);
    const PolicyGrid grid;
    const auto cube = sweep_grid(pairs, c, grid, Thresholds{}, 0.1);
    ASSERT_EQ(cube.cells.size(), 3 * grid.deltas.size() * grid.deltas.size());
    const std::size_t n = grid.deltas.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        const auto& alpha = cube.cells[cube.cell_index(0, i, k)];
        const auto& or_c = cube.cells[cube.cell_index(1, i, k)];
        const auto& and_c = cube.cells[cube.cell_index(2, i, k)];
        for (std::size_t j = 0; j < pairs.size(); ++j) {
          EXPECT_LE(and_c.decisions[j].d(), alpha.decisions[j].d());
          EXPECT_LE(alpha.decisions[j].d(), or_c.decisions[j].d());
        }
        // AlphaOnly ignores delta_cov entirely.
        EXPECT_EQ(alpha.decisions, cube.cells[cube.cell_index(0, i, 0)].decisions);
        if (i + 1 < n && c.alpha.radius.q_plus >= 0 && c.coverage.radius.q_plus >= 0) {
          for (std::size_t f = 0; f < 3; ++f) {
            EXPECT_GE(us_only_count(cube.cells[cube.cell_index(f, i, k)]),
                      us_only_count(cube.cells[cube.cell_index(f, i + 1, k)]));
          }
        }
      }
    }
  }
}

TEST(Sweep, CubeCsvRoundTrip) {
  Calibrators c;
  const auto pairs = synthetic_pairs(3, c);
  const auto cube = sweep_grid(pairs, c, PolicyGrid{}, Thresholds{}, 0.1);
  const auto back = cube_from_csv(cube_to_csv(cube));
  EXPECT_EQ(back.pair_ids, cube.pair_ids);
  EXPECT_EQ(back.deltas, cube.deltas);
  EXPECT_EQ(back.families, cube.families);
  ASSERT_EQ(back.cells.size(), cube.cells.size());
  for (std::size_t i = 0; i < cube.cells.size(); ++i) {
    EXPECT_EQ(back.cells[i].decisions, cube.cells[i].decisions);
  }
  EXPECT_EQ(cube_to_csv(back), cube_to_csv(cube));
}

TEST(Sweep, FindLocatesGridCells) {
  Calibrators c;
  const auto pairs = synthetic_pairs(4, c);
  const auto cube = sweep_grid(pairs, c, PolicyGrid{}, Thresholds{}, 0.1);
  const auto* cell = cube.find(RuleFamily::AlphaOrCov, 0.25, 0.40);
  ASSERT_NE(cell, nullptr);
  EXPECT_EQ(cell->family, RuleFamily::AlphaOrCov);
  EXPECT_EQ(cell->delta_alpha, 0.25);
  EXPECT_EQ(cell->delta_cov, 0.40);
  EXPECT_EQ(cube.find(RuleFamily::AlphaOrCov, 0.26, 0.40), nullptr);
}
