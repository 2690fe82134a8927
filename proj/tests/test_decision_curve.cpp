#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "usfirst/decision_curve.hpp"
#include "usfirst/errors.hpp"

using namespace usfirst;

namespace {

constexpr auto A = Abnormality::Abnormal;
constexpr auto N = Abnormality::Normal;

std::vector<Decision> decisions(const std::vector<int>& d) {
  std::vector<Decision> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i].us_only = d[i] == 1;
  return out;
}

// One-family, one-delta cube whose single cell carries `d`.
DecisionCube single_cell_cube(const std::vector<int>& d, std::vector<Abnormality> z) {
  DecisionCube cube;
  for (std::size_t i = 0; i < d.size(); ++i) cube.pair_ids.push_back("p" + std::to_string(i));
  cube.z = std::move(z);
  cube.deltas = {0.1};
  cube.families = {RuleFamily::AlphaOrCov};
  cube.cells.push_back({RuleFamily::AlphaOrCov, 0.1, 0.1, decisions(d)});
  return cube;
}

}  // namespace

TEST(PairUtility, Formula) {
  EXPECT_DOUBLE_EQ(pair_utility(false, A, {0.3, 0.9}), -0.3);
  EXPECT_DOUBLE_EQ(pair_utility(false, N, {0.3, 0.9}), -0.3);
  EXPECT_DOUBLE_EQ(pair_utility(true, A, {0.2, 0.5}), -0.5);
  EXPECT_DOUBLE_EQ(pair_utility(true, N, {0.2, 0.5}), 0.0);
  EXPECT_THROW(pair_utility(true, Abnormality::Unknown, {0.2, 0.5}), UnknownAbnormality);
}

TEST(PairUtility, NegativeWeightsRejected) {
  EXPECT_THROW(validate(UtilityParams{-0.1, 0.0}), InvalidArgument);
  EXPECT_THROW(validate(UtilityParams{0.1, -1.0}), InvalidArgument);
}

TEST(CellUtility, ThreePairFixtureByEnumeration) {
  const std::vector<Abnormality> z{A, N, N};
  const UtilityParams p{0.5, 0.5};
  EXPECT_DOUBLE_EQ(baselines(z, p).acquire_all, -0.5);
  // Best over all 8 decision vectors is deferring exactly on the z = 1 pair.
  double best = -1e9;
  std::vector<int> argbest;
  for (int mask = 0; mask < 8; ++mask) {
    const std::vector<int> d{mask & 1, (mask >> 1) & 1, (mask >> 2) & 1};
    const double u = cell_utility(decisions(d), z, p).utility;
    if (u > best) {
      best = u;
      argbest = d;
    }
  }
  EXPECT_EQ(argbest, (std::vector<int>{0, 1, 1}));
  EXPECT_NEAR(best, -1.0 / 6.0, 1e-15);
}

TEST(Baselines, AcquireNone) {
  const std::vector<Abnormality> z{A, A, N, N};
  EXPECT_DOUBLE_EQ(baselines(z, {0.0, 0.5}).acquire_none, -0.25);
  EXPECT_THROW(baselines(std::vector<Abnormality>{Abnormality::Unknown}, {0, 0}), NoLabeledPairs);
}

TEST(Envelope, PicksBestWithTieOrder) {
  const auto cube = single_cell_cube({0, 1, 1}, {A, N, N});
  const auto pts = envelope(cube, cube.z, {0.0, 0.5}, {0.5});
  ASSERT_EQ(pts.size(), 2u);
  // lambda = 0: acquire-all scores 0 and has the most XR use.
  EXPECT_EQ(pts[0].best_family, kAcquireAll);
  EXPECT_FALSE(pts[0].best_delta_alpha);
  EXPECT_DOUBLE_EQ(pts[0].xr_use, 1.0);
  EXPECT_EQ(pts[1].best_family, "alpha_or_cov");
  EXPECT_NEAR(pts[1].utility, -1.0 / 6.0, 1e-15);
  EXPECT_EQ(*pts[1].best_delta_alpha, 0.1);
}

TEST(Envelope, ZeroMissPenaltyMakesAcquireNoneOptimal) {
  const auto cube = single_cell_cube({0, 1, 0, 1}, {A, N, A, A});
  const auto pts = envelope(cube, cube.z, default_lambda_grid(), {0.0});
  ASSERT_EQ(pts.size(), 21u);
  for (const auto& p : pts) {
    if (p.lambda > 0) {
      EXPECT_EQ(p.utility, 0.0);
      EXPECT_EQ(p.best_family, kAcquireNone);
    }
  }
}

TEST(Envelope, NeverBelowEitherBaseline) {
  std::mt19937_64 rng(12);
  std::bernoulli_distribution b(0.4);
  for (int t = 0; t < 50; ++t) {
    std::vector<int> d(8);
    std::vector<Abnormality> z(8);
    for (int i = 0; i < 8; ++i) {
      d[i] = b(rng);
      z[i] = b(rng) ? A : N;
    }
    const auto cube = single_cell_cube(d, z);
    for (const auto& p : envelope(cube, z, default_lambda_grid(), {0.0, 0.5, 2.0})) {
      EXPECT_GE(p.utility, p.baseline_all);
      EXPECT_GE(p.utility, p.baseline_none);
    }
  }
}

TEST(Envelope, OrderIsMuMajor) {
  const auto cube = single_cell_cube({1, 0}, {A, N});
  const auto pts = envelope(cube, cube.z, {0.0, 1.0}, {0.5, 0.0});
  ASSERT_EQ(pts.size(), 4u);
  EXPECT_EQ(pts[0].mu, 0.5);
  EXPECT_EQ(pts[1].mu, 0.5);
  EXPECT_EQ(pts[1].lambda, 1.0);
  EXPECT_EQ(pts[2].mu, 0.0);
}

TEST(Envelope, CsvShape) {
  const auto cube = single_cell_cube({1, 0}, {A, N});
  const auto csv = decision_curve_csv(envelope(cube, cube.z, {0.5}, {0.5}));
  EXPECT_EQ(csv,
            "mu,lambda,utility,best_family,best_da,best_dc,baseline_all,baseline_none\n"
            "0.5,0.5,-0.25,acquire_none,,,-0.5,-0.25\n");
}
