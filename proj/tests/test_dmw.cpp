#include "noarb/dmw.hpp"
#include "noarb/xform.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace noarb;
namespace dm = noarb::dmw;

TEST(Tree, ValidateRejectsBadProbabilities) {
  dm::ScenarioTree t(0.0);
  t.add_child(0, 0.5, 1.0);
  t.add_child(0, 0.4, -1.0);
  EXPECT_THROW(t.validate(), DomainError);
}

TEST(Solve, SymmetricStepIsMartingale) {
  dm::ScenarioTree t(0.0);
  t.add_child(0, 0.9, 1.0);
  t.add_child(0, 0.1, -1.0);
  const auto c = dm::solve_tree(t);
  ASSERT_TRUE(dm::is_martingale(c));
  const auto &q = std::get<dm::MartingaleCertificate>(c).q;
  EXPECT_NEAR(q[1], 0.5, 1e-12);
  EXPECT_NEAR(q[2], 0.5, 1e-12);
  EXPECT_TRUE(dm::verify_certificate(t, c));
}

TEST(Solve, OneSidedStepIsArbitrage) {
  dm::ScenarioTree t(0.0);
  t.add_child(0, 0.5, 0.0);
  t.add_child(0, 0.5, 0.25);
  const auto c = dm::solve_tree(t);
  ASSERT_FALSE(dm::is_martingale(c));
  EXPECT_EQ(std::get<dm::ArbitrageCertificate>(c).f[0], 1.0);
  EXPECT_TRUE(dm::verify_certificate(t, c));
  EXPECT_TRUE(dm::brute_force_has_arbitrage(t));
}

TEST(Solve, FlatStepIsDegenerateMartingale) {
  dm::ScenarioTree t(1.0);
  t.add_child(0, 0.3, 1.0);
  t.add_child(0, 0.7, 1.0);
  EXPECT_TRUE(dm::is_martingale(dm::solve_tree(t)));
  EXPECT_FALSE(dm::brute_force_has_arbitrage(t));
}

TEST(Solve, ThreePointMartingaleMeasure) {
  dm::ScenarioTree t(0.0);
  t.add_child(0, 0.2, -1.0);
  t.add_child(0, 0.3, 0.5);
  t.add_child(0, 0.5, 2.0);
  const auto c = dm::solve_tree(t);
  ASSERT_TRUE(dm::is_martingale(c));
  const auto &q = std::get<dm::MartingaleCertificate>(c).q;
  EXPECT_NEAR(q[1] + q[2] + q[3], 1.0, 1e-12);
  EXPECT_NEAR(-q[1] + 0.5 * q[2] + 2.0 * q[3], 0.0, 1e-12);
  for (int i = 1; i <= 3; ++i) {
    EXPECT_GT(q[i], 0.0);
  }
}

TEST(Random, SolverAgreesWithOracle) {
  for (std::uint64_t s = 0; s < 300; ++s) {
    const auto t = dm::random_tree(path_seed(99, s));
    const auto c = dm::solve_tree(t);
    EXPECT_EQ(!dm::is_martingale(c), dm::brute_force_has_arbitrage(t)) << s;
    EXPECT_TRUE(dm::verify_certificate(t, c)) << s;
  }
}

TEST(Verify, PerturbedCertificatesFail) {
  dm::ScenarioTree t(0.0);
  t.add_child(0, 0.5, 1.0);
  t.add_child(0, 0.5, -1.0);
  auto c = std::get<dm::MartingaleCertificate>(dm::solve_tree(t));
  c.q[1] += 1e-3;
  EXPECT_FALSE(dm::verify_certificate(t, c));
  EXPECT_THROW(dm::verify_certificate(t, dm::MartingaleCertificate{{1.0}}), dm::ShapeMismatch);
}

TEST(Invariance, MonotoneMapsKeepType) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto t = dm::random_tree(path_seed(7, s));
    const bool base = dm::is_martingale(dm::solve_tree(t));
    const auto cube = xform::MonotoneMap::cubic_plus_linear();
    EXPECT_EQ(dm::is_martingale(dm::solve_tree(t.map_prices(cube))), base);
    const auto dec = xform::MonotoneMap::affine(-2.0, 1.0);
    EXPECT_EQ(dm::is_martingale(dm::solve_tree(t.map_prices(dec))), base);
  }
}

TEST(TreeSerialization, RoundTrip) {
  const auto t = dm::random_tree(42);
  EXPECT_EQ(dm::tree_from_json(dm::to_json(t)), t);
  const auto c = dm::solve_tree(t);
  EXPECT_EQ(dm::to_json(dm::certificate_from_json(dm::to_json(c))), dm::to_json(c));
}

TEST(ChainTree, BrownianChainIsMartingale) {
  const auto src = procgen::make_source(procgen::ProcessSpec{procgen::Brownian{}},
                                        TimeGrid(1.0, 64), 3);
  const std::vector<strategy::StoppingRule> rules = {strategy::deterministic(0.25),
                                                     strategy::deterministic(0.5)};
  const auto t = dm::sample_chain_tree(src, rules, 4000, 4);
  EXPECT_NO_THROW(t.validate());
  EXPECT_TRUE(dm::is_martingale(dm::solve_tree(t)));
}
