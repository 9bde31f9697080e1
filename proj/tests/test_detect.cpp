#include "noarb/detect.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace noarb;
namespace dt = noarb::detect;
namespace pg = noarb::procgen;
namespace st = noarb::strategy;

namespace {

// P(Bin(n, p) >= k) by direct summation in log space
double upper_tail(std::size_t k, std::size_t n, double p) {
  double s = 0.0;
  for (std::size_t i = k; i <= n; ++i) {
    const double lg = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0);
    s += std::exp(lg + i * std::log(p) + (n - i) * std::log1p(-p));
  }
  return s;
}

double cp_lower_bisect(std::size_t k, std::size_t n, double conf) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (upper_tail(k, n, mid) < 1.0 - conf ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

} // namespace

TEST(ClopperPearson, MatchesBinomialTailInversion) {
  for (auto [k, n] : {std::pair<std::size_t, std::size_t>{3, 50}, {25, 50}, {1, 200}, {199, 200}}) {
    EXPECT_NEAR(dt::clopper_pearson_lower(k, n, 0.999), cp_lower_bisect(k, n, 0.999), 1e-9);
  }
  EXPECT_EQ(dt::clopper_pearson_lower(0, 100, 0.999), 0.0);
  EXPECT_NEAR(dt::clopper_pearson_lower(100, 100, 0.99), std::pow(0.01, 0.01), 1e-12);
  EXPECT_NEAR(dt::clopper_pearson_upper(0, 100, 0.99), 1.0 - std::pow(0.01, 0.01), 1e-12);
}

TEST(Classify, Cases) {
  std::vector<double> mixed(200);
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    mixed[i] = i % 2 ? 1.0 : -1.0;
  }
  EXPECT_EQ(dt::classify_increments(mixed, 0.999, 0.0).classification, dt::SignClass::both_signs);
  std::vector<double> nonneg(200, 0.0);
  nonneg[3] = nonneg[7] = 2.0;
  EXPECT_EQ(dt::classify_increments(nonneg, 0.999, 0.0).classification,
            dt::SignClass::nonneg_nontrivial);
  std::vector<double> nonpos(200, -1.0);
  EXPECT_EQ(dt::classify_increments(nonpos, 0.999, 0.0).classification,
            dt::SignClass::nonpos_nontrivial);
  std::vector<double> zero(200, 1e-15);
  EXPECT_EQ(dt::classify_increments(zero, 0.999, 1e-12).classification, dt::SignClass::null);
  std::vector<double> rare(200, 1.0);
  rare[0] = -1.0;
  const auto v = dt::classify_increments(rare, 0.999, 0.0);
  EXPECT_EQ(v.classification, dt::SignClass::both_signs);
  EXPECT_NEAR(v.lb_neg, 1.0 - std::pow(0.999, 1.0 / 200), 1e-9);
}

TEST(SignTest, BrownianAndTanaka) {
  const TimeGrid g(1.0, 128);
  const dt::SignTestOptions opts{2000, 0.999, -1.0};
  const auto b = dt::increment_sign_test(pg::ProcessSpec{pg::Brownian{}}, g, 1,
                                         st::deterministic(0.2), st::deterministic(0.6),
                                         std::nullopt, opts);
  EXPECT_EQ(b.classification, dt::SignClass::both_signs);
  EXPECT_EQ(b.n(), 2000u);
  const auto t = dt::increment_sign_test(pg::ProcessSpec{pg::TanakaAbs{}}, g, 1,
                                         st::deterministic(0.0), st::deterministic(1.0),
                                         std::nullopt, opts);
  EXPECT_EQ(t.classification, dt::SignClass::nonneg_nontrivial);
}

TEST(SignTest, ConditioningDropsScenarios) {
  const TimeGrid g(1.0, 64);
  const st::EventSpec up{st::deterministic(0.5),
                         st::binary(st::fn::BinaryOp::gt, st::current(), st::constant(0.0))};
  const auto v = dt::increment_sign_test(pg::ProcessSpec{pg::Brownian{}}, g, 2,
                                         st::deterministic(0.5), st::deterministic(1.0), up,
                                         {2000, 0.999, -1.0});
  EXPECT_GT(v.n(), 800u);
  EXPECT_LT(v.n(), 1200u);
  const st::EventSpec never{st::deterministic(0.5),
                            st::binary(st::fn::BinaryOp::gt, st::current(), st::constant(1e9))};
  EXPECT_THROW(dt::increment_sign_test(pg::ProcessSpec{pg::Brownian{}}, g, 2,
                                       st::deterministic(0.5), st::deterministic(1.0), never,
                                       {100, 0.999, -1.0}),
               dt::NoConditioningError);
}

TEST(Reachability, BrownianTails) {
  const TimeGrid g(1.0, 200);
  const auto src = pg::make_source(pg::ProcessSpec{pg::Brownian{}}, g, 3);
  const auto r = dt::reachability_test(src, 0.1, 0.5, 0.3, st::deterministic(0.25),
                                       std::nullopt, {4000, 0.999});
  const double p = 0.5 * std::erfc(0.3 / std::sqrt(0.5) / std::sqrt(2.0));
  EXPECT_NEAR(r.up.estimate, p, 4 * r.up.se);
  EXPECT_NEAR(r.down.estimate, p, 4 * r.down.se);
  EXPECT_GT(r.up.lower, 0.0);
  EXPECT_LE(r.sup_below.estimate, r.down.estimate);
}

TEST(Reachability, WindowMustFitTheHorizon) {
  const TimeGrid g(1.0, 100);
  const auto src = pg::make_source(pg::ProcessSpec{pg::Brownian{}}, g, 3);
  EXPECT_THROW(dt::reachability_test(src, 0.1, 0.8, 0.3, st::deterministic(0.5), std::nullopt,
                                     {10, 0.999}),
               DomainError);
}

TEST(Search, IntervalFamilyLabels) {
  const std::vector<double> times = {0.25, 0.5};
  const auto fam = dt::interval_family(times, 0.25);
  ASSERT_EQ(fam.size(), 4u);
  EXPECT_EQ(fam[0].label, "+1(0,0.25]");
}

TEST(Search, BrownianHasNoFlaggedCandidate) {
  const TimeGrid g(1.0, 64);
  const auto src = pg::make_source(pg::ProcessSpec{pg::Brownian{}}, g, 5);
  const std::vector<double> times = {0.25, 0.5, 0.75, 1.0};
  const auto res = dt::arbitrage_search(src, dt::interval_family(times, 0.25), {2000, 1e-9, 0.999});
  EXPECT_FALSE(res.arbitrage_found);
}
