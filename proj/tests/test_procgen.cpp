#include "noarb/procgen.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace noarb;
namespace pg = noarb::procgen;

namespace {

double cov_oracle(double h, double s, double t) {
  return 0.5 * (std::pow(s, 2 * h) + std::pow(t, 2 * h) - std::pow(std::abs(t - s), 2 * h));
}

} // namespace

TEST(TimeGrid, IndexRounding) {
  const TimeGrid g(1.0, 10);
  EXPECT_EQ(g.ceil_index(0.3), 3u);
  EXPECT_EQ(g.floor_index(0.3), 3u);
  EXPECT_EQ(g.ceil_index(0.31), 4u);
  EXPECT_EQ(g.floor_index(0.39), 3u);
  EXPECT_EQ(g.span_steps(0.25), 3u);
  EXPECT_DOUBLE_EQ(g.time(10), 1.0);
}

TEST(Seeds, PathSeedsAreDistinctAndStable) {
  EXPECT_EQ(path_seed(1, 2), path_seed(1, 2));
  EXPECT_NE(path_seed(1, 2), path_seed(1, 3));
  EXPECT_NE(path_seed(1, 2), path_seed(2, 2));
}

TEST(Brownian, SamplerIsDeterministic) {
  const pg::Sampler s(pg::ProcessSpec{pg::Brownian{}}, TimeGrid(1.0, 64));
  EXPECT_EQ(s.sample(5, 3).front().values, s.sample(5, 3).front().values);
  EXPECT_NE(s.sample(5, 3).front().values, s.sample(5, 4).front().values);
}

TEST(Brownian, TerminalVariance) {
  const TimeGrid g(2.0, 32);
  const std::size_t n = 20000;
  double sq = 0.0, q4 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = pg::sample_brownian(g, path_seed(11, k)).back();
    sq += x * x;
    q4 += x * x * x * x;
  }
  const double m = sq / n;
  const double se = std::sqrt((q4 / n - m * m) / n);
  EXPECT_NEAR(m, 2.0, 4 * se);
}

TEST(FBm, CovarianceFormula) {
  for (double h : {0.3, 0.5, 0.7}) {
    EXPECT_NEAR(pg::fbm_covariance(h, 0.3, 0.8), cov_oracle(h, 0.3, 0.8), 1e-14);
  }
}

TEST(FBm, DaviesHarteMatchesLawAtTerminalTime) {
  for (double h : {0.3, 0.7}) {
    const TimeGrid g(1.0, 128);
    const std::size_t n = 8000;
    double s = 0.0, sq = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const Path p = pg::sample_fbm(h, g, path_seed(3, k));
      const double v = p[64] * p[128];
      s += v;
      sq += v * v;
    }
    const double m = s / n, se = std::sqrt((sq / n - m * m) / n);
    EXPECT_NEAR(m, cov_oracle(h, 0.5, 1.0), 4 * se) << h;
  }
}

TEST(FBm, CholeskyAndEmbeddingAgreeInLaw) {
  const TimeGrid g(1.0, 32);
  const pg::FbmGenerator dh(0.7, g, pg::FbmMethod::davies_harte);
  const pg::FbmGenerator ch(0.7, g, pg::FbmMethod::exact_cholesky);
  EXPECT_EQ(dh.method_in_use(), pg::FbmMethod::davies_harte);
  Engine e1(1), e2(2);
  double a = 0.0, b = 0.0;
  const std::size_t n = 6000;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = dh.sample(e1)[16], y = ch.sample(e2)[16];
    a += x * x;
    b += y * y;
  }
  const double law = std::pow(0.5, 1.4);
  EXPECT_NEAR(a / n, law, 0.05 * law);
  EXPECT_NEAR(b / n, law, 0.05 * law);
}

TEST(FBm, RejectsHurstOutOfRange) {
  EXPECT_THROW(pg::ProcessSpec{pg::FBm{1.2}}.validate(), DomainError);
  EXPECT_THROW(pg::ProcessSpec{pg::FBm{0.0}}.validate(), DomainError);
}

TEST(ItoQuadratic, DiscreteIdentity) {
  const Path b = pg::sample_brownian(TimeGrid(1.0, 500), 9);
  const auto r = pg::ito_quadratic_from_brownian(b);
  double qv = 0.0;
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    qv += (b[i + 1] - b[i]) * (b[i + 1] - b[i]);
  }
  EXPECT_NEAR(r.x.back(), 0.5 * b.back() * b.back() - 0.5 * qv + 1.0, 1e-12);
}

TEST(Tanaka, DecompositionAndMonotoneLocalTime) {
  const Path b = pg::sample_brownian(TimeGrid(1.0, 1000), 21);
  const auto r = pg::tanaka_from_brownian(b, std::nullopt);
  for (std::size_t i = 0; i < b.size(); ++i) {
    EXPECT_NEAR(r.abs_b[i], r.martingale[i] + r.local_time[i], 1e-12);
    if (i > 0) {
      EXPECT_GE(r.local_time[i], r.local_time[i - 1]);
    }
  }
}

TEST(Tanaka, CappedLocalTimeStops) {
  const Path b = pg::sample_brownian(TimeGrid(1.0, 1000), 22);
  const auto r = pg::tanaka_from_brownian(b, 0.05);
  const auto free = pg::tanaka_from_brownian(b, std::nullopt);
  std::size_t first = b.size();
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (free.local_time[i] > 0.05) {
      first = i;
      break;
    }
  }
  ASSERT_LT(first, b.size());
  for (std::size_t i = first; i < b.size(); ++i) {
    EXPECT_EQ(r.local_time[i], free.local_time[first]);
    EXPECT_NEAR(r.abs_b[i], r.martingale[i] + r.local_time[i], 1e-12);
  }
}

TEST(Perturbation, StaysBounded) {
  const auto v = pg::Perturbation::sine(0.5, 3.0, 0.2);
  const std::vector<double> prefix = {0.0};
  for (double t = 0.0; t <= 1.0; t += 0.01) {
    EXPECT_LE(std::abs(v.value(t, prefix)), 0.2 + 1e-15);
  }
}

TEST(ConditionStar, BrownianSatisfiesLinearDelta) {
  const Path b = pg::sample_brownian(TimeGrid(1.0, 20000), 4);
  const auto res = pg::check_condition_star(pg::realized_quadratic_variation(b),
                                            [](double h) { return h; }, 0.1);
  EXPECT_TRUE(res.satisfied) << res.min_increment;
  const auto fail = pg::check_condition_star(pg::realized_quadratic_variation(b),
                                             [](double h) { return 2 * h; }, 0.1);
  EXPECT_FALSE(fail.satisfied);
}

TEST(PowerIntegrand, TerminalVariance) {
  const double alpha = -0.25;
  const TimeGrid g(1.0, 256);
  const std::size_t n = 10000;
  double s = 0.0, q = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = pg::sample_power_integrand(alpha, pg::Perturbation::none(), g,
                                                path_seed(8, k))
                         .back();
    s += x * x;
    q += x * x * x * x;
  }
  const double m = s / n, se = std::sqrt((q / n - m * m) / n);
  EXPECT_NEAR(m, 1.0 / (2 * alpha + 1), 4 * se + 0.01);
}

TEST(QuadraticVariation, Cumulative) {
  const Path p(TimeGrid(1.0, 3), {0.0, 1.0, -1.0, 0.0});
  const auto qv = pg::realized_quadratic_variation(p);
  EXPECT_EQ(qv.values, (std::vector<double>{0.0, 1.0, 5.0, 6.0}));
}

TEST(ConditionStar, ItoQuadraticMartingalePartFailsAtItsOwnScale) {
  // [M,M] over [0,h] is int_0^h B^2 with mean h^2/2, so delta(h) = h^2/2 fails often
  const TimeGrid g(1.0, 1000);
  std::size_t fails = 0;
  for (std::uint64_t k = 0; k < 200; ++k) {
    auto r = pg::sample_ito_quadratic(g, path_seed(5, k));
    for (std::size_t i = 0; i < r.x.size(); ++i) {
      r.x[i] -= g.time(i);
    }
    fails += !pg::check_condition_star(pg::realized_quadratic_variation(r.x),
                                       [](double h) { return h * h / 2; }, 0.1)
                  .satisfied;
  }
  EXPECT_GT(fails, 100u);
}
