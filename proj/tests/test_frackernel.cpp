#include "noarb/frackernel.hpp"
#include "noarb/procgen.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace noarb;
namespace fk = noarb::frackernel;

namespace {

// Bracket by a 10^6-node midpoint rule after v = (u-s)^(a+1)/(a+1), which
// removes the (u-s)^a factor from the inner integral.
double bracket_oracle(double hurst, double t, double s) {
  const double a = hurst - 0.5;
  const double vmax = std::pow(t - s, a + 1) / (a + 1);
  const std::size_t n = 1000000;
  const double dv = vmax / n;
  double inner = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = (i + 0.5) * dv;
    const double u = s + std::pow((a + 1) * v, 1.0 / (a + 1));
    inner += std::pow(u, a - 1) * dv;
  }
  return std::pow(t / s, a) * std::pow(t - s, a) - a * std::pow(s, -a) * inner;
}

} // namespace

TEST(Constant, BrownianCaseIsOne) {
  EXPECT_NEAR(fk::analytic_constant(0.5), 1.0, 1e-14);
  EXPECT_NEAR(fk::kernel_value(0.5, 1.0, 0.3), 1.0, 1e-12);
  EXPECT_EQ(fk::kernel_value(0.7, 0.3, 0.5), 0.0);
}

TEST(Kernel, MatchesQuadratureOracle) {
  for (double h : {0.6, 0.7, 0.9}) {
    for (auto [t, s] : {std::pair{1.0, 0.5}, std::pair{0.8, 0.1}, std::pair{0.5, 0.45}}) {
      const double ref = bracket_oracle(h, t, s);
      EXPECT_NEAR(fk::kernel_bracket(h, t, s), ref, 1e-6 * std::abs(ref)) << h << " " << s;
    }
  }
}

TEST(Kernel, RejectsRoughHurst) {
  EXPECT_THROW(fk::kernel_value(0.3, 1.0, 0.5), DomainError);
}

TEST(Kernel, VarianceIdentityByQuadrature) {
  // int_0^t K(t,s)^2 ds = t^{2H}, checked on a graded mesh
  const double h = 0.7, t = 1.0;
  const std::size_t n = 4000;
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x0 = std::pow(static_cast<double>(i) / n, 3.0);
    const double x1 = std::pow(static_cast<double>(i + 1) / n, 3.0);
    const double mid = 0.5 * (x0 + x1);
    const double k = fk::kernel_value(h, t, mid);
    var += k * k * (x1 - x0);
  }
  EXPECT_NEAR(var, 1.0, 1e-3);
}

TEST(Grid, CalibratedCovariance) {
  const TimeGrid g(1.0, 64);
  const auto kg = fk::KernelGrid::build(0.7, g);
  const double dt = g.dt();
  auto cov = [&](std::size_t i, std::size_t j) {
    double c = 0.0;
    for (std::size_t k = 0; k < g.steps(); ++k) {
      c += kg.weights(i, k) * kg.weights(j, k) * dt;
    }
    return c;
  };
  EXPECT_NEAR(cov(64, 64), 1.0, 1e-12);
  const double law = procgen::fbm_covariance(0.7, 0.5, 1.0);
  EXPECT_NEAR(cov(32, 64), law, 0.02 * law);
  EXPECT_NEAR(kg.constant, kg.analytic, 0.01 * kg.analytic);
}

TEST(FractionalDerivative, PowerFunctions) {
  const double h = 0.7, a = h - 0.5;
  const TimeGrid g(1.0, 256);
  std::vector<double> lin(g.size()), sq(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    lin[i] = g.time(i);
    sq[i] = g.time(i) * g.time(i);
  }
  const auto dl = fk::fractional_derivative(std::span<const double>(lin), g, h);
  const auto ds = fk::fractional_derivative(std::span<const double>(sq), g, h);
  for (std::size_t i : {64u, 128u, 256u}) {
    const double t = g.time(i);
    EXPECT_NEAR(dl[i], std::pow(t, 1 - a) / std::tgamma(2 - a), 1e-10);
    const double e = 2 * std::pow(t, 2 - a) / std::tgamma(3 - a);
    EXPECT_NEAR(ds[i], e, 1e-3 * e);
  }
}

TEST(FractionalDerivative, SingularCallable) {
  const double h = 0.7, a = h - 0.5;
  const TimeGrid g(1.0, 128);
  const auto d = fk::fractional_derivative([](double t) { return std::sqrt(t); }, g, h);
  const double e = std::tgamma(1.5) / std::tgamma(1.5 - a) * std::pow(1.0, 0.5 - a);
  EXPECT_NEAR(d.back(), e, 2e-3 * e);
}

TEST(Inverse, RoundTrip) {
  const double h = 0.7;
  const TimeGrid g(1.0, 256);
  const auto kg = fk::KernelGrid::build(h, g);
  std::vector<double> f(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    f[i] = g.time(i) * g.time(i);
  }
  const auto a = fk::inverse_K(f, g, h, kg.constant);
  const auto back = fk::apply_K(a, kg);
  for (std::size_t i : {128u, 256u}) {
    EXPECT_NEAR(back[i], f[i], 2e-3) << i;
  }
}

TEST(Inverse, ConstantDriftClosedForm) {
  // K^{-1}(mu t)(s) = mu s^{-a} Gamma(1-a) / (Gamma(1-2a) C Gamma(H+1/2)), a = H-1/2
  const double h = 0.7, mu = 0.5;
  const TimeGrid g(1.0, 256);
  const double c = fk::analytic_constant(h);
  const auto a = fk::inverse_K_drift([mu](double) { return mu; }, g, h, c);
  for (std::size_t i : {64u, 128u, 256u}) {
    const double s = g.time(i);
    const double al = h - 0.5;
    const double e = mu * std::pow(s, -al) * std::tgamma(1 - al) /
                     (std::tgamma(1 - 2 * al) * c * std::tgamma(h + 0.5));
    EXPECT_NEAR(a[i], e, 1e-3 * e);
  }
}

TEST(Girsanov, ZeroDriftIsIdentity) {
  const TimeGrid g(1.0, 64);
  const auto kg = fk::KernelGrid::build(0.7, g);
  const Path b = procgen::sample_brownian(g, 1);
  const auto d = fk::girsanov_density([](double) { return 0.0; }, b, kg);
  for (double l : d.lambda) {
    EXPECT_EQ(l, 1.0);
  }
}

TEST(Girsanov, UnitMean) {
  const TimeGrid g(1.0, 64);
  const auto kg = fk::KernelGrid::build(0.7, g);
  const auto a = fk::inverse_K_drift([](double) { return 0.5; }, g, 0.7, kg.constant);
  const std::size_t n = 5000;
  double s = 0.0, sq = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double l = fk::girsanov_density(a, procgen::sample_brownian(g, path_seed(4, k)), 0.7)
                         .lambda.back();
    s += l;
    sq += l * l;
  }
  const double m = s / n, se = std::sqrt((sq / n - m * m) / n);
  EXPECT_NEAR(m, 1.0, 4 * se);
}
