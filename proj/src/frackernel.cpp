#include "noarb/frackernel.hpp"

#include "noarb/format.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <iostream>

namespace noarb::frackernel {

namespace {

void check_hurst(double hurst) {
  if (!(hurst >= 0.5 && hurst < 1.0)) {
    throw DomainError("kernel operators need 1/2 <= H < 1, got H=" + fmt12(hurst));
  }
}

using Gauss = boost::math::quadrature::gauss<double, 16>;

// Cell integral of g over (a, b). A power singularity s^{-p} at a (or a
// vanishing (b - s)^q at b) is flattened by s = a + L v^{1/(1-p)}.
double cell_integral(const std::function<double(double)> &g, double a, double b,
                     double left_power, double right_power) {
  const double len = b - a;
  double total = 0.0;
  const bool left = left_power != 0.0;
  const bool right = right_power != 0.0;
  const double mid = left && right ? a + 0.5 * len : (left ? b : a);
  if (left) {
    const double p = 1.0 / (1.0 - left_power);
    const double l = mid - a;
    total += Gauss::integrate(
        [&](double v) {
          if (v <= 0.0) {
            return 0.0;
          }
          return g(a + l * std::pow(v, p)) * l * p * std::pow(v, p - 1.0);
        },
        0.0, 1.0);
  }
  if (right) {
    const double q = 1.0 / (1.0 + right_power);
    const double l = b - mid;
    total += Gauss::integrate(
        [&](double w) {
          if (w <= 0.0) {
            return 0.0;
          }
          return g(b - l * std::pow(w, q)) * l * q * std::pow(w, q - 1.0);
        },
        0.0, 1.0);
  }
  if (!left && !right) {
    total = Gauss::integrate(g, a, b);
  }
  return total;
}

} // namespace

double analytic_constant(double hurst) {
  check_hurst(hurst);
  using boost::math::tgamma;
  return std::sqrt(2.0 * hurst * tgamma(1.5 - hurst) /
                   (tgamma(2.0 - 2.0 * hurst) * tgamma(hurst + 0.5)));
}

double kernel_bracket(double hurst, double t, double s) {
  check_hurst(hurst);
  if (s <= 0.0) {
    throw DomainError("kernel needs s > 0");
  }
  if (s >= t) {
    return 0.0;
  }
  const double a = hurst - 0.5;
  if (a == 0.0) {
    return 1.0;
  }
  // v = (u - s)^{1+a} removes the (u - s)^a factor
  const double top = std::pow(t - s, 1.0 + a);
  const auto integrand = [&](double v) {
    return std::pow(s + std::pow(v, 1.0 / (1.0 + a)), a - 1.0);
  };
  const double inner = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(
                           integrand, 0.0, top, 12, 1e-10) /
                       (1.0 + a);
  return std::pow(t / s, a) * std::pow(t - s, a) - a * std::pow(s, -a) * inner;
}

namespace {

// Fixed-rule bracket for grid construction: u = s + (t - s) y^k with
// k = 3 / (1 + a) leaves the smooth weight y^2.
double bracket_fixed(double a, double t, double s) {
  if (s >= t) {
    return 0.0;
  }
  if (a == 0.0) {
    return 1.0;
  }
  using G = boost::math::quadrature::gauss<double, 30>;
  const double k = 3.0 / (1.0 + a);
  const double len = t - s;
  const double inner =
      k * std::pow(len, 1.0 + a) *
      G::integrate([&](double y) { return std::pow(s + len * std::pow(y, k), a - 1.0) * y * y; },
                   0.0, 1.0);
  return std::pow(t / s, a) * std::pow(len, a) - a * std::pow(s, -a) * inner;
}

} // namespace

double kernel_value(double hurst, double t, double s, double constant) {
  if (s >= t) {
    return 0.0;
  }
  return constant * kernel_bracket(hurst, t, s);
}

double kernel_value(double hurst, double t, double s) {
  return kernel_value(hurst, t, s, analytic_constant(hurst));
}

KernelGrid KernelGrid::build(double hurst, const TimeGrid &grid) {
  check_hurst(hurst);
  const std::size_t n = grid.steps();
  const double dt = grid.dt();
  const double a = hurst - 0.5;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + 1),
                                            static_cast<Eigen::Index>(n));
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = grid.time(i);
    const auto g = [&](double s) { return bracket_fixed(a, t, s); };
    for (std::size_t j = 0; j < i; ++j) {
      const double lp = j == 0 ? a : 0.0;
      const double rp = j + 1 == i ? a : 0.0;
      w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          cell_integral(g, grid.time(j), grid.time(j + 1), lp, rp) / dt;
    }
  }
  const double var = w.row(static_cast<Eigen::Index>(n)).squaredNorm() * dt;
  const double c = std::sqrt(std::pow(grid.horizon(), 2.0 * hurst) / var);
  return KernelGrid{hurst, grid, c * w, c, analytic_constant(hurst)};
}

Path KernelGrid::apply(const Path &brownian) const {
  if (!(brownian.grid == grid)) {
    throw DomainError("Brownian path is on a different grid");
  }
  Eigen::VectorXd db(static_cast<Eigen::Index>(grid.steps()));
  for (std::size_t j = 0; j < grid.steps(); ++j) {
    db(static_cast<Eigen::Index>(j)) = brownian[j + 1] - brownian[j];
  }
  const Eigen::VectorXd y = weights * db;
  return Path(grid, std::vector<double>(y.data(), y.data() + y.size()));
}

void KernelGrid::write_csv(std::ostream &out) const {
  out << "t,s,K\n";
  for (std::size_t i = 1; i <= grid.steps(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      out << fmt12(grid.time(i)) << ',' << fmt12(grid.time(j) + 0.5 * grid.dt()) << ','
          << fmt12(weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))
          << '\n';
    }
  }
}

std::vector<double> apply_K(std::span<const double> h, const KernelGrid &kg) {
  const std::size_t n = kg.grid.steps();
  if (h.size() != n + 1) {
    throw DomainError("apply_K: sample count does not match the grid");
  }
  const double dt = kg.grid.dt();
  std::vector<double> out(n + 1, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < i; ++j) {
      s += kg.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * 0.5 *
           (h[j] + h[j + 1]);
    }
    out[i] = s * dt;
  }
  return out;
}

// ---- fractional derivative --------------------------------------------------------

namespace {

// a * int over the cell (t_j, t_{j+1}) of (f_n - f(s)) (t_n - s)^{-a-1} ds for the
// linear interpolant of f between fj and fj1.
double marchaud_cell(double a, double fn, double fj, double fj1, double u0, double u1,
                     double dt) {
  // f_n - f(s) = c0 - c1 (u - u1), u = t_n - s
  const double c1 = (fj - fj1) / dt;
  const double c0 = fn - fj1;
  const double m1 = (std::pow(u0, 1.0 - a) - std::pow(u1, 1.0 - a)) / (1.0 - a);
  double out = -a * c1 * m1;
  if (u1 > 0.0) {
    // a * int u^{-a-1} = u1^{-a} - u0^{-a}
    out += (c0 + c1 * u1) * (std::pow(u1, -a) - std::pow(u0, -a));
  }
  return out;
}

} // namespace

double holder_probe(std::span<const double> f, const TimeGrid &grid) {
  std::vector<double> lx, ly;
  for (std::size_t k = 1; 4 * k < f.size(); k *= 2) {
    double m = 0.0;
    for (std::size_t i = 0; i + k < f.size(); ++i) {
      m = std::max(m, std::abs(f[i + k] - f[i]));
    }
    if (m > 0.0) {
      lx.push_back(std::log(static_cast<double>(k) * grid.dt()));
      ly.push_back(std::log(m));
    }
  }
  if (lx.size() < 2) {
    return -1.0;
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(lx.size());
  my /= static_cast<double>(lx.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

std::vector<double> fractional_derivative(std::span<const double> f, const TimeGrid &grid,
                                          double hurst) {
  check_hurst(hurst);
  const std::size_t n = grid.steps();
  if (f.size() != n + 1) {
    throw DomainError("fractional_derivative: sample count does not match the grid");
  }
  const double a = hurst - 0.5;
  const double probe = holder_probe(f, grid);
  if (probe >= 0.0 && probe <= a) {
    std::clog << "warning: samples look rougher (Hoelder ~" << fmt12(probe)
              << ") than the derivative order " << fmt12(a) << "\n";
  }
  const double dt = grid.dt();
  const double norm = 1.0 / boost::math::tgamma(1.0 - a);
  std::vector<double> out(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    const double t = grid.time(k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      sum += marchaud_cell(a, f[k], f[j], f[j + 1], t - grid.time(j),
                           j + 1 == k ? 0.0 : t - grid.time(j + 1), dt);
    }
    out[k] = norm * (f[k] * std::pow(t, -a) + sum);
  }
  return out;
}

std::vector<double> fractional_derivative(const std::function<double(double)> &f,
                                          const TimeGrid &grid, double hurst) {
  check_hurst(hurst);
  const std::size_t n = grid.steps();
  const double a = hurst - 0.5;
  const double dt = grid.dt();
  const double norm = 1.0 / boost::math::tgamma(1.0 - a);
  std::vector<double> fv(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    fv[k] = f(grid.time(k));
  }
  boost::math::quadrature::tanh_sinh<double> ts;
  std::vector<double> out(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    const double t = grid.time(k);
    const double fn = fv[k];
    double sum = 0.0;
    // first cell from the callable; near t itself (k = 1) the far half is linear
    const double edge = k == 1 ? 0.5 * dt : dt;
    if (a > 0.0) {
      sum += a * ts.integrate(
                     [&](double s) { return (fn - f(s)) * std::pow(t - s, -a - 1.0); }, 0.0,
                     edge);
    }
    if (k == 1) {
      sum += marchaud_cell(a, fn, f(edge), fn, t - edge, 0.0, dt - edge);
    }
    for (std::size_t j = 1; j < k; ++j) {
      sum += marchaud_cell(a, fn, fv[j], fv[j + 1], t - grid.time(j),
                           j + 1 == k ? 0.0 : t - grid.time(j + 1), dt);
    }
    out[k] = norm * (fn * std::pow(t, -a) + sum);
  }
  return out;
}

// ---- inverse operator --------------------------------------------------------------

namespace {

double weight_exponent(double hurst, InverseVariant v) {
  return v == InverseVariant::standard ? 0.5 - hurst : 0.5;
}

double inverse_norm(double hurst, double constant) {
  return 1.0 / (constant * boost::math::tgamma(hurst + 0.5));
}

} // namespace

std::vector<double> inverse_K(std::span<const double> h, const TimeGrid &grid, double hurst,
                              double constant, InverseVariant variant) {
  check_hurst(hurst);
  const std::size_t n = grid.steps();
  if (h.size() != n + 1 || n < 3) {
    throw DomainError("inverse_K needs one sample per grid point and at least 3 steps");
  }
  const double dt = grid.dt();
  const double a = hurst - 0.5;
  const double e = weight_exponent(hurst, variant);
  std::vector<double> g(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    double d;
    if (i == n) {
      d = (3.0 * h[n] - 4.0 * h[n - 1] + h[n - 2]) / (2.0 * dt);
    } else {
      d = (h[i + 1] - h[i - 1]) / (2.0 * dt);
    }
    g[i] = std::pow(grid.time(i), e) * d;
  }
  g[0] = 2.0 * g[1] - g[2];
  const auto dg = fractional_derivative(std::span<const double>(g), grid, hurst);
  const double c = inverse_norm(hurst, constant);
  std::vector<double> out(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    out[i] = c * std::pow(grid.time(i), a) * dg[i];
  }
  out[0] = 2.0 * out[1] - out[2];
  return out;
}

std::vector<double> inverse_K_drift(const std::function<double(double)> &mu,
                                    const TimeGrid &grid, double hurst, double constant,
                                    InverseVariant variant) {
  check_hurst(hurst);
  const double a = hurst - 0.5;
  const double e = weight_exponent(hurst, variant);
  const auto g = [&](double s) { return std::pow(s, e) * mu(s); };
  const auto dg = fractional_derivative(g, grid, hurst);
  const double c = inverse_norm(hurst, constant);
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t i = 1; i < out.size(); ++i) {
    out[i] = c * std::pow(grid.time(i), a) * dg[i];
  }
  return out;
}

DensityPath girsanov_density(std::span<const double> a_at_grid, const Path &brownian,
                             double hurst) {
  check_hurst(hurst);
  const TimeGrid &grid = brownian.grid;
  const std::size_t n = grid.steps();
  if (a_at_grid.size() != n + 1) {
    throw DomainError("integrand does not match the grid");
  }
  const double dt = grid.dt();
  DensityPath d{grid, std::vector<double>(n + 1, 1.0), std::vector<double>(n, 0.0)};
  double log_lambda = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double aj = j == 0 ? a_at_grid[1] / (1.0 - (hurst - 0.5)) : a_at_grid[j];
    if (!std::isfinite(aj)) {
      throw DomainError("drift integrand is not finite");
    }
    d.integrand[j] = aj;
    log_lambda -= aj * (brownian[j + 1] - brownian[j]) + 0.5 * aj * aj * dt;
    d.lambda[j + 1] = std::exp(log_lambda);
  }
  return d;
}

DensityPath girsanov_density(const std::function<double(double)> &mu, const Path &brownian,
                             const KernelGrid &kg) {
  const auto a = inverse_K_drift(mu, kg.grid, kg.hurst, kg.constant);
  return girsanov_density(a, brownian, kg.hurst);
}

void write_density_csv(std::ostream &out, const DensityPath &d) {
  out << "t,Lambda,a\n";
  for (std::size_t i = 0; i < d.lambda.size(); ++i) {
    out << fmt12(d.grid.time(i)) << ',' << fmt12(d.lambda[i]) << ','
        << (i < d.integrand.size() ? fmt12(d.integrand[i]) : std::string()) << '\n';
  }
}

} // namespace noarb::frackernel
