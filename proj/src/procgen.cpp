#include "noarb/procgen.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>

namespace noarb::procgen {

// ---- perturbations and integrands -------------------------------------------

Perturbation Perturbation::constant(double c) {
  return {Kind::constant, c, 0.0, std::abs(c)};
}

Perturbation Perturbation::sine(double amplitude, double frequency,
                                double bound) {
  return {Kind::sine, amplitude, frequency, bound};
}

Perturbation Perturbation::clipped_running_max(double scale, double bound) {
  return {Kind::clipped_running_max, scale, 0.0, bound};
}

double Perturbation::value(double t, std::span<const double> prefix) const {
  double raw = 0.0;
  switch (kind) {
  case Kind::none:
    return 0.0;
  case Kind::constant:
    raw = level;
    break;
  case Kind::sine:
    raw = level * std::sin(2.0 * std::numbers::pi * frequency * t);
    break;
  case Kind::clipped_running_max:
    raw = level * *std::max_element(prefix.begin(), prefix.end());
    break;
  }
  return std::clamp(raw, -bound, bound);
}

double Integrand::value(double driver) const {
  double mu = base + amplitude * std::sin(driver);
  mu = std::clamp(mu, -upper_bound, upper_bound);
  if (std::abs(mu) < lower_bound) {
    mu = mu < 0.0 ? -lower_bound : lower_bound;
  }
  return mu;
}

// ---- kernels ----------------------------------------------------------------

KernelSpec KernelSpec::fractional(double hurst) {
  const double a = hurst - 0.5;
  KernelSpec k;
  k.phi = [a](double t) { return t > 0.0 ? std::pow(t, a) : 0.0; };
  k.label = "fractional(H=" + std::to_string(hurst) + ")";
  return k;
}

KernelSpec KernelSpec::indicator() {
  KernelSpec k = semimartingale(1.0, [](double) { return 0.0; });
  k.phi = [](double t) { return t > 0.0 ? 1.0 : 0.0; };
  k.label = "indicator";
  return k;
}

KernelSpec KernelSpec::zero() {
  KernelSpec k;
  k.phi = [](double) { return 0.0; };
  k.form = SemimartingaleForm{0.0, [](double) { return 0.0; }};
  k.label = "zero";
  return k;
}

KernelSpec KernelSpec::semimartingale(double v,
                                      std::function<double(double)> psi) {
  KernelSpec k;
  k.form = SemimartingaleForm{v, psi};
  k.phi = [v, psi](double t) {
    if (t <= 0.0) {
      return 0.0;
    }
    boost::math::quadrature::tanh_sinh<double> integrator;
    return v + integrator.integrate(psi, 0.0, t);
  };
  k.label = "semimartingale";
  return k;
}

// ---- spec --------------------------------------------------------------------

SpecPtr make_spec(ProcessSpec::Variant v) {
  return std::make_shared<const ProcessSpec>(ProcessSpec{std::move(v)});
}

namespace {

template <class... Ts> struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts> Overloaded(Ts...) -> Overloaded<Ts...>;

void check_hurst(double h) {
  if (!(h > 0.0 && h < 1.0)) {
    throw DomainError("Hurst exponent must lie in (0, 1)");
  }
}

void check_perturbation(const Perturbation &v) {
  if (!(v.bound >= 0.0) || !std::isfinite(v.bound)) {
    throw DomainError("perturbation bound must be finite and nonnegative");
  }
  if (v.kind == Perturbation::Kind::constant && std::abs(v.level) > v.bound) {
    throw DomainError("constant perturbation exceeds its declared bound");
  }
}

std::string fmt_double(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

} // namespace

std::string ProcessSpec::name() const {
  return std::visit(
      Overloaded{
          [](const Brownian &) -> std::string { return "brownian"; },
          [](const FBm &f) { return "fbm(H=" + fmt_double(f.hurst) + ")"; },
          [](const GeometricFBm &f) {
            return "geometric-fbm(H=" + fmt_double(f.hurst) + ")";
          },
          [](const MovingAverage &m) {
            return "moving-average(" + m.kernel.label + ")";
          },
          [](const ItoQuadratic &) -> std::string { return "ito-quadratic"; },
          [](const TanakaAbs &) -> std::string { return "tanaka-abs"; },
          [](const TanakaCapped &c) {
            return "tanaka-capped(N=" + fmt_double(c.cap) + ")";
          },
          [](const PowerIntegrand &p) {
            return "power-integrand(alpha=" + fmt_double(p.alpha) + ")";
          },
          [](const ItoIntegral &) -> std::string { return "ito-integral"; },
          [](const DriftPower &d) {
            return "drift-power(alpha=" + fmt_double(d.alpha) + ")";
          },
          [](const QVDrift &q) {
            return "qv-drift(alpha=" + fmt_double(q.alpha) + ", " +
                   (q.base ? q.base->name() : std::string("?")) + ")";
          },
          [](const Perturbed &p) {
            return (p.base ? p.base->name() : std::string("?")) + "+V";
          },
      },
      kind);
}

void ProcessSpec::validate() const {
  std::visit(
      Overloaded{
          [](const Brownian &) {},
          [](const FBm &f) { check_hurst(f.hurst); },
          [](const GeometricFBm &f) { check_hurst(f.hurst); },
          [](const MovingAverage &m) {
            if (!m.kernel.phi) {
              throw DomainError("moving average requires a kernel");
            }
            if (m.left_truncation < 0.0) {
              throw DomainError("left truncation must be nonnegative");
            }
          },
          [](const ItoQuadratic &) {},
          [](const TanakaAbs &) {},
          [](const TanakaCapped &c) {
            if (!(c.cap > 0.0)) {
              throw DomainError("local-time cap must be positive");
            }
          },
          [](const PowerIntegrand &p) {
            if (!(p.alpha > -0.5)) {
              throw DomainError(
                  "power integrand requires alpha > -1/2 (square integrability)");
            }
            check_perturbation(p.perturbation);
          },
          [](const ItoIntegral &i) {
            if (i.mu.lower_bound < 0.0 || i.mu.upper_bound < i.mu.lower_bound) {
              throw DomainError("integrand bounds must satisfy 0 <= lower <= upper");
            }
            check_perturbation(i.perturbation);
          },
          [](const DriftPower &d) {
            if (!(d.alpha > 0.0)) {
              throw DomainError("drift power requires alpha > 0");
            }
          },
          [](const QVDrift &q) {
            if (!(q.alpha > 0.0)) {
              throw DomainError("quadratic-variation drift requires alpha > 0");
            }
            if (!q.base) {
              throw DomainError("quadratic-variation drift requires a base process");
            }
            q.base->validate();
          },
          [](const Perturbed &p) {
            if (!p.base) {
              throw DomainError("perturbed process requires a base process");
            }
            p.base->validate();
            check_perturbation(p.perturbation);
          },
      },
      kind);
}

bool ProcessSpec::in_power_drift_regime() const {
  if (const auto *d = std::get_if<DriftPower>(&kind)) {
    return d->alpha >= 0.5;
  }
  if (const auto *q = std::get_if<QVDrift>(&kind)) {
    return q->alpha >= 0.5;
  }
  return false;
}

// ---- Brownian ----------------------------------------------------------------

Path brownian_from_normals(const TimeGrid &grid, std::span<const double> z) {
  if (z.size() < grid.steps()) {
    throw DomainError("brownian_from_normals: not enough normals");
  }
  Path b(grid);
  const double sd = std::sqrt(grid.dt());
  for (std::size_t i = 0; i < grid.steps(); ++i) {
    b[i + 1] = b[i] + sd * z[i];
  }
  return b;
}

Path sample_brownian(const TimeGrid &grid, std::uint64_t seed) {
  Engine engine(seed);
  const auto z = standard_normals(engine, grid.steps());
  return brownian_from_normals(grid, z);
}

// ---- fBm -------------------------------------------------------------------------

double fbm_covariance(double hurst, double s, double t) {
  const double e = 2.0 * hurst;
  return 0.5 * (std::pow(std::abs(t), e) + std::pow(std::abs(s), e) -
                std::pow(std::abs(t - s), e));
}

std::optional<Eigen::VectorXd>
circulant_sqrt_spectrum(std::span<const double> gamma) {
  const std::size_t n = gamma.size() - 1;
  const std::size_t m = 2 * n;
  std::vector<double> row(m);
  for (std::size_t j = 0; j <= n; ++j) {
    row[j] = gamma[j];
  }
  for (std::size_t j = n + 1; j < m; ++j) {
    row[j] = gamma[m - j];
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, row);
  double largest = 0.0;
  for (const auto &c : spectrum) {
    largest = std::max(largest, std::abs(c.real()));
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) {
    const double lambda = spectrum[k].real();
    if (lambda < -1e-10 * std::max(1.0, largest)) {
      return std::nullopt;
    }
    out[static_cast<Eigen::Index>(k)] = std::sqrt(std::max(lambda, 0.0));
  }
  return out;
}

FbmGenerator::FbmGenerator(double hurst, TimeGrid grid, FbmMethod method)
    : hurst_(hurst), grid_(grid), method_(method) {
  check_hurst(hurst);
  const std::size_t n = grid.steps();
  if (method_ == FbmMethod::davies_harte) {
    // fractional Gaussian noise autocovariance at unit spacing
    std::vector<double> gamma(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
      const double kk = static_cast<double>(k);
      const double e = 2.0 * hurst;
      gamma[k] = 0.5 * (std::pow(kk + 1.0, e) - 2.0 * std::pow(kk, e) +
                        std::pow(std::abs(kk - 1.0), e));
    }
    auto spectrum = circulant_sqrt_spectrum(gamma);
    if (spectrum) {
      sqrt_eigen_ = std::move(*spectrum);
      return;
    }
    diagnostic_ = "davies-harte embedding not positive semidefinite for H=" +
                  std::to_string(hurst) + ", N=" + std::to_string(n) +
                  "; using exact Cholesky";
    method_ = FbmMethod::exact_cholesky;
  }
  const auto size = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd cov(size, size);
  for (Eigen::Index i = 0; i < size; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double c = fbm_covariance(hurst, grid.time(static_cast<std::size_t>(i) + 1),
                                      grid.time(static_cast<std::size_t>(j) + 1));
      cov(i, j) = c;
      cov(j, i) = c;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("fBm covariance is not positive definite");
  }
  chol_ = llt.matrixL();
}

Path FbmGenerator::sample(Engine &engine) const {
  const std::size_t n = grid_.steps();
  Path out(grid_);
  if (method_ == FbmMethod::exact_cholesky) {
    const auto z = standard_normals(engine, n);
    const Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd x = chol_.triangularView<Eigen::Lower>() * zv;
    for (std::size_t i = 0; i < n; ++i) {
      out[i + 1] = x[static_cast<Eigen::Index>(i)];
    }
    return out;
  }
  const std::size_t m = 2 * n;
  const auto z = standard_normals(engine, 2 * m);
  std::vector<std::complex<double>> weighted(m);
  for (std::size_t k = 0; k < m; ++k) {
    weighted[k] = sqrt_eigen_[static_cast<Eigen::Index>(k)] *
                  std::complex<double>(z[2 * k], z[2 * k + 1]);
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> noise;
  fft.inv(noise, weighted);
  const double scale = std::sqrt(static_cast<double>(m)) * std::pow(grid_.dt(), hurst_);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += scale * noise[i].real();
    out[i + 1] = acc;
  }
  return out;
}

Path sample_fbm(double hurst, const TimeGrid &grid, std::uint64_t seed,
                FbmMethod method) {
  const FbmGenerator gen(hurst, grid, method);
  Engine engine(seed);
  return gen.sample(engine);
}

// ---- moving average --------------------------------------------------------------

double moving_average_fbm_constant(double hurst) {
  check_hurst(hurst);
  const double a = hurst - 0.5;
  if (a == 0.0) {
    return 1.0;
  }
  // [(1+u)^a - u^a]^2 on (0, 1] directly; on [1, inf) via u = 1/x, where
  // (1 + 1/x)^a - x^{-a} = x^{-a} expm1(a log1p(x)).
  const auto near = [a](double u) {
    const double d = std::pow(1.0 + u, a) - std::pow(u, a);
    return d * d;
  };
  const auto far = [a](double x) {
    const double d = std::pow(x, -a) * std::expm1(a * std::log1p(x));
    return d * d / (x * x);
  };
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double integral =
      integrator.integrate(near, 0.0, 1.0) + integrator.integrate(far, 0.0, 1.0);
  return std::sqrt(1.0 / (2.0 * hurst) + integral);
}

namespace {

double default_truncation(const TimeGrid &grid, double left_truncation) {
  return left_truncation > 0.0 ? left_truncation : 10.0 * grid.horizon();
}

} // namespace

Eigen::MatrixXd moving_average_weights(const KernelSpec &kernel,
                                       const TimeGrid &grid,
                                       double left_truncation) {
  const double dt = grid.dt();
  const double l = default_truncation(grid, left_truncation);
  const auto left_cells = static_cast<std::size_t>(std::ceil(l / dt - 1e-9));
  const std::size_t cells = left_cells + grid.steps();
  const double u0 = -static_cast<double>(left_cells) * dt;
  const double sd = std::sqrt(dt);

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.size()),
                                            static_cast<Eigen::Index>(cells));
  for (std::size_t c = 0; c < cells; ++c) {
    const double u = u0 + (static_cast<double>(c) + 0.5) * dt;
    const double anchor = kernel(-u);
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const double t = grid.time(i);
      if (u > t) {
        continue;
      }
      const double value = (kernel(t - u) - anchor) * sd;
      if (!std::isfinite(value)) {
        throw DomainError("moving-average kernel is not square integrable on the "
                          "truncated domain (non-finite weight)");
      }
      w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = value;
    }
  }
  const double last_row = w.row(w.rows() - 1).squaredNorm();
  if (!std::isfinite(last_row)) {
    throw DomainError("moving-average kernel is not square integrable on the "
                      "truncated domain");
  }
  return w;
}

Eigen::MatrixXd moving_average_covariance(const KernelSpec &kernel,
                                          const TimeGrid &grid,
                                          double left_truncation) {
  const Eigen::MatrixXd w = moving_average_weights(kernel, grid, left_truncation);
  return w * w.transpose();
}

double moving_average_truncation_error(const KernelSpec &kernel,
                                       const TimeGrid &grid,
                                       double left_truncation) {
  const double l = default_truncation(grid, left_truncation);
  const auto last = static_cast<Eigen::Index>(grid.steps());
  const Eigen::MatrixXd w1 = moving_average_weights(kernel, grid, l);
  const Eigen::MatrixXd w2 = moving_average_weights(kernel, grid, 2.0 * l);
  return std::abs(w1.row(last).squaredNorm() - w2.row(last).squaredNorm());
}

Path sample_moving_average(const KernelSpec &kernel, const TimeGrid &grid,
                           std::uint64_t seed, double left_truncation) {
  const Eigen::MatrixXd w = moving_average_weights(kernel, grid, left_truncation);
  Engine engine(seed);
  const auto z = standard_normals(engine, static_cast<std::size_t>(w.cols()));
  const Eigen::Map<const Eigen::VectorXd> zv(z.data(), w.cols());
  const Eigen::VectorXd y = w * zv;
  return Path(grid, std::vector<double>(y.data(), y.data() + y.size()));
}

// ---- Ito quadratic, Tanaka, power integrands -----------------------------------

ItoQuadraticPaths ito_quadratic_from_brownian(const Path &b) {
  Path x(b.grid);
  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    integral += b[i] * (b[i + 1] - b[i]);
    x[i + 1] = integral + b.grid.time(i + 1);
  }
  return {std::move(x), b};
}

ItoQuadraticPaths sample_ito_quadratic(const TimeGrid &grid,
                                       std::uint64_t seed) {
  return ito_quadratic_from_brownian(sample_brownian(grid, seed));
}

TanakaPaths tanaka_from_brownian(const Path &b, std::optional<double> cap) {
  const TimeGrid &grid = b.grid;
  Path abs_b(grid), local(grid), mart(grid);
  abs_b[0] = std::abs(b[0]);
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    const double sign = b[i] > 0.0 ? 1.0 : -1.0; // sign(0) := -1
    mart[i + 1] = mart[i] + sign * (b[i + 1] - b[i]);
    abs_b[i + 1] = std::abs(b[i + 1]);
    // |b'| - sign(b) b' is either exactly 0 or 2|b'|
    local[i + 1] = local[i] + (abs_b[i + 1] - sign * b[i + 1]);
  }
  if (cap) {
    std::size_t stop = b.size();
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (local[i] > *cap) {
        stop = i;
        break;
      }
    }
    for (std::size_t i = stop + 1; i < b.size(); ++i) {
      local[i] = local[stop];
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      abs_b[i] = mart[i] + local[i];
    }
  }
  return {std::move(abs_b), std::move(local), std::move(mart), b};
}

TanakaPaths sample_tanaka(const TimeGrid &grid, std::uint64_t seed,
                          std::optional<double> cap) {
  if (cap && !(*cap > 0.0)) {
    throw DomainError("local-time cap must be positive");
  }
  return tanaka_from_brownian(sample_brownian(grid, seed), cap);
}

Path power_integrand_from_brownian(double alpha, const Perturbation &v,
                                   const Path &b) {
  if (!(alpha > -0.5)) {
    throw DomainError("power integrand requires alpha > -1/2");
  }
  check_perturbation(v);
  const TimeGrid &grid = b.grid;
  const double dt = grid.dt();
  Path x(grid);
  double m = 0.0;
  const std::span<const double> driver(b.values);
  x[0] = v.value(0.0, driver.first(1));
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    double weight;
    if (i == 0 && alpha < 0.0) {
      // root-mean-square of s^alpha over the first cell
      weight = std::sqrt(std::pow(dt, 2.0 * alpha) / (2.0 * alpha + 1.0));
    } else {
      weight = std::pow(grid.time(i), alpha);
    }
    m += weight * (b[i + 1] - b[i]);
    x[i + 1] = m + v.value(grid.time(i + 1), driver.first(i + 2));
  }
  return x;
}

Path sample_power_integrand(double alpha, const Perturbation &v,
                            const TimeGrid &grid, std::uint64_t seed) {
  return power_integrand_from_brownian(alpha, v, sample_brownian(grid, seed));
}

// ---- quadratic variation ------------------------------------------------------------

QVPath realized_quadratic_variation(const Path &path) {
  QVPath qv{path.grid, std::vector<double>(path.size(), 0.0)};
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const double d = path[i + 1] - path[i];
    qv.values[i + 1] = qv.values[i] + d * d;
  }
  return qv;
}

ConditionStarResult check_condition_star(const QVPath &qv,
                                         const std::function<double(double)> &delta,
                                         double h, double relative_slack) {
  if (h < qv.grid.dt() * (1.0 - 1e-9)) {
    throw DomainError("check_condition_star: window shorter than the grid step");
  }
  if (std::abs(delta(0.0)) > 1e-15) {
    throw DomainError("check_condition_star: delta(0) must be 0");
  }
  const std::size_t k = qv.grid.span_steps(h);
  ConditionStarResult r;
  r.threshold = delta(h) * (1.0 - relative_slack);
  if (k > qv.grid.steps()) {
    throw DomainError("check_condition_star: window longer than the horizon");
  }
  r.min_increment = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + k < qv.values.size(); ++i) {
    const double inc = qv.values[i + k] - qv.values[i];
    if (inc < r.min_increment) {
      r.min_increment = inc;
      r.worst_start = i;
    }
  }
  r.satisfied = r.min_increment >= r.threshold;
  return r;
}

// ---- sampler ----------------------------------------------------------------------------

struct Sampler::Impl {
  std::optional<FbmGenerator> fbm;
  Eigen::MatrixXd ma_weights;
  std::unique_ptr<Sampler> base;
};

Sampler::Sampler(const ProcessSpec &spec, TimeGrid grid)
    : spec_(spec), grid_(grid), impl_(std::make_unique<Impl>()) {
  spec_.validate();
  std::visit(Overloaded{
                 [&](const FBm &f) { impl_->fbm.emplace(f.hurst, grid, f.method); },
                 [&](const GeometricFBm &f) {
                   impl_->fbm.emplace(f.hurst, grid, f.method);
                 },
                 [&](const MovingAverage &m) {
                   impl_->ma_weights =
                       moving_average_weights(m.kernel, grid, m.left_truncation);
                 },
                 [&](const QVDrift &q) {
                   impl_->base = std::make_unique<Sampler>(*q.base, grid);
                 },
                 [&](const Perturbed &p) {
                   impl_->base = std::make_unique<Sampler>(*p.base, grid);
                 },
                 [](const auto &) {},
             },
             spec_.kind);
}

Sampler::~Sampler() = default;
Sampler::Sampler(Sampler &&) noexcept = default;
Sampler &Sampler::operator=(Sampler &&) noexcept = default;

std::string Sampler::diagnostics() const {
  std::string out;
  if (impl_->fbm) {
    out = impl_->fbm->diagnostic();
  }
  if (impl_->base) {
    const auto inner = impl_->base->diagnostics();
    if (!inner.empty()) {
      out += (out.empty() ? "" : "; ") + inner;
    }
  }
  return out;
}

PathBundle Sampler::sample(std::uint64_t seed) const {
  Engine engine(seed);
  const auto brownian = [&] {
    const auto z = standard_normals(engine, grid_.steps());
    return brownian_from_normals(grid_, z);
  };
  return std::visit(
      Overloaded{
          [&](const Brownian &) { return PathBundle{brownian()}; },
          [&](const FBm &) { return PathBundle{impl_->fbm->sample(engine)}; },
          [&](const GeometricFBm &) {
            Path bh = impl_->fbm->sample(engine);
            Path g = bh;
            for (auto &x : g.values) {
              x = std::exp(x);
            }
            return PathBundle{std::move(g), std::move(bh)};
          },
          [&](const MovingAverage &) {
            const auto &w = impl_->ma_weights;
            const auto z = standard_normals(engine, static_cast<std::size_t>(w.cols()));
            const Eigen::Map<const Eigen::VectorXd> zv(z.data(), w.cols());
            const Eigen::VectorXd y = w * zv;
            return PathBundle{
                Path(grid_, std::vector<double>(y.data(), y.data() + y.size()))};
          },
          [&](const ItoQuadratic &) {
            auto r = ito_quadratic_from_brownian(brownian());
            return PathBundle{std::move(r.x), std::move(r.b)};
          },
          [&](const TanakaAbs &) {
            auto r = tanaka_from_brownian(brownian(), std::nullopt);
            return PathBundle{std::move(r.abs_b), std::move(r.local_time),
                              std::move(r.martingale), std::move(r.brownian)};
          },
          [&](const TanakaCapped &c) {
            auto r = tanaka_from_brownian(brownian(), c.cap);
            return PathBundle{std::move(r.abs_b), std::move(r.local_time),
                              std::move(r.martingale), std::move(r.brownian)};
          },
          [&](const PowerIntegrand &p) {
            Path b = brownian();
            Path x = power_integrand_from_brownian(p.alpha, p.perturbation, b);
            return PathBundle{std::move(x), std::move(b)};
          },
          [&](const ItoIntegral &it) {
            Path b = brownian();
            Path x(grid_);
            const std::span<const double> driver(b.values);
            double m = 0.0;
            x[0] = it.perturbation.value(0.0, driver.first(1));
            for (std::size_t i = 0; i < grid_.steps(); ++i) {
              m += it.mu.value(b[i]) * (b[i + 1] - b[i]);
              x[i + 1] = m + it.perturbation.value(grid_.time(i + 1),
                                                   driver.first(i + 2));
            }
            return PathBundle{std::move(x), std::move(b)};
          },
          [&](const DriftPower &d) {
            Path b = brownian();
            Path y = b;
            for (std::size_t i = 1; i < y.size(); ++i) {
              y[i] += std::pow(grid_.time(i), d.alpha);
            }
            return PathBundle{std::move(y), std::move(b)};
          },
          [&](const QVDrift &q) {
            PathBundle inner = impl_->base->sample(seed);
            const Path &s = inner.front();
            const QVPath qv = realized_quadratic_variation(s);
            Path z = s;
            for (std::size_t i = 0; i < z.size(); ++i) {
              // 0^alpha := 0 for alpha > 0
              z[i] += qv.values[i] > 0.0 ? std::pow(qv.values[i], q.alpha) : 0.0;
            }
            return PathBundle{std::move(z), s, Path(grid_, qv.values)};
          },
          [&](const Perturbed &p) {
            PathBundle inner = impl_->base->sample(seed);
            const Path &x = inner.front();
            Path v(grid_);
            Path y = x;
            const std::span<const double> driver(x.values);
            for (std::size_t i = 0; i < x.size(); ++i) {
              v[i] = p.perturbation.value(grid_.time(i), driver.first(i + 1));
              y[i] += v[i];
            }
            return PathBundle{std::move(y), x, std::move(v)};
          },
      },
      spec_.kind);
}

PathSource make_source(const ProcessSpec &spec, TimeGrid grid,
                       std::uint64_t seed) {
  auto sampler = std::make_shared<const Sampler>(spec, grid);
  return [sampler, seed](std::uint64_t index) {
    return sampler->sample(seed, index);
  };
}

} // namespace noarb::procgen
