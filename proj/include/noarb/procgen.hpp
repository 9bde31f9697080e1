#pragma once

#include "noarb/path.hpp"
#include "noarb/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>

namespace noarb::procgen {

enum class FbmMethod { exact_cholesky, davies_harte };

/// Bounded adapted perturbation V. Every variant is clipped to [-bound, bound].
struct Perturbation {
  enum class Kind { none, constant, sine, clipped_running_max };

  Kind kind = Kind::none;
  double level = 0.0;     // constant value, sine amplitude or running-max scale
  double frequency = 0.0; // sine frequency in cycles per unit time
  double bound = 0.0;     // declared modulus B_V

  static Perturbation none() { return {}; }
  static Perturbation constant(double c);
  static Perturbation sine(double amplitude, double frequency, double bound);
  static Perturbation clipped_running_max(double scale, double bound);

  /// V_t given the driver prefix up to and including t's grid index.
  double value(double t, std::span<const double> driver_prefix) const;
};

/// Bounded adapted integrand mu_s = clamp(base + amplitude * sin(B_s)) with
/// |mu| >= lower_bound enforced (lower_bound > 0 when required).
struct Integrand {
  double base = 1.0;
  double amplitude = 0.0;
  double lower_bound = 0.0;
  double upper_bound = 1.0;

  double value(double driver) const;
};

/// Moving-average kernel phi, vanishing on negative arguments. When the
/// semimartingale form phi(t) = v + int_0^t psi is known it is kept alongside.
struct KernelSpec {
  struct SemimartingaleForm {
    double v;
    std::function<double(double)> psi;
  };

  std::function<double(double)> phi;
  std::optional<SemimartingaleForm> form;
  std::string label;

  double operator()(double t) const { return t < 0.0 ? 0.0 : phi(t); }

  static KernelSpec fractional(double hurst);
  static KernelSpec indicator();
  static KernelSpec zero();
  static KernelSpec semimartingale(double v, std::function<double(double)> psi);
};

struct ProcessSpec;
using SpecPtr = std::shared_ptr<const ProcessSpec>;

struct Brownian {};
struct FBm {
  double hurst;
  FbmMethod method = FbmMethod::davies_harte;
};
struct GeometricFBm {
  double hurst;
  FbmMethod method = FbmMethod::davies_harte;
};
struct MovingAverage {
  KernelSpec kernel;
  double left_truncation = 0.0; // 0 selects the default 10 * horizon
};
struct ItoQuadratic {};
struct TanakaAbs {};
struct TanakaCapped {
  double cap;
};
struct PowerIntegrand {
  double alpha;
  Perturbation perturbation;
};
struct ItoIntegral {
  Integrand mu;
  Perturbation perturbation;
};
struct DriftPower {
  double alpha;
};
struct QVDrift {
  double alpha;
  SpecPtr base;
};
struct Perturbed {
  SpecPtr base;
  Perturbation perturbation;
};

/// Which process to simulate. Bundle layouts produced by Sampler:
///   Brownian        [B]
///   FBm             [B^H]
///   GeometricFBm    [exp(B^H), B^H]
///   MovingAverage   [Y]
///   ItoQuadratic    [X, B]
///   TanakaAbs       [|B|, L, M, B]
///   TanakaCapped    [D, L stopped, M, B]
///   PowerIntegrand  [X, B]
///   ItoIntegral     [X, B]
///   DriftPower      [B + t^alpha, B]
///   QVDrift         [Z, S, [S,S]]
///   Perturbed       [X + V, X, V]
struct ProcessSpec {
  using Variant =
      std::variant<Brownian, FBm, GeometricFBm, MovingAverage, ItoQuadratic,
                   TanakaAbs, TanakaCapped, PowerIntegrand, ItoIntegral,
                   DriftPower, QVDrift, Perturbed>;
  Variant kind;

  std::string name() const;
  /// Throws DomainError when a parameter is outside its admissible range.
  void validate() const;
  /// True for alpha >= 1/2 in the drift families (no-arbitrage regime).
  bool in_power_drift_regime() const;
};

SpecPtr make_spec(ProcessSpec::Variant v);

/// Reusable sampler: precomputes factorizations once per (spec, grid).
class Sampler {
public:
  Sampler(const ProcessSpec &spec, TimeGrid grid);
  ~Sampler();
  Sampler(Sampler &&) noexcept;
  Sampler &operator=(Sampler &&) noexcept;

  const TimeGrid &grid() const { return grid_; }
  const ProcessSpec &spec() const { return spec_; }

  PathBundle sample(std::uint64_t seed) const;
  PathBundle sample(std::uint64_t base_seed, std::uint64_t index) const {
    return sample(path_seed(base_seed, index));
  }
  /// Non-empty when a requested Davies-Harte embedding was replaced by Cholesky.
  std::string diagnostics() const;

private:
  struct Impl;
  ProcessSpec spec_;
  TimeGrid grid_;
  std::unique_ptr<Impl> impl_;
};

/// Path source for Monte-Carlo consumers: scenario index -> bundle.
using PathSource = std::function<PathBundle(std::uint64_t)>;

PathSource make_source(const ProcessSpec &spec, TimeGrid grid,
                       std::uint64_t seed);

// ---- individual generators -------------------------------------------------

Path brownian_from_normals(const TimeGrid &grid, std::span<const double> z);
Path sample_brownian(const TimeGrid &grid, std::uint64_t seed);

/// fBm with Var(B^H_t) = t^{2H}.
double fbm_covariance(double hurst, double s, double t);

class FbmGenerator {
public:
  FbmGenerator(double hurst, TimeGrid grid, FbmMethod method);

  Path sample(Engine &engine) const;
  FbmMethod method_in_use() const { return method_; }
  const std::string &diagnostic() const { return diagnostic_; }

private:
  double hurst_;
  TimeGrid grid_;
  FbmMethod method_;
  std::string diagnostic_;
  Eigen::MatrixXd chol_;       // lower factor of the fBm covariance
  Eigen::VectorXd sqrt_eigen_; // circulant spectrum square roots
};

Path sample_fbm(double hurst, const TimeGrid &grid, std::uint64_t seed,
                FbmMethod method = FbmMethod::davies_harte);

/// Square roots of the circulant-embedding spectrum for an autocovariance
/// sequence gamma[0..n]; nullopt when the embedding is not PSD.
std::optional<Eigen::VectorXd>
circulant_sqrt_spectrum(std::span<const double> gamma);

/// Constant c_H of the fractional moving average (squared-bracket form).
double moving_average_fbm_constant(double hurst);

/// Weight matrix W with Y_{t_i} = sum_c W(i, c) * z_c, z iid standard normal.
Eigen::MatrixXd moving_average_weights(const KernelSpec &kernel,
                                       const TimeGrid &grid,
                                       double left_truncation);
/// Exact covariance of the discretized scheme at the grid points.
Eigen::MatrixXd moving_average_covariance(const KernelSpec &kernel,
                                          const TimeGrid &grid,
                                          double left_truncation);
/// |Var_L(Y_T) - Var_{2L}(Y_T)| for the discretized scheme.
double moving_average_truncation_error(const KernelSpec &kernel,
                                       const TimeGrid &grid,
                                       double left_truncation);

Path sample_moving_average(const KernelSpec &kernel, const TimeGrid &grid,
                           std::uint64_t seed, double left_truncation = 0.0);

struct ItoQuadraticPaths {
  Path x;
  Path b;
};
ItoQuadraticPaths ito_quadratic_from_brownian(const Path &b);
ItoQuadraticPaths sample_ito_quadratic(const TimeGrid &grid,
                                       std::uint64_t seed);

struct TanakaPaths {
  Path abs_b; // |B|, or D = M + L_{t ^ tau} when capped
  Path local_time;
  Path martingale;
  Path brownian;
};
TanakaPaths tanaka_from_brownian(const Path &b, std::optional<double> cap);
TanakaPaths sample_tanaka(const TimeGrid &grid, std::uint64_t seed,
                          std::optional<double> cap = std::nullopt);

/// Euler sum of s^alpha dB plus V. The first cell uses the variance-matched
/// weight when alpha < 0 (left point is singular).
Path power_integrand_from_brownian(double alpha, const Perturbation &v,
                                   const Path &b);
Path sample_power_integrand(double alpha, const Perturbation &v,
                            const TimeGrid &grid, std::uint64_t seed);

QVPath realized_quadratic_variation(const Path &path);

struct ConditionStarResult {
  bool satisfied = false;
  double min_increment = 0.0;
  std::size_t worst_start = 0;
  double threshold = 0.0;
};

/// Checks [S,S]_{t+h} - [S,S]_t >= delta(h) * (1 - relative_slack) on every
/// grid window of ceil(h / dt) steps.
ConditionStarResult check_condition_star(const QVPath &qv,
                                         const std::function<double(double)> &delta,
                                         double h, double relative_slack = 0.1);

} // namespace noarb::procgen
