#pragma once

#include "noarb/path.hpp"

#include <Eigen/Dense>

#include <functional>
#include <ostream>
#include <span>
#include <vector>

namespace noarb::frackernel {

/// sqrt(2H Gamma(3/2-H) / (Gamma(2-2H) Gamma(H+1/2))): makes Var(int K dB)_t = t^{2H}.
double analytic_constant(double hurst);

/// (t/s)^a (t-s)^a - a s^{-a} int_s^t u^{a-1} (u-s)^a du with a = H - 1/2.
double kernel_bracket(double hurst, double t, double s);

/// C * bracket, C defaulting to analytic_constant(H). Zero for s >= t.
double kernel_value(double hurst, double t, double s);
double kernel_value(double hurst, double t, double s, double constant);

/// Cell-averaged kernel on a grid: weights(i, j) is the mean of K(t_i, .) over
/// (t_j, t_{j+1}), so Y_{t_i} = sum_j weights(i, j) dB_j.
struct KernelGrid {
  double hurst;
  TimeGrid grid;
  Eigen::MatrixXd weights; // (N+1) x N, lower triangular
  double constant;         // calibrated C_H
  double analytic;         // closed-form C_H for comparison

  /// Builds the grid and calibrates C_H so that Var(Y_T) = T^{2H} exactly
  /// for the discrete scheme.
  static KernelGrid build(double hurst, const TimeGrid &grid);

  Path apply(const Path &brownian) const;
  void write_csv(std::ostream &out) const; // t,s,K with s at cell midpoints
};

/// (K h)(t_i) = int_0^{t_i} K(t_i, s) h(s) ds with h at cell midpoints from
/// linear interpolation of the samples.
std::vector<double> apply_K(std::span<const double> h, const KernelGrid &kg);

/// Marchaud-form D^{H-1/2} of the piecewise-linear interpolant of f, exact for
/// piecewise-linear f. Entry 0 is 0.
std::vector<double> fractional_derivative(std::span<const double> f, const TimeGrid &grid,
                                          double hurst);

/// Same for a callable f that may be singular (integrably) at 0: cells away
/// from 0 use the grid samples, the first cell is integrated adaptively.
std::vector<double> fractional_derivative(const std::function<double(double)> &f,
                                          const TimeGrid &grid, double hurst);

/// Weight exponent applied to h' inside the inverse operator.
enum class InverseVariant {
  standard, // r^{1/2-H}
  printed,  // r^{1/2}
};

/// Finite-difference Hoelder exponent estimate of the samples; < 0 when f is flat.
double holder_probe(std::span<const double> f, const TimeGrid &grid);

/// a = K^{-1} h for sampled h (h(0) = 0), a(t_i) at grid points i >= 1 and
/// a(0) extrapolated.
std::vector<double> inverse_K(std::span<const double> h, const TimeGrid &grid, double hurst,
                              double constant, InverseVariant variant = InverseVariant::standard);

/// a = K^{-1} (int_0^. mu) for a drift given as a callable.
std::vector<double> inverse_K_drift(const std::function<double(double)> &mu,
                                    const TimeGrid &grid, double hurst, double constant,
                                    InverseVariant variant = InverseVariant::standard);

struct DensityPath {
  TimeGrid grid;
  std::vector<double> lambda;    // Lambda_{t_i}
  std::vector<double> integrand; // a per cell (t_j, t_{j+1})
};

/// Lambda_t = exp(-sum a_j dB_j - 1/2 sum a_j^2 dt) with left-point a_j; the
/// first cell uses the cell mean of a, assuming a ~ s^{1/2-H} near 0.
DensityPath girsanov_density(std::span<const double> a_at_grid, const Path &brownian,
                             double hurst);

/// Convenience: drift mu(t) -> density along B.
DensityPath girsanov_density(const std::function<double(double)> &mu, const Path &brownian,
                             const KernelGrid &kg);

void write_density_csv(std::ostream &out, const DensityPath &d);

} // namespace noarb::frackernel
