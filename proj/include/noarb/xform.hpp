#pragma once

#include "noarb/procgen.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace noarb::xform {

/// Strictly monotone real map.
class MonotoneMap {
public:
  enum class Tag { identity, exp, log, odd_power, cube_root, affine, arctan, cubic_plus_linear, table };

  static MonotoneMap identity();
  static MonotoneMap exp();
  static MonotoneMap log();
  static MonotoneMap odd_power(int p);
  static MonotoneMap cube_root();
  static MonotoneMap affine(double a, double b);
  static MonotoneMap arctan();
  static MonotoneMap cubic_plus_linear(); // x^3 + x
  /// Piecewise-linear interpolation through (x, y); x strictly increasing and
  /// y strictly monotone, otherwise DomainError. Outside [x0, xn] it is undefined.
  static MonotoneMap table(std::vector<double> x, std::vector<double> y);

  Tag tag() const { return tag_; }
  bool increasing() const { return increasing_; }
  std::string name() const;

  bool in_domain(double x) const;
  double operator()(double x) const;

  /// Throws DomainError unless f is defined and strictly monotone on a dense
  /// probe grid over [lo, hi].
  void check_on(double lo, double hi, std::size_t probes = 1024) const;

private:
  Tag tag_ = Tag::identity;
  bool increasing_ = true;
  double a_ = 1.0;
  double b_ = 0.0;
  int p_ = 1;
  std::vector<double> xs_, ys_;
};

Path apply_monotone(const MonotoneMap &f, const Path &path);
/// Maps the traded path (index 0) and leaves auxiliary sources unchanged.
PathBundle apply_monotone(const MonotoneMap &f, const PathBundle &bundle);

/// nu_t on a grid, nondecreasing with nu_0 = 0.
struct TimeChange {
  TimeGrid grid;
  std::vector<double> nu;

  /// Right-continuous inverse C_s = inf{t : nu_t > s}; horizon when never exceeded.
  double inverse(double s) const;
  /// Grid index of C_s.
  std::size_t inverse_index(double s) const;
};

TimeChange build_time_change(const QVPath &qv);
TimeChange build_time_change(const Path &base);
TimeChange build_time_change(const std::function<double(double)> &nu, const TimeGrid &grid);

/// X~ on tc.grid with X~_{t_i} = X at the largest grid index <= nu_{t_i}.
Path time_change_path(const Path &x, const TimeChange &tc);

/// Index on x_grid read by the time-changed path at tc index i.
std::size_t lookup_index(const TimeChange &tc, const TimeGrid &x_grid, std::size_t i);

/// Smallest tc index i whose lookup reaches x-grid index k, or nullopt when
/// nu never gets there.
std::optional<std::size_t> first_reaching(const TimeChange &tc, const TimeGrid &x_grid,
                                          std::size_t k);

/// t,nu,C rows with C evaluated at s = t.
void write_time_change_csv(std::ostream &out, const TimeChange &tc);

/// Z = S + [S,S]^alpha pathwise, 0^alpha := 0.
Path qv_drift_process(const procgen::ProcessSpec &base, double alpha, const TimeGrid &grid,
                      std::uint64_t seed);
Path qv_drift_from_path(const Path &s, double alpha);

} // namespace noarb::xform
