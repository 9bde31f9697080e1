#include "noarb/xform.hpp"

#include "noarb/format.hpp"

#include <algorithm>
#include <cmath>

namespace noarb::xform {

MonotoneMap MonotoneMap::identity() { return {}; }

MonotoneMap MonotoneMap::exp() {
  MonotoneMap m;
  m.tag_ = Tag::exp;
  return m;
}

MonotoneMap MonotoneMap::log() {
  MonotoneMap m;
  m.tag_ = Tag::log;
  return m;
}

MonotoneMap MonotoneMap::odd_power(int p) {
  if (p < 1 || p % 2 == 0) {
    throw DomainError("power map needs an odd positive exponent");
  }
  MonotoneMap m;
  m.tag_ = Tag::odd_power;
  m.p_ = p;
  return m;
}

MonotoneMap MonotoneMap::cube_root() {
  MonotoneMap m;
  m.tag_ = Tag::cube_root;
  return m;
}

MonotoneMap MonotoneMap::affine(double a, double b) {
  if (a == 0.0 || !std::isfinite(a) || !std::isfinite(b)) {
    throw DomainError("affine map needs a finite nonzero slope");
  }
  MonotoneMap m;
  m.tag_ = Tag::affine;
  m.a_ = a;
  m.b_ = b;
  m.increasing_ = a > 0.0;
  return m;
}

MonotoneMap MonotoneMap::arctan() {
  MonotoneMap m;
  m.tag_ = Tag::arctan;
  return m;
}

MonotoneMap MonotoneMap::cubic_plus_linear() {
  MonotoneMap m;
  m.tag_ = Tag::cubic_plus_linear;
  return m;
}

MonotoneMap MonotoneMap::table(std::vector<double> x, std::vector<double> y) {
  if (x.size() < 2 || x.size() != y.size()) {
    throw DomainError("table map needs at least two (x, y) pairs of equal length");
  }
  const bool inc = y[1] > y[0];
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) {
      throw DomainError("table abscissae must be strictly increasing");
    }
    if (inc ? !(y[i] > y[i - 1]) : !(y[i] < y[i - 1])) {
      throw DomainError("table values are not strictly monotone");
    }
  }
  MonotoneMap m;
  m.tag_ = Tag::table;
  m.increasing_ = inc;
  m.xs_ = std::move(x);
  m.ys_ = std::move(y);
  return m;
}

std::string MonotoneMap::name() const {
  switch (tag_) {
  case Tag::identity:
    return "identity";
  case Tag::exp:
    return "exp";
  case Tag::log:
    return "log";
  case Tag::odd_power:
    return "x^" + std::to_string(p_);
  case Tag::cube_root:
    return "cbrt";
  case Tag::affine:
    return fmt12(a_) + "*x+" + fmt12(b_);
  case Tag::arctan:
    return "arctan";
  case Tag::cubic_plus_linear:
    return "x^3+x";
  case Tag::table:
    return "table";
  }
  return "?";
}

bool MonotoneMap::in_domain(double x) const {
  if (!std::isfinite(x)) {
    return false;
  }
  switch (tag_) {
  case Tag::log:
    return x > 0.0;
  case Tag::table:
    return x >= xs_.front() && x <= xs_.back();
  default:
    return true;
  }
}

double MonotoneMap::operator()(double x) const {
  if (!in_domain(x)) {
    throw DomainError(name() + " is undefined at " + fmt12(x));
  }
  switch (tag_) {
  case Tag::identity:
    return x;
  case Tag::exp:
    return std::exp(x);
  case Tag::log:
    return std::log(x);
  case Tag::odd_power:
    return std::pow(x, p_);
  case Tag::cube_root:
    return std::cbrt(x);
  case Tag::affine:
    return a_ * x + b_;
  case Tag::arctan:
    return std::atan(x);
  case Tag::cubic_plus_linear:
    return x * x * x + x;
  case Tag::table: {
    const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    if (it == xs_.end()) {
      return ys_.back();
    }
    const std::size_t j = static_cast<std::size_t>(it - xs_.begin());
    const double w = (x - xs_[j - 1]) / (xs_[j] - xs_[j - 1]);
    return ys_[j - 1] + w * (ys_[j] - ys_[j - 1]);
  }
  }
  return x;
}

void MonotoneMap::check_on(double lo, double hi, std::size_t probes) const {
  if (!in_domain(lo) || !in_domain(hi)) {
    throw DomainError(name() + " is undefined on [" + fmt12(lo) + ", " + fmt12(hi) + "]");
  }
  if (hi <= lo || probes < 2) {
    return;
  }
  double prev = (*this)(lo);
  for (std::size_t i = 1; i <= probes; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(probes);
    const double y = (*this)(x);
    if (increasing_ ? !(y > prev) : !(y < prev)) {
      throw DomainError(name() + " is not strictly monotone near " + fmt12(x));
    }
    prev = y;
  }
}

Path apply_monotone(const MonotoneMap &f, const Path &path) {
  const auto [lo, hi] = std::minmax_element(path.values.begin(), path.values.end());
  f.check_on(*lo, *hi);
  Path out = path;
  for (auto &x : out.values) {
    x = f(x);
  }
  return out;
}

PathBundle apply_monotone(const MonotoneMap &f, const PathBundle &bundle) {
  if (bundle.empty()) {
    throw DomainError("empty path bundle");
  }
  PathBundle out = bundle;
  out.front() = apply_monotone(f, bundle.front());
  return out;
}

// ---- time changes -------------------------------------------------------------------

double TimeChange::inverse(double s) const { return grid.time(inverse_index(s)); }

std::size_t TimeChange::inverse_index(double s) const {
  const auto it = std::upper_bound(nu.begin(), nu.end(), s);
  if (it == nu.end()) {
    return grid.steps();
  }
  return static_cast<std::size_t>(it - nu.begin());
}

namespace {

TimeChange checked(TimeGrid grid, std::vector<double> nu) {
  if (nu.size() != grid.size()) {
    throw DomainError("time change does not match its grid");
  }
  if (nu.front() != 0.0) {
    throw DomainError("time change must start at 0");
  }
  for (std::size_t i = 1; i < nu.size(); ++i) {
    if (!(nu[i] >= nu[i - 1]) || !std::isfinite(nu[i])) {
      throw DomainError("time change must be finite and nondecreasing");
    }
  }
  return {grid, std::move(nu)};
}

} // namespace

TimeChange build_time_change(const QVPath &qv) { return checked(qv.grid, qv.values); }

TimeChange build_time_change(const Path &base) {
  std::vector<double> nu = base.values;
  const double origin = nu.front();
  for (auto &x : nu) {
    x -= origin;
  }
  return checked(base.grid, std::move(nu));
}

TimeChange build_time_change(const std::function<double(double)> &nu, const TimeGrid &grid) {
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = nu(grid.time(i));
  }
  return checked(grid, std::move(v));
}

std::size_t lookup_index(const TimeChange &tc, const TimeGrid &x_grid, std::size_t i) {
  const double s = tc.nu.at(i);
  if (s > x_grid.horizon() * (1.0 + 1e-12)) {
    throw DomainError("time change reaches " + fmt12(s) + " past the path horizon " +
                      fmt12(x_grid.horizon()));
  }
  return std::min(x_grid.floor_index(s), x_grid.steps());
}

Path time_change_path(const Path &x, const TimeChange &tc) {
  Path out(tc.grid);
  for (std::size_t i = 0; i < tc.grid.size(); ++i) {
    out[i] = x[lookup_index(tc, x.grid, i)];
  }
  return out;
}

std::optional<std::size_t> first_reaching(const TimeChange &tc, const TimeGrid &x_grid,
                                          std::size_t k) {
  for (std::size_t i = 0; i < tc.grid.size(); ++i) {
    if (lookup_index(tc, x_grid, i) >= k) {
      return i;
    }
  }
  return std::nullopt;
}

void write_time_change_csv(std::ostream &out, const TimeChange &tc) {
  out << "t,nu,C\n";
  for (std::size_t i = 0; i < tc.grid.size(); ++i) {
    const double t = tc.grid.time(i);
    out << fmt12(t) << ',' << fmt12(tc.nu[i]) << ',' << fmt12(tc.inverse(t)) << '\n';
  }
}

Path qv_drift_from_path(const Path &s, double alpha) {
  if (!(alpha > 0.0)) {
    throw DomainError("qv drift exponent must be positive");
  }
  const QVPath qv = procgen::realized_quadratic_variation(s);
  Path z = s;
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] += qv.values[i] > 0.0 ? std::pow(qv.values[i], alpha) : 0.0;
  }
  return z;
}

Path qv_drift_process(const procgen::ProcessSpec &base, double alpha, const TimeGrid &grid,
                      std::uint64_t seed) {
  const procgen::Sampler sampler(base, grid);
  return qv_drift_from_path(sampler.sample(seed).front(), alpha);
}

} // namespace noarb::xform
