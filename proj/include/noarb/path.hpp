#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace noarb {

/// Uniform discretization t_i = i * T / N of [0, T].
class TimeGrid {
public:
  TimeGrid(double horizon, std::size_t steps);

  double horizon() const { return horizon_; }
  std::size_t steps() const { return steps_; }
  std::size_t size() const { return steps_ + 1; }
  double dt() const { return horizon_ / static_cast<double>(steps_); }
  double time(std::size_t i) const;

  /// Smallest index whose time is >= t (up to rounding noise); may exceed steps().
  std::size_t ceil_index(double t) const;
  /// Largest index whose time is <= t (up to rounding noise).
  std::size_t floor_index(double t) const;
  /// Number of steps needed to cover a duration h, rounded up.
  std::size_t span_steps(double h) const;

  bool operator==(const TimeGrid &other) const = default;

private:
  double horizon_;
  std::size_t steps_;
};

struct Path {
  Path(TimeGrid grid, std::vector<double> values);
  explicit Path(TimeGrid grid, double fill = 0.0);

  TimeGrid grid;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double &operator[](std::size_t i) { return values[i]; }
  double front() const { return values.front(); }
  double back() const { return values.back(); }
};

/// Paths observed together on one scenario: index 0 is the traded price,
/// further entries are auxiliary sources (driving noise, local time, ...).
using PathBundle = std::vector<Path>;

/// Cumulative sum of squared increments, starting at 0.
struct QVPath {
  TimeGrid grid;
  std::vector<double> values;
};

class DomainError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

} // namespace noarb
