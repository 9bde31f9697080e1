#include "noarb/path.hpp"

#include <cmath>

namespace noarb {

namespace {
constexpr double kIndexSlack = 1e-9;
}

TimeGrid::TimeGrid(double horizon, std::size_t steps)
    : horizon_(horizon), steps_(steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw DomainError("TimeGrid: horizon must be positive and finite");
  }
  if (steps < 1) {
    throw DomainError("TimeGrid: at least one step required");
  }
}

double TimeGrid::time(std::size_t i) const {
  if (i == steps_) {
    return horizon_;
  }
  return static_cast<double>(i) * horizon_ / static_cast<double>(steps_);
}

std::size_t TimeGrid::ceil_index(double t) const {
  if (t <= 0.0) {
    return 0;
  }
  return static_cast<std::size_t>(std::ceil(t / dt() - kIndexSlack));
}

std::size_t TimeGrid::floor_index(double t) const {
  if (t <= 0.0) {
    return 0;
  }
  return static_cast<std::size_t>(std::floor(t / dt() + kIndexSlack));
}

std::size_t TimeGrid::span_steps(double h) const { return ceil_index(h); }

Path::Path(TimeGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size()) {
    throw DomainError("Path: expected " + std::to_string(grid.size()) +
                      " values, got " + std::to_string(values.size()));
  }
}

Path::Path(TimeGrid g, double fill) : grid(g), values(g.size(), fill) {}

} // namespace noarb
