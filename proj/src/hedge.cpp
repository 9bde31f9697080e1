#include "noarb/hedge.hpp"

#include "noarb/format.hpp"
#include "noarb/procgen.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>

namespace noarb::hedge {

Projection project_to_cc(const strategy::SimpleStrategy &s, double delta0,
                         std::span<const PathBundle> paths) {
  if (!(delta0 > 0.0)) {
    throw DomainError("delta0 must be positive");
  }
  for (const auto &b : paths) {
    if (delta0 < b.front().grid.dt() * (1.0 - 1e-12)) {
      throw DomainError("delta0 is below the grid step");
    }
  }
  const auto schedule = s.schedule();
  Projection out;
  out.strategy.spacing = delta0;
  out.strategy.initial_position = s.initial_position;
  for (std::size_t j = 0; j < s.legs.size(); ++j) {
    out.strategy.legs.push_back(
        {std::make_shared<const strategy::StoppingRuleNode>(
             strategy::StoppingRuleNode{strategy::rule::CcProjected{schedule, j, delta0}}),
         s.legs[j].position});
  }
  out.strategy.exit = std::make_shared<const strategy::StoppingRuleNode>(
      strategy::StoppingRuleNode{strategy::rule::CcProjected{schedule, s.legs.size(), delta0}});

  std::size_t count = 0;
  for (const auto &b : paths) {
    const auto stops = strategy::evaluate_stops(s, b);
    const bool bad =
        strategy::first_spacing_violation(stops, b.front().grid.span_steps(delta0)).has_value();
    out.violated.push_back(bad);
    count += bad;
  }
  out.violation_fraction =
      paths.empty() ? 0.0 : static_cast<double>(count) / static_cast<double>(paths.size());
  return out;
}

// ---- payoffs and models --------------------------------------------------------------

double Payoff::operator()(double s) const {
  switch (kind) {
  case Kind::linear:
    return s;
  case Kind::call:
    return std::max(s - strike, 0.0);
  case Kind::put:
    return std::max(strike - s, 0.0);
  case Kind::quadratic:
    return s * s;
  }
  return 0.0;
}

std::string Payoff::name() const {
  switch (kind) {
  case Kind::linear:
    return "linear";
  case Kind::call:
    return "call(K=" + fmt12(strike) + ")";
  case Kind::put:
    return "put(K=" + fmt12(strike) + ")";
  case Kind::quadratic:
    return "quadratic";
  }
  return "?";
}

void Payoff::require_lipschitz() const {
  if (kind == Kind::quadratic) {
    throw NonLipschitzPayoff("payoff " + name() + " is not Lipschitz");
  }
}

std::string Model::name() const {
  return (kind == Kind::bachelier ? "bachelier(S0=" : "black-scholes(S0=") + fmt12(s0) +
         ",sigma=" + fmt12(sigma) + ")";
}

Path Model::price_path(const Path &b) const {
  Path s = b;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (kind == Kind::bachelier) {
      s[i] = s0 + sigma * b[i];
    } else {
      const double t = b.grid.time(i);
      s[i] = s0 * std::exp(sigma * b[i] - 0.5 * sigma * sigma * t);
    }
  }
  return s;
}

namespace {
const boost::math::normal kStd;
double phi(double x) { return boost::math::pdf(kStd, x); }
double Phi(double x) { return boost::math::cdf(kStd, x); }
} // namespace

double Model::price(const Payoff &g, double s, double tau) const {
  g.require_lipschitz();
  if (g.kind == Payoff::Kind::linear) {
    return s;
  }
  if (tau <= 0.0) {
    return g(s);
  }
  double call;
  if (kind == Kind::bachelier) {
    const double v = sigma * std::sqrt(tau);
    const double d = (s - g.strike) / v;
    call = (s - g.strike) * Phi(d) + v * phi(d);
  } else {
    if (g.strike <= 0.0) {
      call = s - g.strike;
    } else {
      const double v = sigma * std::sqrt(tau);
      const double d1 = (std::log(s / g.strike) + 0.5 * v * v) / v;
      call = s * Phi(d1) - g.strike * Phi(d1 - v);
    }
  }
  // put-call parity at zero rate
  return g.kind == Payoff::Kind::call ? call : call - s + g.strike;
}

double Model::delta(const Payoff &g, double s, double tau) const {
  g.require_lipschitz();
  if (g.kind == Payoff::Kind::linear) {
    return 1.0;
  }
  double call;
  if (tau <= 0.0) {
    call = s > g.strike ? 1.0 : 0.0;
  } else if (kind == Kind::bachelier) {
    call = Phi((s - g.strike) / (sigma * std::sqrt(tau)));
  } else if (g.strike <= 0.0) {
    call = 1.0;
  } else {
    const double v = sigma * std::sqrt(tau);
    call = Phi((std::log(s / g.strike) + 0.5 * v * v) / v);
  }
  return g.kind == Payoff::Kind::call ? call : call - 1.0;
}

HedgeOutcome hedge_path(const Payoff &g, const Model &m, double h, const Path &s) {
  g.require_lipschitz();
  const TimeGrid &grid = s.grid;
  if (h < grid.dt() * (1.0 - 1e-12)) {
    throw DomainError("rebalancing interval below the grid step");
  }
  const std::size_t k0 = grid.span_steps(h);
  const std::size_t n = grid.steps();
  const double T = grid.horizon();
  HedgeOutcome out{0.0, Path(grid), Path(grid)};
  double value = m.price(g, s[0], T);
  double position = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    if (i > 0) {
      value += position * (s[i] - s[i - 1]);
    }
    out.value[i] = value;
    out.model_price[i] = m.price(g, s[i], T - grid.time(i));
    if (i < n && i % k0 == 0) {
      position = m.delta(g, s[i], T - grid.time(i));
    }
  }
  out.error = g(s[n]) - value;
  return out;
}

namespace {

// Streaming accumulator for h2_distance over a batch of differences.
struct H2Accumulator {
  std::vector<double> mean_increment;
  double sum_sq = 0.0;
  std::size_t count = 0;

  void add(const Path &x, const Path &y) {
    if (!(x.grid == y.grid)) {
      throw DomainError("h2_distance: grids differ");
    }
    if (mean_increment.empty()) {
      mean_increment.assign(x.grid.steps(), 0.0);
    } else if (mean_increment.size() != x.grid.steps()) {
      throw DomainError("h2_distance: paths in a batch use different grids");
    }
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
      const double d = (x[i + 1] - y[i + 1]) - (x[i] - y[i]);
      mean_increment[i] += d;
      sum_sq += d * d;
    }
    ++count;
  }

  double value() const {
    if (count == 0) {
      return 0.0;
    }
    const double n = static_cast<double>(count);
    // mean_p [D - m]_T = mean_p [D]_T - sum (dm)^2
    double qv = sum_sq / n, tv = 0.0;
    for (const double s : mean_increment) {
      const double dm = s / n;
      qv -= dm * dm;
      tv += std::abs(dm);
    }
    return std::sqrt(std::max(qv, 0.0) + tv * tv);
  }
};

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

} // namespace

double h2_distance(std::span<const Path> x, std::span<const Path> y) {
  if (x.size() != y.size()) {
    throw DomainError("h2_distance: batches differ in size");
  }
  H2Accumulator acc;
  for (std::size_t p = 0; p < x.size(); ++p) {
    acc.add(x[p], y[p]);
  }
  return acc.value();
}

HedgeReport cc_rebalance_hedge(const Payoff &g, const Model &m, double h,
                               const TimeGrid &grid, std::size_t n, std::uint64_t seed) {
  g.require_lipschitz();
  if (n == 0) {
    throw DomainError("cc_rebalance_hedge needs at least one path");
  }
  HedgeReport r;
  r.h = h;
  r.payoff = g.name();
  r.model = m.name();
  r.errors.reserve(n);
  H2Accumulator acc;
  double sq = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const Path b = procgen::sample_brownian(grid, path_seed(seed, p));
    const auto outcome = hedge_path(g, m, h, m.price_path(b));
    r.errors.push_back(outcome.error);
    sq += outcome.error * outcome.error;
    acc.add(outcome.value, outcome.model_price);
  }
  r.rms = std::sqrt(sq / static_cast<double>(n));
  r.q05 = quantile(r.errors, 0.05);
  r.q50 = quantile(r.errors, 0.50);
  r.q95 = quantile(r.errors, 0.95);
  r.h2 = acc.value();
  return r;
}

nlohmann::json to_json(const HedgeReport &r) {
  return {{"h", r.h},     {"payoff", r.payoff}, {"model", r.model}, {"n", r.errors.size()},
          {"rms", r.rms}, {"q05", r.q05},       {"q50", r.q50},     {"q95", r.q95},
          {"h2", r.h2}};
}

void write_hedge_csv(std::ostream &out, std::span<const HedgeReport> rows) {
  out << "h,rms,q05,q50,q95,h2\n";
  for (const auto &r : rows) {
    out << fmt12(r.h) << ',' << fmt12(r.rms) << ',' << fmt12(r.q05) << ',' << fmt12(r.q50)
        << ',' << fmt12(r.q95) << ',' << fmt12(r.h2) << '\n';
  }
}

} // namespace noarb::hedge
