#pragma once

#include "noarb/strategy.hpp"

#include <json.hpp>

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace noarb::hedge {

struct Projection {
  strategy::SimpleStrategy strategy; // CC with spacing delta0
  std::vector<bool> violated;        // per supplied path
  double violation_fraction = 0.0;
};

/// Freezes each path at its first trade closer than delta0 to the previous
/// executed trade: that trade and all later ones collapse onto
/// max(exit, last kept + delta0). Paths without a violation are untouched.
Projection project_to_cc(const strategy::SimpleStrategy &s, double delta0,
                         std::span<const PathBundle> paths);

class NonLipschitzPayoff : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct Payoff {
  enum class Kind { linear, call, put, quadratic };
  Kind kind = Kind::linear;
  double strike = 0.0;

  static Payoff linear() { return {}; }
  static Payoff call(double k) { return {Kind::call, k}; }
  static Payoff put(double k) { return {Kind::put, k}; }
  static Payoff quadratic() { return {Kind::quadratic, 0.0}; }

  double operator()(double s) const;
  std::string name() const;
  /// Throws NonLipschitzPayoff for payoffs outside the Lipschitz class.
  void require_lipschitz() const;
};

struct Model {
  enum class Kind { bachelier, black_scholes };
  Kind kind = Kind::bachelier;
  double s0 = 0.0;
  double sigma = 1.0;

  static Model bachelier(double s0, double sigma) { return {Kind::bachelier, s0, sigma}; }
  static Model black_scholes(double s0, double sigma) {
    return {Kind::black_scholes, s0, sigma};
  }

  /// S on the grid of the driving Brownian path.
  Path price_path(const Path &brownian) const;
  /// Zero-rate model price and delta with tau to maturity.
  double price(const Payoff &g, double s, double tau) const;
  double delta(const Payoff &g, double s, double tau) const;
  std::string name() const;
};

struct HedgeOutcome {
  double error = 0.0; // g(S_T) - V_T
  Path value;         // self-financing portfolio value on the grid
  Path model_price;   // C(t, S_t)
};

/// Self-financing hedge on one price path, rebalanced every ceil(h/dt) steps
/// starting at 0, with the model delta and initial capital C(0, S_0).
HedgeOutcome hedge_path(const Payoff &g, const Model &m, double h, const Path &s);

struct HedgeReport {
  double h = 0.0;
  std::string payoff;
  std::string model;
  std::vector<double> errors;
  double rms = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
  double h2 = 0.0; // discrete H2 distance between V and C(., S)
};

HedgeReport cc_rebalance_hedge(const Payoff &g, const Model &m, double h,
                               const TimeGrid &grid, std::size_t n, std::uint64_t seed);

/// sqrt(mean_p [X - Y - m, X - Y - m]_T + TV(m)^2) with m the pathwise mean of X - Y.
double h2_distance(std::span<const Path> x, std::span<const Path> y);

nlohmann::json to_json(const HedgeReport &r);
/// h,rms,q05,q50,q95,h2 rows.
void write_hedge_csv(std::ostream &out, std::span<const HedgeReport> rows);

} // namespace noarb::hedge
