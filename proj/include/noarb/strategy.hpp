#pragma once

#include "noarb/path.hpp"

#include <json.hpp>

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace noarb::strategy {

// Stopping rules and position functionals are immutable expression trees
// evaluated against a PathBundle. Every read goes through a PrefixView, so a
// decision at grid index i can only see values at indices <= i.

struct StoppingRuleNode;
struct FunctionalNode;
using StoppingRule = std::shared_ptr<const StoppingRuleNode>;
using Functional = std::shared_ptr<const FunctionalNode>;

enum class Direction { up, down };

/// Predicate over the path prefix up to a reference stopping rule.
struct EventSpec {
  StoppingRule reference;
  Functional predicate;
};

namespace rule {
struct Deterministic {
  double time;
};
struct HittingLevel {
  double level;
  Direction direction;
  std::size_t source = 0;
  StoppingRule after; // optional: search starts at this stop
};
struct OffsetAfter {
  StoppingRule inner;
  double offset;
};
struct Truncate {
  StoppingRule inner;
  double bound;
};
/// inner on the event, the constant fallback time off it.
struct Gated {
  StoppingRule inner;
  EventSpec event;
  double fallback;
};
/// Stop `index` of a schedule after freezing at the first trade closer than
/// delta0 to the previous executed trade. The last schedule entry is the exit.
struct CcProjected {
  std::vector<StoppingRule> schedule;
  std::size_t index;
  double delta0;
};
} // namespace rule

struct StoppingRuleNode {
  std::variant<rule::Deterministic, rule::HittingLevel, rule::OffsetAfter,
               rule::Truncate, rule::Gated, rule::CcProjected>
      node;
};

StoppingRule deterministic(double t);
StoppingRule hitting(double level, Direction direction, std::size_t source = 0,
                     StoppingRule after = nullptr);
StoppingRule offset_after(StoppingRule inner, double offset);
StoppingRule truncate(StoppingRule inner, double bound);
StoppingRule gated(StoppingRule inner, EventSpec event, double fallback);

/// Upper bound on the stop time implied by the rule's structure
/// (infinity for an untruncated hitting time).
double static_bound(const StoppingRule &rule);

namespace fn {
enum class UnaryOp { neg, abs, logical_not };
enum class BinaryOp { add, sub, mul, min, max, lt, le, gt, ge, logical_and, logical_or };

struct Constant {
  double value;
};
struct Current {
  std::size_t source = 0;
};
struct ValueAt {
  std::size_t source;
  StoppingRule at;
};
struct RunningMax {
  std::size_t source = 0;
};
struct RunningMin {
  std::size_t source = 0;
};
struct Time {};
struct Indicator {
  EventSpec event;
};
struct Unary {
  UnaryOp op;
  Functional arg;
};
struct Binary {
  BinaryOp op;
  Functional lhs;
  Functional rhs;
};
} // namespace fn

struct FunctionalNode {
  std::variant<fn::Constant, fn::Current, fn::ValueAt, fn::RunningMax,
               fn::RunningMin, fn::Time, fn::Indicator, fn::Unary, fn::Binary>
      node;
};

Functional constant(double c);
Functional current(std::size_t source = 0);
Functional value_at(StoppingRule at, std::size_t source = 0);
Functional running_max(std::size_t source = 0);
Functional running_min(std::size_t source = 0);
Functional time_now();
Functional indicator(EventSpec event);
Functional unary(fn::UnaryOp op, Functional arg);
Functional binary(fn::BinaryOp op, Functional lhs, Functional rhs);

class MeasurabilityError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

class UnboundedRuleError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Read-only window on a bundle that refuses indices past `limit`.
class PrefixView {
public:
  PrefixView(const PathBundle &bundle, std::size_t limit);

  std::size_t limit() const { return limit_; }
  const TimeGrid &grid() const { return bundle_->front().grid; }
  double at(std::size_t source, std::size_t index) const;
  PrefixView restrict(std::size_t limit) const;

private:
  const PathBundle *bundle_;
  std::size_t limit_;
  void check_source(std::size_t source) const;
};

/// Stop index if the rule has fired by view.limit(), otherwise nullopt.
std::optional<std::size_t> stop_on_prefix(const StoppingRule &rule,
                                          const PrefixView &view);
/// Grid index of the stop on the full bundle. Throws UnboundedRuleError for
/// rules without a finite static bound, DomainError past the horizon, and
/// std::out_of_range for a dangling source id.
std::size_t evaluate_stop(const StoppingRule &rule, const PathBundle &bundle);

double evaluate_functional(const Functional &f, const PrefixView &view);
double evaluate_functional(const Functional &f, const PathBundle &bundle,
                           std::size_t at_index);
bool evaluate_event(const EventSpec &event, const PathBundle &bundle);

// ---- strategies ---------------------------------------------------------------

struct Leg {
  StoppingRule stop;
  Functional position; // read at the leg's stop
};

/// H = g_0 1_{0} + sum_j g_j 1_{(tau_j, tau_{j+1}]} with tau_n = exit.
/// spacing > 0 marks a Cheridito-class strategy. The time-zero position g_0
/// is carried for completeness and never contributes to gains.
struct SimpleStrategy {
  std::vector<Leg> legs;
  StoppingRule exit;
  double spacing = 0.0;
  double initial_position = 0.0;

  bool cheridito() const { return spacing > 0.0; }
  std::vector<StoppingRule> schedule() const;
};

struct GainsResult {
  double total = 0.0;
  std::vector<double> contributions;
  std::vector<double> positions;
  std::vector<std::size_t> stops; // legs followed by the exit
};

class SpacingViolation : public std::runtime_error {
public:
  SpacingViolation(std::size_t stop_index, const std::string &what)
      : std::runtime_error(what), stop_index_(stop_index) {}
  std::size_t stop_index() const { return stop_index_; }

private:
  std::size_t stop_index_;
};

std::vector<std::size_t> evaluate_stops(const SimpleStrategy &s,
                                        const PathBundle &bundle);

/// Offending stop position in a schedule of evaluated stops: the first stop
/// that decreases, or that differs from the last distinct stop by fewer than
/// min_steps grid steps. Repeated stops are zero-length legs and allowed.
std::optional<std::size_t> first_spacing_violation(std::span<const std::size_t> stops,
                                                   std::size_t min_steps);

GainsResult gains(const SimpleStrategy &s, const PathBundle &bundle);

struct SpacingCheck {
  bool ok = true;
  std::optional<std::size_t> path;
  std::optional<std::size_t> stop_index;
};

SpacingCheck validate_cc_spacing(const SimpleStrategy &s,
                                 std::span<const PathBundle> paths);

/// Position held on each grid step (t_i, t_{i+1}], i = 0..N-1.
std::vector<double> position_path(const SimpleStrategy &s,
                                  const PathBundle &bundle);

/// Single leg +-1_A 1_{(entry, exit]} with A measurable at the entry.
struct GatedInterval {
  StoppingRule entry;
  StoppingRule exit;
  double sign = 1.0;
  EventSpec event;

  SimpleStrategy to_strategy(double spacing = 0.0) const;
};

/// Event-free form 1_{(entry^A, exit^A]} where off A both stops move to the
/// fallback time. Throws DomainError unless fallback > static_bound(exit).
SimpleStrategy normalize_to_interval(const GatedInterval &g, double fallback);

/// +-1_{(entry, exit]} as a CC strategy.
SimpleStrategy interval_strategy(StoppingRule entry, StoppingRule exit,
                                 double sign, double spacing);

// ---- serialization -----------------------------------------------------------------

nlohmann::json to_json(const StoppingRule &rule);
nlohmann::json to_json(const Functional &f);
nlohmann::json to_json(const EventSpec &e);
nlohmann::json to_json(const SimpleStrategy &s);
StoppingRule rule_from_json(const nlohmann::json &j);
Functional functional_from_json(const nlohmann::json &j);
EventSpec event_from_json(const nlohmann::json &j);
SimpleStrategy strategy_from_json(const nlohmann::json &j);

} // namespace noarb::strategy
