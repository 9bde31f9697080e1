#include "noarb/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace noarb::strategy {

namespace {

template <class... Ts> struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts> Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

StoppingRule make_rule(auto node) {
  return std::make_shared<const StoppingRuleNode>(StoppingRuleNode{std::move(node)});
}

Functional make_fn(auto node) {
  return std::make_shared<const FunctionalNode>(FunctionalNode{std::move(node)});
}

void require(const auto &ptr, const char *what) {
  if (!ptr) {
    throw DomainError(std::string("missing ") + what);
  }
}

} // namespace

// ---- builders ------------------------------------------------------------------

StoppingRule deterministic(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw DomainError("deterministic stop must be a finite nonnegative time");
  }
  return make_rule(rule::Deterministic{t});
}

StoppingRule hitting(double level, Direction direction, std::size_t source,
                     StoppingRule after) {
  return make_rule(rule::HittingLevel{level, direction, source, std::move(after)});
}

StoppingRule offset_after(StoppingRule inner, double offset) {
  require(inner, "inner rule");
  if (!(offset >= 0.0)) {
    throw DomainError("offset must be nonnegative");
  }
  return make_rule(rule::OffsetAfter{std::move(inner), offset});
}

StoppingRule truncate(StoppingRule inner, double bound) {
  require(inner, "inner rule");
  if (!(bound >= 0.0) || !std::isfinite(bound)) {
    throw DomainError("truncation bound must be finite and nonnegative");
  }
  return make_rule(rule::Truncate{std::move(inner), bound});
}

StoppingRule gated(StoppingRule inner, EventSpec event, double fallback) {
  require(inner, "inner rule");
  require(event.reference, "event reference");
  require(event.predicate, "event predicate");
  return make_rule(rule::Gated{std::move(inner), std::move(event), fallback});
}

Functional constant(double c) { return make_fn(fn::Constant{c}); }
Functional current(std::size_t source) { return make_fn(fn::Current{source}); }
Functional value_at(StoppingRule at, std::size_t source) {
  require(at, "stop");
  return make_fn(fn::ValueAt{source, std::move(at)});
}
Functional running_max(std::size_t source) { return make_fn(fn::RunningMax{source}); }
Functional running_min(std::size_t source) { return make_fn(fn::RunningMin{source}); }
Functional time_now() { return make_fn(fn::Time{}); }
Functional indicator(EventSpec event) {
  require(event.reference, "event reference");
  require(event.predicate, "event predicate");
  return make_fn(fn::Indicator{std::move(event)});
}
Functional unary(fn::UnaryOp op, Functional arg) {
  require(arg, "operand");
  return make_fn(fn::Unary{op, std::move(arg)});
}
Functional binary(fn::BinaryOp op, Functional lhs, Functional rhs) {
  require(lhs, "left operand");
  require(rhs, "right operand");
  return make_fn(fn::Binary{op, std::move(lhs), std::move(rhs)});
}

double static_bound(const StoppingRule &r) {
  require(r, "rule");
  return std::visit(
      Overloaded{
          [](const rule::Deterministic &d) { return d.time; },
          [](const rule::HittingLevel &) { return kInf; },
          [](const rule::OffsetAfter &o) { return static_bound(o.inner) + o.offset; },
          [](const rule::Truncate &t) {
            return std::min(t.bound, static_bound(t.inner));
          },
          [](const rule::Gated &g) {
            return std::max(static_bound(g.inner), g.fallback);
          },
          [](const rule::CcProjected &p) {
            double legs = 0.0;
            for (std::size_t j = 0; j + 1 < p.schedule.size(); ++j) {
              legs = std::max(legs, static_bound(p.schedule[j]));
            }
            return std::max(static_bound(p.schedule.back()), legs + p.delta0);
          },
      },
      r->node);
}

// ---- prefix evaluation -----------------------------------------------------------

PrefixView::PrefixView(const PathBundle &bundle, std::size_t limit)
    : bundle_(&bundle), limit_(limit) {
  if (bundle.empty()) {
    throw DomainError("empty path bundle");
  }
  if (limit >= bundle.front().size()) {
    throw DomainError("prefix limit past the end of the path");
  }
}

void PrefixView::check_source(std::size_t source) const {
  if (source >= bundle_->size()) {
    throw std::out_of_range("dangling source path id " + std::to_string(source));
  }
}

double PrefixView::at(std::size_t source, std::size_t index) const {
  check_source(source);
  if (index > limit_) {
    throw MeasurabilityError("read at index " + std::to_string(index) +
                             " beyond the prefix limit " + std::to_string(limit_));
  }
  return (*bundle_)[source][index];
}

PrefixView PrefixView::restrict(std::size_t limit) const {
  if (limit > limit_) {
    throw MeasurabilityError("cannot widen a prefix view");
  }
  return PrefixView(*bundle_, limit);
}

namespace {

std::optional<std::size_t> projected_stop(const rule::CcProjected &p,
                                          const PrefixView &view) {
  const std::size_t min_steps = view.grid().span_steps(p.delta0);
  const std::size_t n = p.schedule.size();
  std::optional<std::size_t> last_kept;
  for (std::size_t j = 0; j < n; ++j) {
    const auto tau = stop_on_prefix(p.schedule[j], view);
    if (!tau) {
      return std::nullopt;
    }
    const bool violates =
        last_kept && (*tau < *last_kept ||
                      (*tau != *last_kept && *tau - *last_kept < min_steps));
    if (violates) {
      // freeze: skip this and later trades; exit once the spacing allows it
      const auto exit = stop_on_prefix(p.schedule.back(), view);
      if (!exit) {
        return std::nullopt;
      }
      const std::size_t frozen_exit = std::max(*exit, *last_kept + min_steps);
      return frozen_exit <= view.limit() ? std::optional(frozen_exit) : std::nullopt;
    }
    last_kept = *tau;
    if (j == p.index) {
      return tau;
    }
  }
  return std::nullopt;
}

} // namespace

std::optional<std::size_t> stop_on_prefix(const StoppingRule &r,
                                          const PrefixView &view) {
  require(r, "rule");
  const TimeGrid &grid = view.grid();
  const auto within = [&](std::size_t idx) -> std::optional<std::size_t> {
    return idx <= view.limit() ? std::optional(idx) : std::nullopt;
  };
  return std::visit(
      Overloaded{
          [&](const rule::Deterministic &d) { return within(grid.ceil_index(d.time)); },
          [&](const rule::HittingLevel &h) -> std::optional<std::size_t> {
            std::size_t start = 0;
            if (h.after) {
              const auto a = stop_on_prefix(h.after, view);
              if (!a) {
                return std::nullopt;
              }
              start = *a;
            }
            for (std::size_t i = start; i <= view.limit(); ++i) {
              const double x = view.at(h.source, i);
              if (h.direction == Direction::up ? x >= h.level : x <= h.level) {
                return i;
              }
            }
            return std::nullopt;
          },
          [&](const rule::OffsetAfter &o) -> std::optional<std::size_t> {
            const auto inner = stop_on_prefix(o.inner, view);
            if (!inner) {
              return std::nullopt;
            }
            return within(*inner + grid.span_steps(o.offset));
          },
          [&](const rule::Truncate &t) -> std::optional<std::size_t> {
            const std::size_t cap = grid.floor_index(t.bound);
            const auto inner = stop_on_prefix(t.inner, view);
            if (inner && *inner <= cap) {
              return inner;
            }
            return within(cap);
          },
          [&](const rule::Gated &g) -> std::optional<std::size_t> {
            const auto ref = stop_on_prefix(g.event.reference, view);
            if (!ref) {
              return std::nullopt;
            }
            const bool on =
                evaluate_functional(g.event.predicate, view.restrict(*ref)) != 0.0;
            if (on) {
              return stop_on_prefix(g.inner, view);
            }
            return within(grid.ceil_index(g.fallback));
          },
          [&](const rule::CcProjected &p) { return projected_stop(p, view); },
      },
      r->node);
}

std::size_t evaluate_stop(const StoppingRule &r, const PathBundle &bundle) {
  if (!std::isfinite(static_bound(r))) {
    throw UnboundedRuleError("stopping rule has no finite bound; wrap it in truncate()");
  }
  const PrefixView view(bundle, bundle.front().size() - 1);
  const auto stop = stop_on_prefix(r, view);
  if (!stop) {
    throw DomainError("stopping rule does not fire within the grid horizon");
  }
  return *stop;
}

double evaluate_functional(const Functional &f, const PrefixView &view) {
  require(f, "functional");
  using fn::BinaryOp;
  using fn::UnaryOp;
  return std::visit(
      Overloaded{
          [](const fn::Constant &c) { return c.value; },
          [&](const fn::Current &c) { return view.at(c.source, view.limit()); },
          [&](const fn::ValueAt &v) {
            const auto stop = stop_on_prefix(v.at, view);
            if (!stop) {
              throw MeasurabilityError("value_at reads a stop that has not occurred");
            }
            return view.at(v.source, *stop);
          },
          [&](const fn::RunningMax &m) {
            double best = view.at(m.source, 0);
            for (std::size_t i = 1; i <= view.limit(); ++i) {
              best = std::max(best, view.at(m.source, i));
            }
            return best;
          },
          [&](const fn::RunningMin &m) {
            double best = view.at(m.source, 0);
            for (std::size_t i = 1; i <= view.limit(); ++i) {
              best = std::min(best, view.at(m.source, i));
            }
            return best;
          },
          [&](const fn::Time &) { return view.grid().time(view.limit()); },
          [&](const fn::Indicator &ind) {
            const auto ref = stop_on_prefix(ind.event.reference, view);
            if (!ref) {
              throw MeasurabilityError("event reference stop has not occurred");
            }
            return evaluate_functional(ind.event.predicate, view.restrict(*ref)) != 0.0
                       ? 1.0
                       : 0.0;
          },
          [&](const fn::Unary &u) {
            const double a = evaluate_functional(u.arg, view);
            switch (u.op) {
            case UnaryOp::neg:
              return -a;
            case UnaryOp::abs:
              return std::abs(a);
            case UnaryOp::logical_not:
              return a == 0.0 ? 1.0 : 0.0;
            }
            return a;
          },
          [&](const fn::Binary &b) {
            const double l = evaluate_functional(b.lhs, view);
            const double r = evaluate_functional(b.rhs, view);
            switch (b.op) {
            case BinaryOp::add:
              return l + r;
            case BinaryOp::sub:
              return l - r;
            case BinaryOp::mul:
              return l * r;
            case BinaryOp::min:
              return std::min(l, r);
            case BinaryOp::max:
              return std::max(l, r);
            case BinaryOp::lt:
              return l < r ? 1.0 : 0.0;
            case BinaryOp::le:
              return l <= r ? 1.0 : 0.0;
            case BinaryOp::gt:
              return l > r ? 1.0 : 0.0;
            case BinaryOp::ge:
              return l >= r ? 1.0 : 0.0;
            case BinaryOp::logical_and:
              return (l != 0.0 && r != 0.0) ? 1.0 : 0.0;
            case BinaryOp::logical_or:
              return (l != 0.0 || r != 0.0) ? 1.0 : 0.0;
            }
            return 0.0;
          },
      },
      f->node);
}

double evaluate_functional(const Functional &f, const PathBundle &bundle,
                           std::size_t at_index) {
  return evaluate_functional(f, PrefixView(bundle, at_index));
}

bool evaluate_event(const EventSpec &event, const PathBundle &bundle) {
  const std::size_t ref = evaluate_stop(event.reference, bundle);
  return evaluate_functional(event.predicate, bundle, ref) != 0.0;
}

// ---- strategies ------------------------------------------------------------------

std::vector<StoppingRule> SimpleStrategy::schedule() const {
  std::vector<StoppingRule> out;
  out.reserve(legs.size() + 1);
  for (const auto &leg : legs) {
    out.push_back(leg.stop);
  }
  out.push_back(exit);
  return out;
}

std::vector<std::size_t> evaluate_stops(const SimpleStrategy &s,
                                        const PathBundle &bundle) {
  require(s.exit, "exit rule");
  std::vector<std::size_t> stops;
  stops.reserve(s.legs.size() + 1);
  for (const auto &leg : s.legs) {
    stops.push_back(evaluate_stop(leg.stop, bundle));
  }
  stops.push_back(evaluate_stop(s.exit, bundle));
  return stops;
}

std::optional<std::size_t> first_spacing_violation(std::span<const std::size_t> stops,
                                                   std::size_t min_steps) {
  for (std::size_t j = 1, last = 0; j < stops.size(); ++j) {
    if (stops[j] < stops[last]) {
      return j;
    }
    if (stops[j] == stops[last]) {
      continue;
    }
    if (stops[j] - stops[last] < min_steps) {
      return j;
    }
    last = j;
  }
  return std::nullopt;
}

GainsResult gains(const SimpleStrategy &s, const PathBundle &bundle) {
  GainsResult out;
  out.stops = evaluate_stops(s, bundle);
  const std::size_t min_steps =
      s.cheridito() ? bundle.front().grid.span_steps(s.spacing) : 0;
  if (const auto bad = first_spacing_violation(out.stops, min_steps)) {
    throw SpacingViolation(*bad, "spacing violated at stop " + std::to_string(*bad));
  }
  const Path &x = bundle.front();
  out.positions.reserve(s.legs.size());
  out.contributions.reserve(s.legs.size());
  for (std::size_t j = 0; j < s.legs.size(); ++j) {
    const double g = evaluate_functional(s.legs[j].position, bundle, out.stops[j]);
    const double c = g * (x[out.stops[j + 1]] - x[out.stops[j]]);
    out.positions.push_back(g);
    out.contributions.push_back(c);
    out.total += c;
  }
  return out;
}

SpacingCheck validate_cc_spacing(const SimpleStrategy &s,
                                 std::span<const PathBundle> paths) {
  SpacingCheck check;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const auto stops = evaluate_stops(s, paths[p]);
    const std::size_t min_steps = paths[p].front().grid.span_steps(s.spacing);
    if (const auto bad = first_spacing_violation(stops, min_steps)) {
      check.ok = false;
      check.path = p;
      check.stop_index = *bad;
      return check;
    }
  }
  return check;
}

std::vector<double> position_path(const SimpleStrategy &s,
                                  const PathBundle &bundle) {
  const auto stops = evaluate_stops(s, bundle);
  std::vector<double> h(bundle.front().grid.steps(), 0.0);
  for (std::size_t j = 0; j < s.legs.size(); ++j) {
    if (stops[j + 1] <= stops[j]) {
      continue;
    }
    const double g = evaluate_functional(s.legs[j].position, bundle, stops[j]);
    for (std::size_t i = stops[j]; i < stops[j + 1]; ++i) {
      h[i] = g;
    }
  }
  return h;
}

SimpleStrategy GatedInterval::to_strategy(double spacing) const {
  SimpleStrategy s;
  s.legs.push_back({entry, binary(fn::BinaryOp::mul, constant(sign), indicator(event))});
  s.exit = exit;
  s.spacing = spacing;
  return s;
}

SimpleStrategy normalize_to_interval(const GatedInterval &g, double fallback) {
  require(g.entry, "entry rule");
  require(g.exit, "exit rule");
  if (!(fallback > static_bound(g.exit))) {
    throw DomainError("fallback time must exceed the bound of the exit stop");
  }
  SimpleStrategy s;
  s.legs.push_back({gated(g.entry, g.event, fallback), constant(g.sign)});
  s.exit = gated(g.exit, g.event, fallback);
  return s;
}

SimpleStrategy interval_strategy(StoppingRule entry, StoppingRule exit,
                                 double sign, double spacing) {
  SimpleStrategy s;
  s.legs.push_back({std::move(entry), constant(sign)});
  s.exit = std::move(exit);
  s.spacing = spacing;
  return s;
}

// ---- serialization -----------------------------------------------------------------

namespace {

const char *direction_name(Direction d) { return d == Direction::up ? "up" : "down"; }

Direction direction_from(const std::string &s) {
  if (s == "up") {
    return Direction::up;
  }
  if (s == "down") {
    return Direction::down;
  }
  throw DomainError("unknown direction '" + s + "'");
}

constexpr std::pair<fn::UnaryOp, const char *> kUnaryNames[] = {
    {fn::UnaryOp::neg, "neg"},
    {fn::UnaryOp::abs, "abs"},
    {fn::UnaryOp::logical_not, "not"},
};

constexpr std::pair<fn::BinaryOp, const char *> kBinaryNames[] = {
    {fn::BinaryOp::add, "add"},       {fn::BinaryOp::sub, "sub"},
    {fn::BinaryOp::mul, "mul"},       {fn::BinaryOp::min, "min"},
    {fn::BinaryOp::max, "max"},       {fn::BinaryOp::lt, "lt"},
    {fn::BinaryOp::le, "le"},         {fn::BinaryOp::gt, "gt"},
    {fn::BinaryOp::ge, "ge"},         {fn::BinaryOp::logical_and, "and"},
    {fn::BinaryOp::logical_or, "or"},
};

template <class Op, std::size_t N>
const char *op_name(const std::pair<Op, const char *> (&table)[N], Op op) {
  for (const auto &[k, v] : table) {
    if (k == op) {
      return v;
    }
  }
  throw DomainError("unnamed operator");
}

template <class Op, std::size_t N>
Op op_from(const std::pair<Op, const char *> (&table)[N], const std::string &s) {
  for (const auto &[k, v] : table) {
    if (s == v) {
      return k;
    }
  }
  throw DomainError("unknown operator '" + s + "'");
}

} // namespace

nlohmann::json to_json(const EventSpec &e) {
  return {{"reference", to_json(e.reference)}, {"predicate", to_json(e.predicate)}};
}

nlohmann::json to_json(const StoppingRule &r) {
  require(r, "rule");
  return std::visit(
      Overloaded{
          [](const rule::Deterministic &d) -> nlohmann::json {
            return {{"type", "deterministic"}, {"time", d.time}};
          },
          [](const rule::HittingLevel &h) -> nlohmann::json {
            nlohmann::json j = {{"type", "hitting"},
                                {"level", h.level},
                                {"direction", direction_name(h.direction)},
                                {"source", h.source}};
            if (h.after) {
              j["after"] = to_json(h.after);
            }
            return j;
          },
          [](const rule::OffsetAfter &o) -> nlohmann::json {
            return {{"type", "offset"}, {"inner", to_json(o.inner)}, {"offset", o.offset}};
          },
          [](const rule::Truncate &t) -> nlohmann::json {
            return {{"type", "truncate"}, {"inner", to_json(t.inner)}, {"bound", t.bound}};
          },
          [](const rule::Gated &g) -> nlohmann::json {
            return {{"type", "gated"},
                    {"inner", to_json(g.inner)},
                    {"event", to_json(g.event)},
                    {"fallback", g.fallback}};
          },
          [](const rule::CcProjected &p) -> nlohmann::json {
            nlohmann::json sched = nlohmann::json::array();
            for (const auto &s : p.schedule) {
              sched.push_back(to_json(s));
            }
            return {{"type", "cc_projected"},
                    {"schedule", sched},
                    {"index", p.index},
                    {"delta0", p.delta0}};
          },
      },
      r->node);
}

nlohmann::json to_json(const Functional &f) {
  require(f, "functional");
  return std::visit(
      Overloaded{
          [](const fn::Constant &c) -> nlohmann::json {
            return {{"type", "constant"}, {"value", c.value}};
          },
          [](const fn::Current &c) -> nlohmann::json {
            return {{"type", "current"}, {"source", c.source}};
          },
          [](const fn::ValueAt &v) -> nlohmann::json {
            return {{"type", "value_at"}, {"source", v.source}, {"at", to_json(v.at)}};
          },
          [](const fn::RunningMax &m) -> nlohmann::json {
            return {{"type", "running_max"}, {"source", m.source}};
          },
          [](const fn::RunningMin &m) -> nlohmann::json {
            return {{"type", "running_min"}, {"source", m.source}};
          },
          [](const fn::Time &) -> nlohmann::json { return {{"type", "time"}}; },
          [](const fn::Indicator &i) -> nlohmann::json {
            return {{"type", "indicator"}, {"event", to_json(i.event)}};
          },
          [](const fn::Unary &u) -> nlohmann::json {
            return {{"type", "unary"},
                    {"op", op_name(kUnaryNames, u.op)},
                    {"arg", to_json(u.arg)}};
          },
          [](const fn::Binary &b) -> nlohmann::json {
            return {{"type", "binary"},
                    {"op", op_name(kBinaryNames, b.op)},
                    {"lhs", to_json(b.lhs)},
                    {"rhs", to_json(b.rhs)}};
          },
      },
      f->node);
}

nlohmann::json to_json(const SimpleStrategy &s) {
  nlohmann::json legs = nlohmann::json::array();
  for (const auto &leg : s.legs) {
    legs.push_back({{"stop", to_json(leg.stop)}, {"position", to_json(leg.position)}});
  }
  return {{"legs", legs},
          {"exit", to_json(s.exit)},
          {"spacing", s.spacing},
          {"initial_position", s.initial_position}};
}

EventSpec event_from_json(const nlohmann::json &j) {
  return {rule_from_json(j.at("reference")), functional_from_json(j.at("predicate"))};
}

StoppingRule rule_from_json(const nlohmann::json &j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "deterministic") {
    return deterministic(j.at("time").get<double>());
  }
  if (type == "hitting") {
    StoppingRule after;
    if (j.contains("after")) {
      after = rule_from_json(j.at("after"));
    }
    return hitting(j.at("level").get<double>(),
                   direction_from(j.at("direction").get<std::string>()),
                   j.at("source").get<std::size_t>(), after);
  }
  if (type == "offset") {
    return offset_after(rule_from_json(j.at("inner")), j.at("offset").get<double>());
  }
  if (type == "truncate") {
    return truncate(rule_from_json(j.at("inner")), j.at("bound").get<double>());
  }
  if (type == "gated") {
    return gated(rule_from_json(j.at("inner")), event_from_json(j.at("event")),
                 j.at("fallback").get<double>());
  }
  if (type == "cc_projected") {
    rule::CcProjected p;
    for (const auto &s : j.at("schedule")) {
      p.schedule.push_back(rule_from_json(s));
    }
    p.index = j.at("index").get<std::size_t>();
    p.delta0 = j.at("delta0").get<double>();
    if (p.index >= p.schedule.size()) {
      throw DomainError("cc_projected index out of range");
    }
    return make_rule(std::move(p));
  }
  throw DomainError("unknown stopping-rule type '" + type + "'");
}

Functional functional_from_json(const nlohmann::json &j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "constant") {
    return constant(j.at("value").get<double>());
  }
  if (type == "current") {
    return current(j.at("source").get<std::size_t>());
  }
  if (type == "value_at") {
    return value_at(rule_from_json(j.at("at")), j.at("source").get<std::size_t>());
  }
  if (type == "running_max") {
    return running_max(j.at("source").get<std::size_t>());
  }
  if (type == "running_min") {
    return running_min(j.at("source").get<std::size_t>());
  }
  if (type == "time") {
    return time_now();
  }
  if (type == "indicator") {
    return indicator(event_from_json(j.at("event")));
  }
  if (type == "unary") {
    return unary(op_from(kUnaryNames, j.at("op").get<std::string>()),
                 functional_from_json(j.at("arg")));
  }
  if (type == "binary") {
    return binary(op_from(kBinaryNames, j.at("op").get<std::string>()),
                  functional_from_json(j.at("lhs")), functional_from_json(j.at("rhs")));
  }
  throw DomainError("unknown functional type '" + type + "'");
}

SimpleStrategy strategy_from_json(const nlohmann::json &j) {
  SimpleStrategy s;
  for (const auto &leg : j.at("legs")) {
    s.legs.push_back({rule_from_json(leg.at("stop")),
                      functional_from_json(leg.at("position"))});
  }
  s.exit = rule_from_json(j.at("exit"));
  s.spacing = j.at("spacing").get<double>();
  s.initial_position = j.value("initial_position", 0.0);
  return s;
}

} // namespace noarb::strategy
