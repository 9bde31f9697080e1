#include "noarb/strategy.hpp"

#include <gtest/gtest.h>

using namespace noarb;
namespace st = noarb::strategy;

namespace {

PathBundle ramp(std::vector<double> v) {
  const std::size_t n = v.size() - 1;
  return {Path(TimeGrid(1.0, n), std::move(v))};
}

} // namespace

TEST(Stops, DeterministicUsesCeilIndex) {
  const auto b = ramp({0, 1, 2, 3, 4});
  EXPECT_EQ(st::evaluate_stop(st::deterministic(0.3), b), 2u);
  EXPECT_EQ(st::evaluate_stop(st::deterministic(0.5), b), 2u);
}

TEST(Stops, HittingAndTruncation) {
  const auto b = ramp({0, 0.1, 0.4, -0.2, 0.6});
  EXPECT_EQ(st::evaluate_stop(st::truncate(st::hitting(0.3, st::Direction::up), 1.0), b), 2u);
  EXPECT_EQ(st::evaluate_stop(st::truncate(st::hitting(-0.1, st::Direction::down), 1.0), b), 3u);
  EXPECT_EQ(st::evaluate_stop(st::truncate(st::hitting(5.0, st::Direction::up), 0.6), b), 2u);
  const auto after = st::truncate(st::hitting(0.3, st::Direction::up), 1.0);
  EXPECT_EQ(st::evaluate_stop(st::truncate(st::hitting(0.5, st::Direction::up, 0, after), 1.0), b),
            4u);
}

TEST(Stops, UntruncatedHittingIsRejected) {
  EXPECT_THROW(st::evaluate_stop(st::hitting(0.3, st::Direction::up), ramp({0, 1})),
               st::UnboundedRuleError);
}

TEST(Stops, StaticBound) {
  EXPECT_DOUBLE_EQ(st::static_bound(st::deterministic(0.4)), 0.4);
  EXPECT_DOUBLE_EQ(st::static_bound(st::offset_after(st::deterministic(0.4), 0.25)), 0.65);
  EXPECT_TRUE(std::isinf(st::static_bound(st::hitting(1.0, st::Direction::up))));
}

TEST(Functionals, PrefixViewRefusesTheFuture) {
  const auto b = ramp({0, 1, 2, 3});
  const st::PrefixView v(b, 1);
  EXPECT_EQ(v.at(0, 1), 1.0);
  EXPECT_THROW(v.at(0, 2), st::MeasurabilityError);
}

TEST(Functionals, RunningExtremaAndArithmetic) {
  const auto b = ramp({0, 2, -1, 1});
  EXPECT_EQ(st::evaluate_functional(st::running_max(), b, 3), 2.0);
  EXPECT_EQ(st::evaluate_functional(st::running_min(), b, 3), -1.0);
  const auto f = st::binary(st::fn::BinaryOp::sub, st::current(), st::constant(0.5));
  EXPECT_EQ(st::evaluate_functional(f, b, 1), 1.5);
}

TEST(Gains, IntervalOnRamp) {
  const auto b = ramp({0, 1, 3, 6, 10});
  const auto s = st::interval_strategy(st::deterministic(0.25), st::deterministic(0.75), -1.0, 0.25);
  const auto g = st::gains(s, b);
  EXPECT_EQ(g.total, -(6.0 - 1.0));
}

TEST(Gains, PositionPathMatchesGains) {
  const auto b = ramp({0, 1, -1, 2, 0.5, 4});
  st::SimpleStrategy s;
  s.legs.push_back({st::deterministic(0.2), st::current()});
  s.legs.push_back({st::deterministic(0.6), st::constant(-2.0)});
  s.exit = st::deterministic(1.0);
  const auto pos = st::position_path(s, b);
  double total = 0.0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    total += pos[i] * (b[0][i + 1] - b[0][i]);
  }
  EXPECT_NEAR(st::gains(s, b).total, total, 1e-15);
}

TEST(Spacing, FirstViolation) {
  const std::vector<std::size_t> ok = {1, 3, 3, 5};
  EXPECT_FALSE(st::first_spacing_violation(ok, 2).has_value());
  const std::vector<std::size_t> bad = {1, 3, 4, 8};
  EXPECT_EQ(st::first_spacing_violation(bad, 2), 2u);
  const std::vector<std::size_t> back = {3, 2};
  EXPECT_EQ(st::first_spacing_violation(back, 1), 1u);
}

TEST(Spacing, GainsRejectCloseStopsForCcStrategies) {
  const auto b = ramp({0, 1, 2, 3, 4});
  const auto s = st::interval_strategy(st::deterministic(0.25), st::deterministic(0.5), 1.0, 0.5);
  EXPECT_THROW(st::gains(s, b), st::SpacingViolation);
}

TEST(Gated, NormalizedFormMovesBothStops) {
  const auto b = ramp({0, 1, 2, 1, 0});
  const st::EventSpec never{st::deterministic(0.25),
                            st::binary(st::fn::BinaryOp::gt, st::current(), st::constant(5.0))};
  const st::GatedInterval g{st::deterministic(0.25), st::deterministic(0.5), 1.0, never};
  const auto s = st::normalize_to_interval(g, 1.0);
  EXPECT_EQ(st::gains(s, b).total, 0.0);
  EXPECT_THROW(st::normalize_to_interval(g, 0.5), DomainError);
}

TEST(StrategySerialization, RoundTrip) {
  st::SimpleStrategy s;
  const auto hit = st::truncate(st::hitting(0.2, st::Direction::down), 0.8);
  s.legs.push_back({hit, st::unary(st::fn::UnaryOp::neg, st::running_max())});
  s.exit = st::offset_after(hit, 0.1);
  s.spacing = 0.05;
  const auto j = st::to_json(s);
  EXPECT_EQ(st::to_json(st::strategy_from_json(j)), j);
}
