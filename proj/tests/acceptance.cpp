// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "noarb/detect.hpp"
#include "noarb/dmw.hpp"
#include "noarb/frackernel.hpp"
#include "noarb/hedge.hpp"
#include "noarb/procgen.hpp"
#include "noarb/strategy.hpp"
#include "noarb/xform.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace noarb;
namespace pg = noarb::procgen;
namespace st = noarb::strategy;
namespace dt = noarb::detect;

namespace {

struct Outcome {
  bool passed;
  std::string detail;
};

double Phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::string f(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

struct MeanSe {
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  void add(double x) {
    sum += x;
    sq += x * x;
    ++n;
  }
  double mean() const { return sum / n; }
  double se() const { return std::sqrt(std::max(sq / n - mean() * mean(), 0.0) / n); }
};

Outcome c1_fbm_covariance() {
  const TimeGrid grid(1.0, 256);
  const std::vector<std::pair<double, double>> pairs = {
      {0.1, 0.1}, {0.1, 0.5}, {0.25, 0.75}, {0.5, 0.5}, {0.5, 1.0},
      {0.3, 0.9}, {0.75, 0.75}, {0.2, 1.0}, {1.0, 1.0}, {0.6, 0.8}};
  double worst = 0.0;
  for (const double h : {0.3, 0.5, 0.7}) {
    const pg::Sampler sampler(pg::ProcessSpec{pg::FBm{h}}, grid);
    std::vector<MeanSe> acc(pairs.size());
    for (std::size_t k = 0; k < 20000; ++k) {
      const Path x = sampler.sample(101, k).front();
      for (std::size_t q = 0; q < pairs.size(); ++q) {
        acc[q].add(x[grid.ceil_index(pairs[q].first)] * x[grid.ceil_index(pairs[q].second)]);
      }
    }
    for (std::size_t q = 0; q < pairs.size(); ++q) {
      const double s = pairs[q].first, t = pairs[q].second;
      const double law =
          0.5 * (std::pow(s, 2 * h) + std::pow(t, 2 * h) - std::pow(std::abs(t - s), 2 * h));
      worst = std::max(worst, std::abs(acc[q].mean() - law) / acc[q].se());
    }
  }
  return {worst <= 4.0, "max |z| = " + f(worst) + " over 30 (H, s, t)"};
}

Outcome c2_example2_certificate() {
  const double h = 0.25;
  const TimeGrid grid(1.0, 1024);
  const pg::Sampler sampler(pg::ProcessSpec{pg::ItoQuadratic{}}, grid);
  const auto s = st::interval_strategy(st::deterministic(0.0), st::deterministic(h), 1.0, h);
  const std::size_t kh = grid.ceil_index(h);
  std::size_t ok = 0;
  double max_slack = 0.0;
  const std::size_t n = 10000;
  for (std::size_t k = 0; k < n; ++k) {
    const auto b = sampler.sample(202, k);
    double qv = 0.0;
    for (std::size_t i = 0; i < kh; ++i) {
      qv += (b[1][i + 1] - b[1][i]) * (b[1][i + 1] - b[1][i]);
    }
    // discrete sum correction relative to (B_h^2 + h)/2
    const double slack = std::max(0.0, 0.5 * (qv - h));
    max_slack = std::max(max_slack, slack);
    ok += st::gains(s, b).total >= h / 2 - slack - 1e-12;
  }
  return {ok == n, f(ok) + "/" + f(n) + " paths, max slack " + f(max_slack) + ", dt " +
                       f(grid.dt())};
}

Outcome c3_tanaka() {
  const TimeGrid grid(1.0, 1024);
  const pg::Sampler sampler(pg::ProcessSpec{pg::TanakaAbs{}}, grid);
  const auto s = st::interval_strategy(st::deterministic(0.0), st::deterministic(1.0), 1.0, 1.0);
  std::size_t nonneg = 0, pos = 0;
  const std::size_t n = 10000;
  for (std::size_t k = 0; k < n; ++k) {
    const double g = st::gains(s, sampler.sample(303, k)).total;
    nonneg += g >= 0.0;
    pos += g > 0.0;
  }
  return {nonneg == n && pos >= 0.99 * n,
          "nonneg " + f(nonneg) + "/" + f(n) + ", positive " + f(pos)};
}

Outcome c4_lemma2() {
  const TimeGrid grid(1.0, 1000);
  const auto src = pg::make_source(pg::ProcessSpec{pg::Brownian{}}, grid, 404);
  const auto r = dt::reachability_test(src, 0.1, 1.0, 0.5, st::deterministic(0.0), std::nullopt,
                                       {100000, 0.999});
  const double bound = Phi(-1.0 / std::sqrt(0.1)) * (2 * Phi(0.5 / std::sqrt(0.9)) - 1);
  const double lhs = r.sup_below.estimate - 3 * r.sup_below.se;
  return {lhs > bound, "estimate " + f(r.sup_below.estimate) + " - 3 SE = " + f(lhs) +
                           " vs bound " + f(bound)};
}

Outcome c5_fbm_reachability() {
  const TimeGrid grid(1.0, 256);
  const auto src = pg::make_source(pg::ProcessSpec{pg::FBm{0.7}}, grid, 505);
  const auto tau1 = st::truncate(st::hitting(0.3, st::Direction::up), 0.5);
  const st::EventSpec a{tau1, st::binary(st::fn::BinaryOp::lt, st::running_min(),
                                         st::constant(-0.1))};
  const auto r = dt::reachability_test(src, 0.1, 0.5, 0.2, tau1, a, {50000, 0.999});
  const bool nontrivial = r.conditioning_frequency > 0.0 && r.conditioning_frequency < 1.0;
  return {nontrivial && r.up.lower > 0.0 && r.down.lower > 0.0,
          "P(A) " + f(r.conditioning_frequency) + ", lower bounds " + f(r.up.lower) + ", " +
              f(r.down.lower)};
}

Outcome c6_dmw() {
  std::size_t agree = 0, verified = 0, rejected = 0, arb = 0;
  const std::size_t n = 200;
  for (std::size_t k = 0; k < n; ++k) {
    const auto tree = dmw::random_tree(path_seed(606, k));
    const auto cert = dmw::solve_tree(tree);
    agree += dmw::is_martingale(cert) != dmw::brute_force_has_arbitrage(tree);
    verified += dmw::verify_certificate(tree, cert);
    dmw::Certificate bad = cert;
    if (auto *m = std::get_if<dmw::MartingaleCertificate>(&bad)) {
      m->q[1] += 1e-3;
    } else {
      ++arb;
      for (auto &x : std::get<dmw::ArbitrageCertificate>(bad).f) {
        x = -x;
      }
    }
    rejected += !dmw::verify_certificate(tree, bad);
  }
  return {agree == n && verified == n && rejected == n,
          "agree " + f(agree) + ", verified " + f(verified) + ", perturbed rejected " +
              f(rejected) + " (" + f(arb) + " arbitrage trees)"};
}

Outcome c7_monotone_invariance() {
  const std::vector<xform::MonotoneMap> maps = {xform::MonotoneMap::exp(),
                                                xform::MonotoneMap::cubic_plus_linear(),
                                                xform::MonotoneMap::arctan()};
  std::size_t tree_changes = 0, class_changes = 0;
  for (std::size_t k = 0; k < 200; ++k) {
    const auto tree = dmw::random_tree(path_seed(707, k));
    const bool base = dmw::is_martingale(dmw::solve_tree(tree));
    for (const auto &m : maps) {
      tree_changes += dmw::is_martingale(dmw::solve_tree(tree.map_prices(m))) != base;
    }
  }
  const TimeGrid grid(1.0, 256);
  const dt::SignTestOptions opts{5000, 0.999, 0.0};
  for (const auto &spec : {pg::ProcessSpec{pg::Brownian{}}, pg::ProcessSpec{pg::ItoQuadratic{}},
                           pg::ProcessSpec{pg::TanakaAbs{}}}) {
    const auto src = pg::make_source(spec, grid, 708);
    const auto t0 = st::deterministic(0.2), t1 = st::deterministic(0.5);
    const auto base = dt::increment_sign_test(src, t0, t1, std::nullopt, opts);
    for (const auto &m : maps) {
      const pg::PathSource mapped = [&src, &m](std::uint64_t k) {
        return xform::apply_monotone(m, src(k));
      };
      const auto v = dt::increment_sign_test(mapped, t0, t1, std::nullopt, opts);
      class_changes += v.classification != base.classification;
    }
  }
  return {tree_changes == 0 && class_changes == 0,
          "tree type changes " + f(tree_changes) + ", class changes " + f(class_changes)};
}

Outcome c8_time_change() {
  const std::size_t n = 1024;
  const TimeGrid unit(1.0, n);
  double worst = 0.0;
  std::size_t missing = 0;
  for (const int kind : {0, 1, 2}) {
    for (std::size_t k = 0; k < 500; ++k) {
      const xform::TimeChange tc = [&] {
        if (kind == 0) {
          return xform::build_time_change([](double s) { return s; }, unit);
        }
        if (kind == 1) {
          return xform::build_time_change([](double s) { return 2 * s; }, TimeGrid(0.5, n));
        }
        return xform::build_time_change(
            pg::realized_quadratic_variation(pg::sample_brownian(unit, path_seed(801, k))));
      }();
      const TimeGrid xg = kind == 2 ? TimeGrid(tc.nu.back(), n) : unit;
      const Path x = pg::sample_brownian(xg, path_seed(802, k));
      const Path xt = xform::time_change_path(x, tc);
      for (std::size_t i = 0; i < xt.size(); ++i) {
        const std::size_t j = std::min(xg.floor_index(tc.nu[i]), xg.steps());
        if (xt[i] != x[j]) {
          worst = INFINITY;
        }
      }
      const PathBundle bx{x};
      const double hx = xg.horizon();
      const auto tau0 = st::truncate(st::hitting(0.1, st::Direction::up), 0.4 * hx);
      const auto tau1 =
          st::truncate(st::hitting(-0.1, st::Direction::down, 0, tau0), 0.9 * hx);
      const auto i0 = xform::first_reaching(tc, xg, st::evaluate_stop(tau0, bx));
      const auto i1 = xform::first_reaching(tc, xg, st::evaluate_stop(tau1, bx));
      if (!i0 || !i1) {
        ++missing;
        continue;
      }
      const std::size_t j0 = xform::lookup_index(tc, xg, *i0);
      const std::size_t j1 = xform::lookup_index(tc, xg, *i1);
      const auto on_x = st::interval_strategy(st::deterministic(xg.time(j0)),
                                              st::deterministic(xg.time(j1)), 1.0, 0.0);
      const auto on_xt = st::interval_strategy(st::deterministic(tc.grid.time(*i0)),
                                               st::deterministic(tc.grid.time(*i1)), 1.0, 0.0);
      worst = std::max(worst,
                       std::abs(st::gains(on_x, bx).total - st::gains(on_xt, {xt}).total));
    }
  }
  return {worst <= 1e-12 && missing == 0,
          "max |gain difference| " + f(worst) + ", unreachable stops " + f(missing)};
}

Outcome c9_kernel() {
  const double h = 0.7;
  const TimeGrid grid(1.0, 256);
  const auto kg = frackernel::KernelGrid::build(h, grid);
  double c[2][2] = {{0, 0}, {0, 0}};
  const std::size_t idx[2] = {128, 256};
  const std::size_t n = 10000;
  for (std::size_t k = 0; k < n; ++k) {
    const Path y = kg.apply(pg::sample_brownian(grid, path_seed(909, k)));
    for (int p = 0; p < 2; ++p) {
      for (int q = 0; q < 2; ++q) {
        c[p][q] += y[idx[p]] * y[idx[q]] / n;
      }
    }
  }
  double worst = 0.0;
  const double ts[2] = {0.5, 1.0};
  for (int p = 0; p < 2; ++p) {
    for (int q = 0; q < 2; ++q) {
      const double s = ts[p], t = ts[q];
      const double law =
          0.5 * (std::pow(s, 2 * h) + std::pow(t, 2 * h) - std::pow(std::abs(t - s), 2 * h));
      worst = std::max(worst, std::abs(c[p][q] / law - 1));
    }
  }
  std::vector<double> sq(grid.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    sq[i] = grid.time(i) * grid.time(i);
  }
  const auto d = frackernel::fractional_derivative(std::span<const double>(sq), grid, h);
  const double a = h - 0.5;
  double derr = 0.0;
  for (const std::size_t i : {64u, 128u, 256u}) {
    const double exact = 2 * std::pow(grid.time(i), 2 - a) / std::tgamma(3 - a);
    derr = std::max(derr, std::abs(d[i] / exact - 1));
  }
  return {worst <= 0.05 && derr < 5e-4,
          "max covariance rel. error " + f(worst) + ", D^a t^2 rel. error " + f(derr)};
}

Outcome c10_girsanov() {
  const double h = 0.7, mu = 0.5;
  const TimeGrid grid(1.0, 256);
  const auto kg = frackernel::KernelGrid::build(h, grid);
  const auto a0 = frackernel::inverse_K_drift([](double) { return 0.0; }, grid, h, kg.constant);
  const auto a = frackernel::inverse_K_drift([mu](double) { return mu; }, grid, h, kg.constant);
  const std::size_t n = 10000;
  bool exact = true;
  MeanSe lam;
  std::vector<double> w(n), x(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Path b = pg::sample_brownian(grid, path_seed(1010, k));
    for (const double l : frackernel::girsanov_density(a0, b, h).lambda) {
      exact = exact && l == 1.0;
    }
    w[k] = frackernel::girsanov_density(a, b, h).lambda.back();
    x[k] = kg.apply(b).back() + mu;
    lam.add(w[k]);
  }
  double sw = 0.0, swx = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sw += w[k];
    swx += w[k] * x[k];
  }
  const double m = swx / sw;
  double v = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    v += w[k] * w[k] * (x[k] - m) * (x[k] - m);
  }
  const double se = std::sqrt(v) / sw;
  const bool mean_ok = lam.mean() >= 0.95 && lam.mean() <= 1.05;
  return {exact && mean_ok && std::abs(m) <= 4 * se,
          std::string(exact ? "Lambda == 1 for mu = 0" : "Lambda != 1 for mu = 0") +
              ", mean Lambda_1 " + f(lam.mean()) + ", weighted drift " + f(m) + " (SE " +
              f(se) + ")"};
}

Outcome c11_projection() {
  const TimeGrid grid(1.0, 1024);
  st::SimpleStrategy s;
  st::StoppingRule prev;
  for (std::size_t k = 1; k <= 8; ++k) {
    auto hit = st::truncate(st::hitting(0.1 * k, st::Direction::up, 0, prev), 0.9);
    s.legs.push_back({hit, st::constant(k % 2 ? double(k) : -double(k))});
    prev = hit;
  }
  s.exit = st::deterministic(1.0);
  std::vector<PathBundle> paths;
  for (std::size_t k = 0; k < 5000; ++k) {
    paths.push_back({pg::sample_brownian(grid, path_seed(1111, k))});
  }
  const auto p = hedge::project_to_cc(s, 0.05, paths);
  std::size_t valid = 0, mismatch = 0, violated = 0;
  for (std::size_t k = 0; k < paths.size(); ++k) {
    const std::span<const PathBundle> one(&paths[k], 1);
    valid += st::validate_cc_spacing(p.strategy, one).ok;
    const bool differ = st::gains(s, paths[k]).total != st::gains(p.strategy, paths[k]).total;
    mismatch += differ != static_cast<bool>(p.violated[k]);
    violated += p.violated[k];
  }
  return {valid == paths.size() && mismatch == 0,
          "valid " + f(valid) + "/" + f(paths.size()) + ", violating paths " + f(violated) +
              ", set mismatches " + f(mismatch)};
}

Outcome c12_hedging() {
  const TimeGrid grid(1.0, 256);
  const auto m = hedge::Model::bachelier(0.0, 1.0);
  const auto g = hedge::Payoff::call(0.2);
  std::vector<double> rms;
  for (const double h : {1.0 / 16, 1.0 / 64, 1.0 / 256}) {
    const auto r = hedge::cc_rebalance_hedge(g, m, h, grid, 20000, 1212);
    double sq = 0.0;
    for (const double e : r.errors) {
      sq += e * e;
    }
    rms.push_back(std::sqrt(sq / r.errors.size()));
  }
  std::size_t inversions = 0;
  for (std::size_t i = 1; i < rms.size(); ++i) {
    inversions += rms[i] > rms[i - 1];
  }
  return {inversions <= 1 && rms.back() < rms.front(),
          "RMS " + f(rms[0]) + ", " + f(rms[1]) + ", " + f(rms[2])};
}

Outcome c13_no_false_positive() {
  const TimeGrid grid(1.0, 256);
  const pg::ProcessSpec spec{pg::Perturbed{pg::make_spec(pg::FBm{0.7}),
                                           pg::Perturbation::sine(0.1, 2.0, 0.1)}};
  const auto src = pg::make_source(spec, grid, 1313);
  std::vector<double> times;
  for (int k = 1; k <= 10; ++k) {
    times.push_back(0.1 * k);
  }
  const auto res =
      dt::arbitrage_search(src, dt::interval_family(times, 0.1), {20000, 1e-9, 0.999});
  std::size_t flagged = 0;
  for (const auto &c : res.candidates) {
    flagged += c.flagged;
  }
  return {flagged == 0, f(flagged) + " of " + f(res.candidates.size()) + " candidates flagged"};
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"fbm covariance within 4 SE", c1_fbm_covariance},
      {"Ito-quadratic interval gain certificate", c2_example2_certificate},
      {"buy-and-hold on |B|", c3_tanaka},
      {"Brownian window probability above bound", c4_lemma2},
      {"fBm tails after hitting time on an event", c5_fbm_reachability},
      {"tree solver vs brute-force oracle", c6_dmw},
      {"monotone-map invariance", c7_monotone_invariance},
      {"time-change gain equality", c8_time_change},
      {"kernel covariance and fractional derivative", c9_kernel},
      {"drift-removing density", c10_girsanov},
      {"CC projection", c11_projection},
      {"hedging error vs rebalancing interval", c12_hedging},
      {"no flagged candidate for fBm plus bounded V", c13_no_false_positive},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o{false, ""};
    try {
      o = criteria[i].second();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %zu: %s -- %s [%.1fs]\n", o.passed ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.passed;
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed ? 1 : 0;
}
