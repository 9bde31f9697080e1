#include "noarb/detect.hpp"
#include "noarb/dmw.hpp"
#include "noarb/expcli.hpp"
#include "noarb/format.hpp"
#include "noarb/frackernel.hpp"
#include "noarb/hedge.hpp"
#include "noarb/procgen.hpp"
#include "noarb/strategy.hpp"
#include "noarb/xform.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <functional>

namespace noarb::expcli {

namespace {

namespace pg = procgen;
namespace st = strategy;
using nlohmann::json;

std::string num(double x) { return fmt12(x); }
std::string num(std::size_t x) { return std::to_string(x); }

void check(Report &r, std::string name, bool passed, std::string detail) {
  r.checks.push_back({std::move(name), passed, std::move(detail)});
}

TimeGrid grid_of(const ExperimentConfig &c) { return TimeGrid(c.horizon, c.steps); }

double pd(const ExperimentConfig &c, const char *key) { return c.params.at(key).get<double>(); }
std::size_t pz(const ExperimentConfig &c, const char *key) {
  return c.params.at(key).get<std::size_t>();
}
std::vector<double> pv(const ExperimentConfig &c, const char *key) {
  return c.params.at(key).get<std::vector<double>>();
}

double Phi(double x) { return boost::math::cdf(boost::math::normal(), x); }

Polyline path_plot(std::string name, const Path &p, std::string y_label) {
  Polyline pl{std::move(name), "t", std::move(y_label), {}, p.values};
  for (std::size_t i = 0; i < p.size(); ++i) {
    pl.x.push_back(p.grid.time(i));
  }
  return pl;
}

std::vector<std::string> verdict_row(const std::string &label, const detect::Verdict &v) {
  return {'"' + label + '"', num(v.n_pos), num(v.n_neg), num(v.n_zero), num(v.lb_pos),
          num(v.lb_neg), detect::to_string(v.classification)};
}

Table verdict_table() {
  return {{"candidate", "n_pos", "n_neg", "n_zero", "lb_pos", "lb_neg", "class"}, {}};
}

detect::SignTestOptions sign_opts(const ExperimentConfig &c, std::size_t n,
                                  double zero_tol = -1.0) {
  return {std::max<std::size_t>(n, 100), c.confidence, zero_tol};
}

pg::PathSource front_of(pg::PathSource source, std::size_t index) {
  return [source, index](std::uint64_t k) { return PathBundle{source(k).at(index)}; };
}

// ---- fBm law -------------------------------------------------------------------------

Report fbm_covariance(const ExperimentConfig &c) {
  Report r{c.experiment, {}, {}, {}, {}};
  const double hurst = pd(c, "hurst");
  const auto method = c.params.at("method").get<std::string>() == "cholesky"
                          ? pg::FbmMethod::exact_cholesky
                          : pg::FbmMethod::davies_harte;
  const TimeGrid grid = grid_of(c);
  const pg::Sampler sampler(pg::ProcessSpec{pg::FBm{hurst, method}}, grid);
  const auto pairs = c.params.at("pairs").get<std::vector<std::vector<double>>>();
  std::vector<std::pair<std::size_t, std::size_t>> idx;
  for (const auto &p : pairs) {
    idx.emplace_back(grid.ceil_index(p.at(0)), grid.ceil_index(p.at(1)));
  }
  std::vector<double> sum(idx.size(), 0.0), sq(idx.size(), 0.0);
  for (std::size_t k = 0; k < c.paths; ++k) {
    const Path x = sampler.sample(c.seed, k).front();
    for (std::size_t q = 0; q < idx.size(); ++q) {
      const double v = x[idx[q].first] * x[idx[q].second];
      sum[q] += v;
      sq[q] += v * v;
    }
  }
  Table t{{"s", "t", "empirical", "law", "se", "z"}, {}};
  const double n = static_cast<double>(c.paths);
  double worst = 0.0;
  for (std::size_t q = 0; q < idx.size(); ++q) {
    const double s = grid.time(idx[q].first), u = grid.time(idx[q].second);
    const double mean = sum[q] / n;
    const double se = std::sqrt(std::max(sq[q] / n - mean * mean, 0.0) / n);
    const double law = pg::fbm_covariance(hurst, s, u);
    const double z = (mean - law) / se;
    worst = std::max(worst, std::abs(z));
    t.rows.push_back({num(s), num(u), num(mean), num(law), num(se), num(z)});
  }
  r.tables["fbm_covariance"] = t;
  r.documents["summary"] = {{"hurst", hurst}, {"max_abs_z", worst},
                            {"diagnostics", sampler.diagnostics()}};
  r.plots.push_back(path_plot("fbm_path", sampler.sample(c.seed, 0).front(), "B^H"));
  check(r, "covariance within 4 SE at every pair", worst <= 4.0, "max |z| = " + num(worst));
  return r;
}

// ---- examples ----------------------------------------------------------------------

Report example1(const ExperimentConfig &c) {
  Report r{c.experiment, {}, {}, {}, {}};
  const double hurst = pd(c, "hurst");
  const TimeGrid grid = grid_of(c);
  const auto source = pg::make_source(pg::ProcessSpec{pg::GeometricFBm{hurst}}, grid, c.seed);
  const auto t0 = st::deterministic(pd(c, "t0"));
  const auto t1 = st::deterministic(pd(c, "t1"));
  const auto opts = sign_opts(c, c.paths, 0.0);
  const auto geo = detect::increment_sign_test(source, t0, t1, std::nullopt, opts);
  const auto base = detect::increment_sign_test(front_of(source, 1), t0, t1, std::nullopt, opts);
  Table t = verdict_table();
  t.rows.push_back(verdict_row("fbm", base));
  t.rows.push_back(verdict_row("exp(fbm)", geo));
  r.tables["verdicts"] = t;
  r.documents["verdicts"] = {{"fbm", detect::to_json(base)}, {"exp_fbm", detect::to_json(geo)}};
  const auto sample = source(0);
  r.plots.push_back(path_plot("geometric_fbm_path", sample.front(), "exp(B^H)"));
  check(r, "exp preserves the increment counts",
        base.n_pos == geo.n_pos && base.n_neg == geo.n_neg && base.n_zero == geo.n_zero,
        detect::to_string(base.classification) + " vs " + detect::to_string(geo.classification));
  check(r, "geometric fBm increments take both signs",
        geo.classification == detect::SignClass::both_signs, detect::to_string(geo.classification));
  return r;
}

Report example2(const ExperimentConfig &c) {
  Report r{c.experiment, {}, {}, {}, {}};
  const double h = pd(c, "h");
  const TimeGrid grid = grid_of(c);
  const pg::Sampler sampler(pg::ProcessSpec{pg::ItoQuadratic{}}, grid);
  const auto strat = st::interval_strategy(st::deterministic(0.0), st::deterministic(h), 1.0, h);
  const std::size_t kh = grid.ceil_index(h);
  std::vector<double> gain(c.paths), corr(c.paths);
  double slack = 0.0;
  for (std::size_t k = 0; k < c.paths; ++k) {
    const auto b = sampler.sample(c.seed, k);
    gain[k] = st::gains(strat, b).total;
    double qv = 0.0;
    for (std::size_t i = 0; i < kh; ++i) {
      const double d = b[1][i + 1] - b[1][i];
      qv += d * d;
    }
    corr[k] = 0.5 * (qv - grid.time(kh));
    slack = std::max(slack, corr[k]);
  }
  Table t{{"path", "gain", "discrete_correction", "bound"}, {}};
  std::size_t ok = 0;
  for (std::size_t k = 0; k < c.paths; ++k) {
    ok += gain[k] >= 0.5 * h - slack - 1e-12;
    t.rows.push_back({num(k), num(gain[k]), num(corr[k]), num(0.5 * h - slack)});
  }
  r.tables["certificate"] = t;
  const auto source = pg::make_source(pg::ProcessSpec{pg::ItoQuadratic{}}, grid, c.seed);
  const auto v = detect::increment_sign_test(source, st::deterministic(0.0), st::deterministic(h),
                                             std::nullopt, sign_opts(c, c.paths));
  std::vector<double> times;
  for (double t = h; t <= grid.horizon() + 1e-12; t += h) {
    times.push_back(t);
  }
  const auto family = detect::interval_family(times, h);
  const auto search = detect::arbitrage_search(
      source, family, {std::min<std::size_t>(c.paths, pz(c, "search_paths")), 1e-9, c.confidence});
  r.documents["search"] = detect::to_json(search);
  r.documents["summary"] = {{"h", h}, {"slack", slack}, {"dt", grid.dt()},
                            {"fraction_certified", static_cast<double>(ok) / c.paths},
                            {"verdict", detect::to_json(v)}};
  Table vt = verdict_table();
  vt.rows.push_back(verdict_row("1(0," + num(h) + "]", v));
  r.tables["verdicts"] = vt;
  bool flagged = false;
  for (const auto &cand : search.candidates) {
    flagged = flagged || (cand.label == "+1(0," + num(h) + "]" && cand.flagged);
  }
  check(r, "gain >= h/2 - slack on every path", ok == c.paths,
        num(ok) + "/" + num(c.paths) + ", slack " + num(slack));
  check(r, "increment class NonnegNontrivial",
        v.classification == detect::SignClass::nonneg_nontrivial, detect::to_string(v.classification));
  check(r, "search flags +1(0,h]", flagged, "best " + search.candidates[search.best].label);
  return r;
}

Report example4(const ExperimentConfig &c) {
  Report r{c.experiment, {}, {}, {}, {}};
  const TimeGrid grid = grid_of(c);
  const pg::Sampler sampler(pg::ProcessSpec{pg::TanakaAbs{}}, grid);
  const auto strat = st::interval_strategy(st::deterministic(0.0),
                                           st::deterministic(grid.horizon()), 1.0, grid.horizon());
  std::size_t nonneg = 0, positive = 0, monotone = 0;
  Table t{{"path", "gain", "local_time_T"}, {}};
  for (std::size_t k = 0; k < c.paths; ++k) {
    const auto b = sampler.sample(c.seed, k);
    const double g = st::gains(strat, b).total;
    nonneg += g >= 0.0;
    positive += g > 0.0;
    bool mono = true;
    for (std::size_t i = 0; i + 1 < b[1].size(); ++i) {
      mono = mono && b[1][i + 1] >= b[1][i];
    }
    monotone += mono;
    t.rows.push_back({num(k), num(g), num(b[1].back())});
  }
  r.tables["certificate"] = t;
  const double frac = static_cast<double>(positive) / static_cast<double>(c.paths);
  r.documents["summary"] = {{"nonneg", nonneg}, {"positive_fraction", frac},
                            {"monotone_local_time", monotone}};
  r.plots.push_back(path_plot("abs_brownian", sampler.sample(c.seed, 0)[0], "|B|"));
  r.plots.push_back(path_plot("local_time", sampler.sample(c.seed, 0)[1], "L"));
  check(r, "gains >= 0 on every path", nonneg == c.paths, num(nonneg) + "/" + num(c.paths));
  check(r, "gains > 0 on at least 99% of paths", frac >= 0.99, num(frac));
  check(r, "discrete local time nondecreasing", monotone == c.paths, num(monotone));
  return r;
}

Report example5(const ExperimentConfig &c) {
  Report r{c.experiment, {}, {}, {}, {}};
  const TimeGrid grid = grid_of(c);
  const double cap = pd(c, "cap");
  const auto source = pg::make_source(pg::ProcessSpec{pg::TanakaCapped{cap}}, grid, c.seed);
  const auto v = detect::increment_sign_test(source, st::deterministic(0.0),
                                             st::deterministic(grid.horizon()), std::nullopt,
                                             sign_opts(c, c.paths));
  Table t = verdict_table();
  t.rows.push_back(verdict_row("D_T - D_0", v));
  r.tables["verdicts"] = t;
  r.documents["verdict"] = detect::to_json(v);
  r.plots.push_back(path_plot("capped_process", source(0).front(), "D"));
  check(r, "capped process increments take both signs",
        v.classification == detect::SignClass::both_signs, detect::to_string(v.classification));
  return r;
}

Report example6(const ExperimentConfig &c) {
  Report r{c.experiment, {}, {}, {}, {}};
  const TimeGrid grid = grid_of(c);
  const TimeGrid fine(c.horizon, pz(c, "qv_steps"));
  const double h = pd(c, "h");
  const auto v = pg::Perturbation::sine(pd(c, "v_amplitude"), 1.0, pd(c, "v_amplitude"));
  Table qt{{"alpha", "path", "min_increment", "threshold", "satisfied"}, {}};
  Table vt = verdict_table();
  bool all_star = true, all_both = true;
  for (const double alpha : pv(c, "alphas")) {
    const pg::ProcessSpec spec{pg::PowerIntegrand{alpha, v}};
    const pg::Sampler fine_sampler(spec, fine);
    // for alpha < 0 the smallest window sits at the end of the horizon
    const double horizon = c.horizon;
    const auto delta = [alpha, horizon](double x) {
      const double p = 2 * alpha + 1;
      return alpha >= 0.0 ? std::pow(x, p) / p
                          : (std::pow(horizon, p) - std::pow(horizon - x, p)) / p;
    };
    for (std::size_t k = 0; k < pz(c, "qv_paths"); ++k) {
      const auto b = fine_sampler.sample(c.seed, k);
      const auto res = pg::check_condition_star(pg::realized_quadratic_variation(b[0]), delta, h);
      all_star = all_star && res.satisfied;
      qt.rows.push_back({num(alpha), num(k), num(res.min_increment), num(res.threshold),
                         res.satisfied ? "1" : "0"});
    }
    const auto verdict = detect::increment_sign_test(
        pg::make_source(spec, grid, c.seed), st::deterministic(pd(c, "t0")),
        st::deterministic(pd(c, "t1")), std::nullopt, sign_opts(c, c.paths));
    all_both = all_both && verdict.classification == detect::SignClass::both_signs;
    vt.rows.push_back(verdict_row("alpha=" + num(alpha), verdict));
  }
  r.tables["condition_star"] = qt;
  r.tables["verdicts"] = vt;
  check(r, "condition (*) holds on every window", all_star, "10% slack");
  check(r, "increments take both signs for every alpha", all_both, "");
  return r;
}

// ---- reachability ----------------------------------------------------------------------

Report lemma2(const ExperimentConfig &c) {
  Report r{c.experiment, {}, {}, {}, {}};
  const TimeGrid grid = grid_of(c);
  const auto source = pg::make_source(pg::ProcessSpec{pg::Brownian{}}, grid, c.seed);
  const double h = pd(c, "h"), T = pd(c, "T"), C = pd(c, "C");
  const auto tail = detect::reachability_test(source, h, T, 1.0, st::deterministic(0.0),
                                              std::nullopt, {c.paths, c.confidence});
  const auto win = detect::reachability_test(source, h, T, C, st::deterministic(0.0),
                                             std::nullopt, {c.paths, c.confidence});
  const double tail_law = Phi(-1.0 / std::sqrt(T));
  const double bound = Phi(-2.0 * C / std::sqrt(h)) * (2.0 * Phi(C / std::sqrt(T - h)) - 1.0);
  r.documents["tail_C1"] = detect::to_json(tail);
  r.documents["window"] = detect::to_json(win);
  r.documents["summary"] = {{"tail_law", tail_law}, {"chaining_bound", bound}};
  Table t{{"quantity", "estimate", "se", "reference"}, {}};
  t.rows.push_back({"P(B_T > 1)", num(tail.up.estimate), num(tail.up.se), num(tail_law)});
  t.rows.push_back({"P(sup_[h,T] B < -C)", num(win.sup_below.estimate), num(win.sup_below.se),
                    num(bound)});
  r.tables["reachability"] = t;
  check(r, "P(B_T > 1) within 4 SE of the normal tail",
        std::abs(tail.up.estimate - tail_law) <= 4.0 * tail.up.se,
        num(tail.up.estimate) + " vs " + num(tail_law));
  check(r, "window estimate - 3 SE exceeds the chaining bound",
        win.sup_below.estimate - 3.0 * win.sup_below.se > bound,
        num(win.sup_below.estimate) + " - 3*" + num(win.sup_below.se) + " vs " + num(bound));
  return r;
}

Report corollary3(const ExperimentConfig &c) {
  Report r{c.experiment, {}, {}, {}, {}};
  const TimeGrid grid = grid_of(c);
  const auto source = pg::make_source(pg::ProcessSpec{pg::FBm{pd(c, "hurst")}}, grid, c.seed);
  const auto tau = st::truncate(st::hitting(pd(c, "level"), st::Direction::up), pd(c, "cap"));
  const st::EventSpec a{tau, st::binary(st::fn::BinaryOp::lt, st::running_min(0),
                                        st::constant(pd(c, "event_level")))};
  const auto rep = detect::reachability_test(source, pd(c, "h"), pd(c, "offset"), pd(c, "C"), tau,
                                             a, {c.paths, c.confidence});
  r.documents["reachability"] = detect::to_json(rep);
  Table t{{"tail", "count", "estimate", "lower"}, {}};
  t.rows.push_back({"up", num(rep.up.count), num(rep.up.estimate), num(rep.up.lower)});
  t.rows.push_back({"down", num(rep.down.count), num(rep.down.estimate), num(rep.down.lower)});
  r.tables["reachability"] = t;
  check(r, "both tails have a positive lower bound", rep.up.lower > 0.0 && rep.down.lower > 0.0,
        num(rep.up.lower) + ", " + num(rep.down.lower) + " given A with frequency " +
            num(rep.conditioning_frequency));
  return r;
}

// ---- closure properties ------------------------------------------------------------------

std::vector<xform::MonotoneMap> invariance_maps() {
  return {xform::MonotoneMap::exp(), xform::MonotoneMap::cubic_plus_linear(),
          xform::MonotoneMap::arctan()};
}

Report theorem2(const ExperimentConfig &c) {
  Report r{c.experiment, {}, {}, {}, {}};
  const auto maps = invariance_maps();
  Table tt{{"tree", "map", "base", "mapped"}, {}};
  std::size_t tree_mismatch = 0;
  for (std::size_t k = 0; k < pz(c, "trees"); ++k) {
    const auto tree = dmw::random_tree(path_seed(c.seed, k));
    const bool base = dmw::is_martingale(dmw::solve_tree(tree));
    for (const auto &f : maps) {
      const bool mapped = dmw::is_martingale(dmw::solve_tree(tree.map_prices(f)));
      tree_mismatch += base != mapped;
      tt.rows.push_back({num(k), f.name(), base ? "martingale" : "arbitrage",
                         mapped ? "martingale" : "arbitrage"});
    }
  }
  const TimeGrid grid = grid_of(c);
  Table vt{{"process", "map", "base_class", "mapped_class", "same_counts"}, {}};
  std::size_t mc_mismatch = 0;
  const std::vector<std::pair<std::string, pg::ProcessSpec>> processes = {
      {"brownian", pg::ProcessSpec{pg::Brownian{}}},
      {"ito-quadratic", pg::ProcessSpec{pg::ItoQuadratic{}}},
      {"tanaka", pg::ProcessSpec{pg::TanakaAbs{}}}};
  const auto t0 = st::deterministic(pd(c, "t0")), t1 = st::deterministic(pd(c, "t1"));
  for (const auto &[name, spec] : processes) {
    const auto source = pg::make_source(spec, grid, c.seed);
    const auto opts = sign_opts(c, c.paths, 0.0);
    const auto base = detect::increment_sign_test(source, t0, t1, std::nullopt, opts);
    for (const auto &f : maps) {
      const pg::PathSource mapped = [source, f](std::uint64_t k) {
        return xform::apply_monotone(f, source(k));
      };
      const auto v = detect::increment_sign_test(mapped, t0, t1, std::nullopt, opts);
      const bool same = v.n_pos == base.n_pos && v.n_neg == base.n_neg && v.n_zero == base.n_zero;
      mc_mismatch += !same || v.classification != base.classification;
      vt.rows.push_back({name, f.name(), detect::to_string(base.classification),
                         detect::to_string(v.classification), same ? "1" : "0"});
    }
  }
  r.tables["tree_invariance"] = tt;
  r.tables["verdict_invariance"] = vt;
  check(r, "tree certificate types unchanged", tree_mismatch == 0, num(tree_mismatch) + " changes");
  check(r, "increment classes unchanged", mc_mismatch == 0, num(mc_mismatch) + " changes");
  return r;
}

Report theorem6(const ExperimentConfig &c) {
  Report r{c.experiment, {}, {}, {}, {}};
  const std::size_t n = c.steps;
  const TimeGrid unit(1.0, n);
  Table t{{"nu", "paths", "max_abs_gain_difference", "snapped_stops"}, {}};
  bool ok = true;
  for (const std::string kind : {"t", "2t", "qv"}) {
    double worst = 0.0;
    std::size_t snapped = 0;
    for (std::size_t k = 0; k < c.paths; ++k) {
      const xform::TimeChange tc = [&] {
        if (kind == "t") {
          return xform::build_time_change([](double s) { return s; }, unit);
        }
        if (kind == "2t") {
          return xform::build_time_change([](double s) { return 2.0 * s; }, TimeGrid(0.5, n));
        }
        const Path s = pg::sample_brownian(unit, path_seed(c.seed ^ 0x5151, k));
        return xform::build_time_change(pg::realized_quadratic_variation(s));
      }();
      const TimeGrid xg = kind == "qv" ? TimeGrid(tc.nu.back(), n) : unit;
      const Path x = pg::sample_brownian(xg, path_seed(c.seed, k));
      const Path xt = xform::time_change_path(x, tc);
      const PathBundle bx{x};
      const double hx = xg.horizon();
      const auto tau0 = st::truncate(st::hitting(0.1, st::Direction::up), 0.4 * hx);
      const auto tau1 = st::truncate(st::hitting(-0.1, st::Direction::down, 0, tau0), 0.9 * hx);
      const std::size_t k0 = st::evaluate_stop(tau0, bx), k1 = st::evaluate_stop(tau1, bx);
      const auto i0 = xform::first_reaching(tc, xg, k0);
      const auto i1 = xform::first_reaching(tc, xg, k1);
      if (!i0 || !i1) {
        ok = false;
        continue;
      }
      const std::size_t j0 = xform::lookup_index(tc, xg, *i0);
      const std::size_t j1 = xform::lookup_index(tc, xg, *i1);
      snapped += (j0 != k0) + (j1 != k1);
      const auto on_x = st::interval_strategy(st::deterministic(xg.time(j0)),
                                              st::deterministic(xg.time(j1)), 1.0, 0.0);
      const auto on_xt = st::interval_strategy(st::deterministic(tc.grid.time(*i0)),
                                               st::deterministic(tc.grid.time(*i1)), 1.0, 0.0);
      const double gx = st::gains(on_x, bx).total;
      const double gxt = st::gains(on_xt, PathBundle{xt}).total;
      worst = std::max(worst, std::abs(gx - gxt));
    }
    ok = ok && worst <= 1e-12;
    if (kind != "qv") {
      ok = ok && snapped == 0;
    }
    t.rows.push_back({kind, num(c.paths), num(worst), num(snapped)});
  }
  r.tables["timechange_gains"] = t;
  r.documents["summary"] = {{"steps", n}, {"paths", c.paths}};
  check(r, "pathwise gains agree within 1e-12", ok, "");
  return r;
}

Report theorem7(const ExperimentConfig &c) {
  Report r{c.experiment, {}, {}, {}, {}};
  const TimeGrid grid = grid_of(c);
  Table t{{"alpha", "mean_Z_T", "se", "reference", "class"}, {}};
  bool ok = true;
  for (const double alpha : pv(c, "alphas")) {
    const auto spec = pg::ProcessSpec{pg::QVDrift{alpha, pg::make_spec(pg::Brownian{})}};
    const pg::Sampler sampler(spec, grid);
    double s = 0.0, sq = 0.0;
    for (std::size_t k = 0; k < c.paths; ++k) {
      const double z = sampler.sample(c.seed, k).front().back();
      s += z;
      sq += z * z;
    }
    const double n = static_cast<double>(c.paths);
    const double mean = s / n, se = std::sqrt(std::max(sq / n - mean * mean, 0.0) / n);
    const double ref = std::pow(grid.horizon(), alpha);
    const auto v = detect::increment_sign_test(
        pg::make_source(spec, grid, c.seed), st::deterministic(pd(c, "t0")),
        st::deterministic(pd(c, "t1")), std::nullopt, sign_opts(c, c.paths));
    ok = ok && std::abs(mean - ref) <= 4.0 * se;
    if (alpha >= 0.5) {
      ok = ok && v.classification == detect::SignClass::both_signs;
    }
    t.rows.push_back({num(alpha), num(mean), num(se), num(ref),
                      detect::to_string(v.classification)});
  }
  r.tables["qv_drift"] = t;
  const auto z = xform::qv_drift_process(pg::ProcessSpec{pg::Brownian{}}, 1.0, grid, c.seed);
  r.plots.push_back(path_plot("qv_drift_path", z, "Z"));
  check(r, "E[Z_T] within 4 SE of T^alpha and both signs for alpha >= 1/2", ok, "");
  return r;
}

// ---- trees ------------------------------------------------------------------------------

Report dmw_trees(const ExperimentConfig &c) {
  Report r{c.experiment, {}, {}, {}, {}};
  Table t{{"tree", "depth", "nodes", "solver", "oracle", "verified", "perturbed_rejected"}, {}};
  std::size_t agree = 0, verified = 0, rejected = 0;
  const std::size_t trees = pz(c, "trees");
  json examples = json::array();
  for (std::size_t k = 0; k < trees; ++k) {
    const auto tree = dmw::random_tree(path_seed(c.seed, k), pz(c, "max_periods"),
                                       pz(c, "max_children"));
    const auto cert = dmw::solve_tree(tree);
    const bool mart = dmw::is_martingale(cert);
    const bool oracle_arb = dmw::brute_force_has_arbitrage(tree);
    const bool ok = dmw::verify_certificate(tree, cert);
    dmw::Certificate bad = cert;
    if (auto *m = std::get_if<dmw::MartingaleCertificate>(&bad)) {
      m->q[1] += 1e-3;
    } else {
      for (auto &f : std::get<dmw::ArbitrageCertificate>(bad).f) {
        f = -f;
      }
    }
    const bool rej = !dmw::verify_certificate(tree, bad);
    agree += mart != oracle_arb;
    verified += ok;
    rejected += rej;
    t.rows.push_back({num(k), num(tree.depth()), num(tree.size()), mart ? "martingale" : "arbitrage",
                      oracle_arb ? "arbitrage" : "martingale", ok ? "1" : "0", rej ? "1" : "0"});
    if (k < 3) {
      examples.push_back({{"tree", dmw::to_json(tree)}, {"certificate", dmw::to_json(cert)}});
    }
  }
  r.tables["oracle"] = t;
  r.documents["examples"] = examples;
  check(r, "solver matches brute-force oracle", agree == trees, num(agree) + "/" + num(trees));
  check(r, "every certificate verifies", verified == trees, num(verified) + "/" + num(trees));
  check(r, "every perturbed certificate fails", rejected == trees, num(rejected) + "/" + num(trees));
  return r;
}

// ---- fractional kernel ---------------------------------------------------------------------

Report corollary4(const ExperimentConfig &c) {
  Report r{c.experiment, {}, {}, {}, {}};
  const double hurst = pd(c, "hurst"), mu = pd(c, "mu");
  const TimeGrid grid = grid_of(c);
  const auto kg = frackernel::KernelGrid::build(hurst, grid);
  const auto a0 = frackernel::inverse_K_drift([](double) { return 0.0; }, grid, hurst, kg.constant);
  const auto a = frackernel::inverse_K_drift([mu](double) { return mu; }, grid, hurst, kg.constant);
  const std::vector<double> times = {0.5 * grid.horizon(), grid.horizon()};
  std::vector<std::size_t> ix;
  for (const double t : times) {
    ix.push_back(grid.ceil_index(t));
  }
  double cov[2][2] = {{0, 0}, {0, 0}};
  double sw = 0.0, sw2 = 0.0, swx = 0.0, sl = 0.0, sl2 = 0.0;
  std::vector<double> lam(c.paths), xs(c.paths);
  bool zero_exact = true;
  for (std::size_t k = 0; k < c.paths; ++k) {
    const Path b = pg::sample_brownian(grid, path_seed(c.seed, k));
    const Path y = kg.apply(b);
    for (int p = 0; p < 2; ++p) {
      for (int q = 0; q < 2; ++q) {
        cov[p][q] += y[ix[p]] * y[ix[q]];
      }
    }
    const auto d0 = frackernel::girsanov_density(a0, b, hurst);
    zero_exact = zero_exact && std::all_of(d0.lambda.begin(), d0.lambda.end(),
                                           [](double v) { return v == 1.0; });
    const auto d = frackernel::girsanov_density(a, b, hurst);
    lam[k] = d.lambda.back();
    xs[k] = y.back() + mu * grid.horizon();
    sl += lam[k];
    sl2 += lam[k] * lam[k];
    sw += lam[k];
    sw2 += lam[k] * lam[k];
    swx += lam[k] * xs[k];
  }
  const double n = static_cast<double>(c.paths);
  Table ct{{"s", "t", "kernel_built", "law", "relative_error"}, {}};
  double worst = 0.0;
  for (int p = 0; p < 2; ++p) {
    for (int q = p; q < 2; ++q) {
      const double e = cov[p][q] / n;
      const double law = pg::fbm_covariance(hurst, times[p], times[q]);
      worst = std::max(worst, std::abs(e / law - 1.0));
      ct.rows.push_back({num(times[p]), num(times[q]), num(e), num(law), num(e / law - 1.0)});
    }
  }
  const double mean_l = sl / n, se_l = std::sqrt(std::max(sl2 / n - mean_l * mean_l, 0.0) / n);
  const double wmean = swx / sw;
  double var = 0.0;
  for (std::size_t k = 0; k < c.paths; ++k) {
    var += lam[k] * lam[k] * (xs[k] - wmean) * (xs[k] - wmean);
  }
  const double wse = std::sqrt(var) / sw;
  std::vector<double> f(grid.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    f[i] = grid.time(i) * grid.time(i);
  }
  const auto df = frackernel::fractional_derivative(std::span<const double>(f), grid, hurst);
  double frac_err = 0.0;
  for (const double t : times) {
    const double exact = 2.0 * std::pow(t, 2.5 - hurst) / std::tgamma(3.5 - hurst);
    frac_err = std::max(frac_err, std::abs(df[grid.ceil_index(t)] / exact - 1.0));
  }
  r.tables["kernel_covariance"] = ct;
  Table gt{{"quantity", "value", "se"}, {}};
  gt.rows.push_back({"mean Lambda_T", num(mean_l), num(se_l)});
  gt.rows.push_back({"weighted mean of X_T", num(wmean), num(wse)});
  gt.rows.push_back({"calibrated C_H", num(kg.constant), ""});
  gt.rows.push_back({"closed-form C_H", num(kg.analytic), ""});
  r.tables["girsanov"] = gt;
  (void)sw2;
  r.documents["summary"] = {{"calibrated_constant", kg.constant}, {"analytic_constant", kg.analytic},
                            {"fractional_derivative_rel_error", frac_err}};
  check(r, "kernel covariance within 5% of the fBm law", worst <= 0.05, num(worst));
  check(r, "fractional derivative of t^2 matches to 3 digits", frac_err < 5e-4, num(frac_err));
  check(r, "mu = 0 gives Lambda = 1 exactly", zero_exact, "");
  check(r, "mean Lambda_T in [0.95, 1.05]", mean_l >= 0.95 && mean_l <= 1.05, num(mean_l));
  check(r, "reweighted drift within 4 weighted SE of 0", std::abs(wmean) <= 4.0 * wse,
        num(wmean) + " +- " + num(wse));
  return r;
}

// ---- projection and hedging --------------------------------------------------------------

st::SimpleStrategy ladder(std::size_t legs, double step, double cap, double horizon) {
  st::SimpleStrategy s;
  st::StoppingRule prev;
  for (std::size_t k = 1; k <= legs; ++k) {
    auto hit = st::truncate(st::hitting(step * static_cast<double>(k), st::Direction::up, 0, prev),
                            cap);
    const double sign = k % 2 == 1 ? 1.0 : -1.0;
    s.legs.push_back({hit, st::constant(sign * static_cast<double>(k))});
    prev = hit;
  }
  s.exit = st::deterministic(horizon);
  return s;
}

Report lemma7(const ExperimentConfig &c) {
  Report r{c.experiment, {}, {}, {}, {}};
  const TimeGrid grid = grid_of(c);
  const double delta0 = pd(c, "delta0");
  const auto s = ladder(pz(c, "legs"), pd(c, "level_step"), 0.9 * grid.horizon(), grid.horizon());
  std::vector<PathBundle> paths;
  paths.reserve(c.paths);
  const pg::Sampler sampler(pg::ProcessSpec{pg::Brownian{}}, grid);
  for (std::size_t k = 0; k < c.paths; ++k) {
    paths.push_back(sampler.sample(c.seed, k));
  }
  const auto proj = hedge::project_to_cc(s, delta0, paths);
  const auto valid = st::validate_cc_spacing(proj.strategy, paths);
  std::size_t differ_not_violated = 0, violated_not_differ = 0, pos_mismatch = 0;
  for (std::size_t k = 0; k < paths.size(); ++k) {
    const double g0 = st::gains(s, paths[k]).total;
    const double g1 = st::gains(proj.strategy, paths[k]).total;
    const bool differ = g0 != g1;
    differ_not_violated += differ && !proj.violated[k];
    violated_not_differ += !differ && proj.violated[k];
    const auto p0 = st::position_path(s, paths[k]);
    const auto p1 = st::position_path(proj.strategy, paths[k]);
    pos_mismatch += (p0 != p1) != proj.violated[k];
  }
  Table t{{"quantity", "value"}, {}};
  t.rows.push_back({"violation_fraction", num(proj.violation_fraction)});
  t.rows.push_back({"cc_valid_on_all_paths", valid.ok ? "1" : "0"});
  t.rows.push_back({"gain_changed_without_violation", num(differ_not_violated)});
  t.rows.push_back({"violation_without_gain_change", num(violated_not_differ)});
  r.tables["projection"] = t;
  r.documents["projected_strategy"] = st::to_json(proj.strategy);
  check(r, "projected strategy passes CC validation", valid.ok, "");
  check(r, "gains differ exactly on violating paths",
        differ_not_violated == 0 && violated_not_differ == 0,
        num(differ_not_violated) + " / " + num(violated_not_differ));
  check(r, "positions differ exactly on violating paths", pos_mismatch == 0, num(pos_mismatch));
  return r;
}

Report theorem9(const ExperimentConfig &c) {
  Report r{c.experiment, {}, {}, {}, {}};
  const TimeGrid grid = grid_of(c);
  const auto model = c.params.at("model").get<std::string>() == "black-scholes"
                         ? hedge::Model::black_scholes(pd(c, "s0"), pd(c, "sigma"))
                         : hedge::Model::bachelier(pd(c, "s0"), pd(c, "sigma"));
  const auto payoff = hedge::Payoff::call(pd(c, "strike"));
  std::vector<hedge::HedgeReport> reports;
  for (const double h : pv(c, "hs")) {
    reports.push_back(hedge::cc_rebalance_hedge(payoff, model, h, grid, c.paths, c.seed));
  }
  const auto lin = hedge::cc_rebalance_hedge(hedge::Payoff::linear(), model, pv(c, "hs").front(),
                                             grid, std::min<std::size_t>(c.paths, 100), c.seed);
  double lin_err = 0.0;
  for (const double e : lin.errors) {
    lin_err = std::max(lin_err, std::abs(e));
  }
  Table t{{"h", "rms", "q05", "q50", "q95", "h2"}, {}};
  json docs = json::array();
  std::size_t inversions = 0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto &x = reports[i];
    t.rows.push_back({num(x.h), num(x.rms), num(x.q05), num(x.q50), num(x.q95), num(x.h2)});
    docs.push_back(hedge::to_json(x));
    if (i > 0 && x.rms > reports[i - 1].rms) {
      ++inversions;
    }
  }
  r.tables["hedging"] = t;
  r.documents["hedging"] = docs;
  check(r, "RMS error nonincreasing with at most one inversion", inversions <= 1, num(inversions));
  check(r, "finest rebalancing beats the coarsest", reports.back().rms < reports.front().rms,
        num(reports.back().rms) + " < " + num(reports.front().rms));
  check(r, "linear payoff replicates exactly", lin_err <= 1e-12, num(lin_err));
  return r;
}

json defaults(std::size_t paths, std::size_t steps, double horizon, json params) {
  return {{"paths", paths}, {"steps", steps}, {"horizon", horizon}, {"params", std::move(params)}};
}

struct Entry {
  ExperimentInfo info;
  std::function<Report(const ExperimentConfig &)> run;
};

const std::vector<Entry> &entries() {
  static const std::vector<Entry> table = {
      {{"fbm-covariance", "fBm covariance against the closed-form law",
        defaults(20000, 256, 1.0,
                 {{"hurst", 0.5},
                  {"method", "davies-harte"},
                  {"pairs", json::array({{0.1, 0.1}, {0.1, 0.5}, {0.25, 0.75}, {0.5, 0.5},
                                         {0.5, 1.0}, {0.3, 0.9}, {0.75, 0.75}, {0.2, 1.0},
                                         {1.0, 1.0}, {0.6, 0.8}})}})},
       fbm_covariance},
      {{"example1-geometric-fbm", "increment signs of fBm and exp(fBm)",
        defaults(5000, 256, 1.0, {{"hurst", 0.7}, {"t0", 0.2}, {"t1", 0.5}})},
       example1},
      {{"example2-arbitrage", "1_(0,h] on X = int B dB + t",
        defaults(10000, 1024, 1.0, {{"h", 0.25}, {"search_paths", 2000}})},
       example2},
      {{"example4-tanaka", "buy-and-hold on |B|", defaults(10000, 1024, 1.0, json::object())},
       example4},
      {{"example5-capped", "Tanaka process with local time stopped at a cap",
        defaults(10000, 1024, 1.0, {{"cap", 0.1}})},
       example5},
      {{"example6-power", "int s^alpha dB + V: condition (*) and increment signs",
        defaults(5000, 1024, 1.0,
                 {{"alphas", {-0.25, 0.0, 0.5, 1.0}},
                  {"h", 0.1},
                  {"v_amplitude", 0.2},
                  {"qv_steps", 65536},
                  {"qv_paths", 4},
                  {"t0", 0.2},
                  {"t1", 0.5}})},
       example6},
      {{"lemma2-reachability", "Brownian tails and the window chaining bound",
        defaults(100000, 1000, 1.0, {{"h", 0.1}, {"T", 1.0}, {"C", 0.5}})},
       lemma2},
      {{"corollary3-fbm-reachability", "fBm tails after a hitting time on an event",
        defaults(50000, 256, 1.0,
                 {{"hurst", 0.7},
                  {"level", 0.3},
                  {"cap", 0.5},
                  {"offset", 0.5},
                  {"h", 0.1},
                  {"C", 0.2},
                  {"event_level", -0.1}})},
       corollary3},
      {{"theorem2-monotone-invariance", "certificate and verdict invariance under monotone maps",
        defaults(10000, 256, 1.0, {{"trees", 200}, {"t0", 0.2}, {"t1", 0.5}})},
       theorem2},
      {{"theorem6-timechange", "gains under a time change and its inverse",
        defaults(1000, 1024, 1.0, json::object())},
       theorem6},
      {{"theorem7-qvdrift", "S + [S,S]^alpha", defaults(20000, 1024, 1.0, {{"alphas", {1.0, 0.5}}, {"t0", 0.2}, {"t1", 0.5}})},
       theorem7},
      {{"dmw-random-trees", "tree solver against the brute-force oracle",
        defaults(1, 1, 1.0, {{"trees", 200}, {"max_periods", 3}, {"max_children", 3}})},
       dmw_trees},
      {{"corollary4-girsanov", "kernel representation and the drift-removing density",
        defaults(10000, 256, 1.0, {{"hurst", 0.7}, {"mu", 0.5}})},
       corollary4},
      {{"lemma7-projection", "projection of a hitting ladder onto CC",
        defaults(5000, 1024, 1.0, {{"delta0", 0.05}, {"legs", 8}, {"level_step", 0.1}})},
       lemma7},
      {{"theorem9-hedging", "CC rebalanced call hedge",
        defaults(20000, 256, 1.0,
                 {{"hs", {1.0 / 16, 1.0 / 64, 1.0 / 256}},
                  {"strike", 0.2},
                  {"model", "bachelier"},
                  {"s0", 0.0},
                  {"sigma", 1.0}})},
       theorem9},
  };
  return table;
}

} // namespace

const std::vector<ExperimentInfo> &catalog() {
  static const std::vector<ExperimentInfo> infos = [] {
    std::vector<ExperimentInfo> out;
    for (const auto &e : entries()) {
      out.push_back(e.info);
    }
    return out;
  }();
  return infos;
}

Report run_report(const ExperimentConfig &config) {
  for (const auto &e : entries()) {
    if (e.info.id == config.experiment) {
      try {
        return e.run(config);
      } catch (const std::exception &ex) {
        throw std::runtime_error(config.experiment + ": " + ex.what());
      }
    }
  }
  throw ConfigError("unknown experiment id '" + config.experiment + "'");
}

} // namespace noarb::expcli
