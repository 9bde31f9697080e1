#include "noarb/detect.hpp"

#include "noarb/format.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>

namespace noarb::detect {

using strategy::EventSpec;
using strategy::StoppingRule;

std::string to_string(SignClass c) {
  switch (c) {
  case SignClass::both_signs:
    return "BothSigns";
  case SignClass::nonneg_nontrivial:
    return "NonnegNontrivial";
  case SignClass::nonpos_nontrivial:
    return "NonposNontrivial";
  case SignClass::null:
    return "Null";
  case SignClass::inconclusive:
    return "Inconclusive";
  }
  return "Inconclusive";
}

double clopper_pearson_lower(std::size_t k, std::size_t n, double confidence) {
  if (k > n) {
    throw DomainError("count exceeds sample size");
  }
  if (k == 0) {
    return 0.0;
  }
  return boost::math::ibeta_inv(static_cast<double>(k), static_cast<double>(n - k + 1),
                                1.0 - confidence);
}

double clopper_pearson_upper(std::size_t k, std::size_t n, double confidence) {
  if (k > n) {
    throw DomainError("count exceeds sample size");
  }
  if (k == n) {
    return 1.0;
  }
  return boost::math::ibeta_inv(static_cast<double>(k + 1), static_cast<double>(n - k),
                                confidence);
}

Verdict classify_increments(std::span<const double> increments, double confidence,
                            double zero_tol) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw DomainError("confidence must lie in (0, 1)");
  }
  Verdict v;
  v.confidence = confidence;
  for (const double x : increments) {
    if (std::abs(x) <= zero_tol) {
      ++v.n_zero;
    } else if (x > 0.0) {
      ++v.n_pos;
    } else {
      ++v.n_neg;
    }
  }
  const std::size_t n = v.n();
  if (n == 0) {
    return v;
  }
  v.lb_pos = clopper_pearson_lower(v.n_pos, n, confidence);
  v.lb_neg = clopper_pearson_lower(v.n_neg, n, confidence);
  if (v.n_zero == n) {
    v.classification = SignClass::null;
  } else if (v.lb_pos > 0.0 && v.lb_neg > 0.0) {
    v.classification = SignClass::both_signs;
  } else if (v.n_neg == 0 && v.lb_pos > 0.0) {
    v.classification = SignClass::nonneg_nontrivial;
  } else if (v.n_pos == 0 && v.lb_neg > 0.0) {
    v.classification = SignClass::nonpos_nontrivial;
  }
  return v;
}

namespace {

double path_scale(const Path &p) {
  double s = 0.0;
  for (const double x : p.values) {
    s = std::max(s, std::abs(x));
  }
  return s;
}

bool event_holds(const std::optional<EventSpec> &event, const PathBundle &bundle) {
  return !event || strategy::evaluate_event(*event, bundle);
}

} // namespace

Verdict increment_sign_test(const procgen::PathSource &source, const StoppingRule &tau0,
                            const StoppingRule &tau1,
                            const std::optional<EventSpec> &event,
                            const SignTestOptions &opts) {
  if (opts.n < 100) {
    throw DomainError("increment_sign_test needs at least 100 scenarios");
  }
  std::vector<double> increments;
  increments.reserve(opts.n);
  double scale = 0.0;
  for (std::size_t k = 0; k < opts.n; ++k) {
    const PathBundle bundle = source(k);
    if (!event_holds(event, bundle)) {
      continue;
    }
    const std::size_t i0 = strategy::evaluate_stop(tau0, bundle);
    const std::size_t i1 = strategy::evaluate_stop(tau1, bundle);
    if (i1 < i0) {
      throw DomainError("tau1 precedes tau0 on scenario " + std::to_string(k));
    }
    const Path &x = bundle.front();
    increments.push_back(x[i1] - x[i0]);
    scale = std::max(scale, path_scale(x));
  }
  if (increments.empty()) {
    throw NoConditioningError("conditioning event never occurs in the sample");
  }
  const double tol = opts.zero_tol >= 0.0 ? opts.zero_tol : 1e-12 * scale;
  return classify_increments(increments, opts.confidence, tol);
}

Verdict increment_sign_test(const procgen::ProcessSpec &spec, const TimeGrid &grid,
                            std::uint64_t seed, const StoppingRule &tau0,
                            const StoppingRule &tau1,
                            const std::optional<EventSpec> &event,
                            const SignTestOptions &opts) {
  return increment_sign_test(procgen::make_source(spec, grid, seed), tau0, tau1, event,
                             opts);
}

Proportion proportion(std::size_t count, std::size_t n, double confidence) {
  Proportion p;
  p.count = count;
  if (n == 0) {
    return p;
  }
  p.estimate = static_cast<double>(count) / static_cast<double>(n);
  p.se = std::sqrt(p.estimate * (1.0 - p.estimate) / static_cast<double>(n));
  p.lower = clopper_pearson_lower(count, n, confidence);
  return p;
}

ReachabilityReport reachability_test(const procgen::PathSource &source, double h,
                                     double T, double C, const StoppingRule &tau,
                                     const std::optional<EventSpec> &event,
                                     const ReachabilityOptions &opts) {
  if (!(h > 0.0 && h < T)) {
    throw DomainError("reachability needs 0 < h < T");
  }
  if (!(C > 0.0)) {
    throw DomainError("threshold C must be positive");
  }
  std::size_t n_cond = 0, up = 0, down = 0, sup_below = 0, inf_above = 0;
  for (std::size_t k = 0; k < opts.n; ++k) {
    const PathBundle bundle = source(k);
    const TimeGrid &grid = bundle.front().grid;
    if (k == 0 && strategy::static_bound(tau) + T > grid.horizon() + 1e-9) {
      throw DomainError("window tau + T exceeds the grid horizon");
    }
    if (!event_holds(event, bundle)) {
      continue;
    }
    ++n_cond;
    const Path &x = bundle.front();
    const std::size_t i0 = strategy::evaluate_stop(tau, bundle);
    const std::size_t lo = i0 + grid.span_steps(h);
    const std::size_t hi = i0 + grid.floor_index(T);
    if (hi >= x.size()) {
      throw DomainError("window end past the grid horizon");
    }
    const double end = x[hi] - x[i0];
    up += end > C;
    down += end < -C;
    double sup = -std::numeric_limits<double>::infinity();
    double inf = std::numeric_limits<double>::infinity();
    for (std::size_t i = lo; i <= hi; ++i) {
      const double d = x[i] - x[i0];
      sup = std::max(sup, d);
      inf = std::min(inf, d);
    }
    sup_below += sup < -C;
    inf_above += inf > C;
  }
  if (n_cond == 0) {
    throw NoConditioningError("conditioning event never occurs in the sample");
  }
  ReachabilityReport r;
  r.threshold = C;
  r.n = opts.n;
  r.n_conditioned = n_cond;
  r.conditioning_frequency = static_cast<double>(n_cond) / static_cast<double>(opts.n);
  r.confidence = opts.confidence;
  r.up = proportion(up, n_cond, opts.confidence);
  r.down = proportion(down, n_cond, opts.confidence);
  r.sup_below = proportion(sup_below, n_cond, opts.confidence);
  r.inf_above = proportion(inf_above, n_cond, opts.confidence);
  return r;
}

std::vector<Candidate> interval_family(std::span<const double> times, double h) {
  std::vector<Candidate> out;
  for (const double t : times) {
    for (const double sign : {1.0, -1.0}) {
      out.push_back({(sign > 0 ? "+1(0," : "-1(0,") + fmt12(t) + "]",
                     strategy::interval_strategy(strategy::deterministic(0.0),
                                                 strategy::deterministic(t), sign, h)});
    }
  }
  return out;
}

std::vector<Candidate> hitting_family(std::span<const double> levels, double h,
                                      double horizon) {
  std::vector<Candidate> out;
  for (const double a : levels) {
    const auto dir = a >= 0.0 ? strategy::Direction::up : strategy::Direction::down;
    const auto entry = strategy::truncate(strategy::hitting(a, dir), horizon - h);
    for (const double sign : {1.0, -1.0}) {
      out.push_back({(sign > 0 ? "+1(hit " : "-1(hit ") + fmt12(a) + ",+" + fmt12(h) + "]",
                     strategy::interval_strategy(entry, strategy::offset_after(entry, h),
                                                 sign, h)});
    }
  }
  return out;
}

SearchResult arbitrage_search(const procgen::PathSource &source,
                              std::span<const Candidate> family,
                              const SearchOptions &opts) {
  if (family.empty()) {
    throw DomainError("empty strategy family");
  }
  if (opts.n < 2) {
    throw DomainError("arbitrage_search needs at least two scenarios");
  }
  const std::size_t m = family.size();
  std::vector<std::vector<double>> g(m, std::vector<double>(opts.n));
  for (std::size_t k = 0; k < opts.n; ++k) {
    const PathBundle bundle = source(k);
    for (std::size_t c = 0; c < m; ++c) {
      g[c][k] = strategy::gains(family[c].strategy, bundle).total;
    }
  }
  const double z = boost::math::quantile(boost::math::normal(), opts.confidence);
  SearchResult out;
  for (std::size_t c = 0; c < m; ++c) {
    CandidateResult r;
    r.label = family[c].label;
    r.verdict = classify_increments(g[c], opts.confidence, opts.eps);
    double sum = 0.0, sq = 0.0;
    std::size_t ok = 0;
    r.min_gain = g[c].front();
    for (const double x : g[c]) {
      sum += x;
      ok += x >= -opts.eps;
      r.min_gain = std::min(r.min_gain, x);
    }
    const double n = static_cast<double>(opts.n);
    r.mean = sum / n;
    for (const double x : g[c]) {
      sq += (x - r.mean) * (x - r.mean);
    }
    r.se = std::sqrt(sq / (n - 1.0) / n);
    r.mean_lower = r.mean - z * r.se;
    r.fraction_nonneg = static_cast<double>(ok) / n;
    r.flagged = ok == opts.n && r.mean_lower > 0.0;
    out.arbitrage_found = out.arbitrage_found || r.flagged;
    out.candidates.push_back(std::move(r));
  }
  for (std::size_t c = 1; c < m; ++c) {
    const auto &a = out.candidates[c];
    const auto &b = out.candidates[out.best];
    if (a.fraction_nonneg > b.fraction_nonneg ||
        (a.fraction_nonneg == b.fraction_nonneg && a.mean > b.mean)) {
      out.best = c;
    }
  }
  return out;
}

// ---- reports ---------------------------------------------------------------------

nlohmann::json to_json(const Verdict &v) {
  return {{"class", to_string(v.classification)},
          {"n_pos", v.n_pos},
          {"n_neg", v.n_neg},
          {"n_zero", v.n_zero},
          {"confidence", v.confidence},
          {"lb_pos", v.lb_pos},
          {"lb_neg", v.lb_neg}};
}

namespace {
nlohmann::json to_json(const Proportion &p) {
  return {{"count", p.count}, {"estimate", p.estimate}, {"se", p.se}, {"lower", p.lower}};
}
} // namespace

nlohmann::json to_json(const ReachabilityReport &r) {
  return {{"threshold", r.threshold},
          {"n", r.n},
          {"n_conditioned", r.n_conditioned},
          {"conditioning_frequency", r.conditioning_frequency},
          {"confidence", r.confidence},
          {"up", to_json(r.up)},
          {"down", to_json(r.down)},
          {"sup_below", to_json(r.sup_below)},
          {"inf_above", to_json(r.inf_above)}};
}

nlohmann::json to_json(const SearchResult &r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto &c : r.candidates) {
    rows.push_back({{"label", c.label},
                    {"verdict", to_json(c.verdict)},
                    {"fraction_nonneg", c.fraction_nonneg},
                    {"mean", c.mean},
                    {"se", c.se},
                    {"mean_lower", c.mean_lower},
                    {"min_gain", c.min_gain},
                    {"flagged", c.flagged}});
  }
  return {{"candidates", rows},
          {"best", r.candidates.at(r.best).label},
          {"arbitrage_found", r.arbitrage_found}};
}

void write_verdict_csv(std::ostream &out,
                       std::span<const std::pair<std::string, Verdict>> rows) {
  out << "candidate,n_pos,n_neg,n_zero,lb_pos,lb_neg,class\n";
  for (const auto &[label, v] : rows) {
    out << '"' << label << "\"," << v.n_pos << ',' << v.n_neg << ',' << v.n_zero << ','
        << fmt12(v.lb_pos) << ',' << fmt12(v.lb_neg) << ',' << to_string(v.classification)
        << '\n';
  }
}

void write_search_csv(std::ostream &out, const SearchResult &r) {
  out << "candidate,n_pos,n_neg,n_zero,lb_pos,lb_neg,class,fraction_nonneg,mean,"
         "mean_lower,min_gain,flagged\n";
  for (const auto &c : r.candidates) {
    const Verdict &v = c.verdict;
    out << '"' << c.label << "\"," << v.n_pos << ',' << v.n_neg << ',' << v.n_zero << ','
        << fmt12(v.lb_pos) << ',' << fmt12(v.lb_neg) << ',' << to_string(v.classification)
        << ',' << fmt12(c.fraction_nonneg) << ',' << fmt12(c.mean) << ','
        << fmt12(c.mean_lower) << ',' << fmt12(c.min_gain) << ',' << (c.flagged ? 1 : 0)
        << '\n';
  }
}

} // namespace noarb::detect
