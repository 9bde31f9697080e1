#pragma once

#include "noarb/procgen.hpp"
#include "noarb/strategy.hpp"

#include <json.hpp>

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace noarb::detect {

enum class SignClass { both_signs, nonneg_nontrivial, nonpos_nontrivial, null, inconclusive };

std::string to_string(SignClass c);

struct Verdict {
  SignClass classification = SignClass::inconclusive;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::size_t n_zero = 0;
  double confidence = 0.999;
  double lb_pos = 0.0; // lower confidence bound for P(increment > 0)
  double lb_neg = 0.0;

  std::size_t n() const { return n_pos + n_neg + n_zero; }
};

/// One-sided exact binomial bounds at the given confidence.
double clopper_pearson_lower(std::size_t k, std::size_t n, double confidence);
double clopper_pearson_upper(std::size_t k, std::size_t n, double confidence);

/// Classify a sample of increments. |x| <= zero_tol counts as zero.
Verdict classify_increments(std::span<const double> increments, double confidence,
                            double zero_tol);

class NoConditioningError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct SignTestOptions {
  std::size_t n = 10000;
  double confidence = 0.999;
  double zero_tol = -1.0; // < 0 selects 1e-12 * sample path scale
};

/// Increments 1_A (X_tau1 - X_tau0) of source path 0 over scenarios 0..n-1
/// drawn from `source`. Scenarios outside A are dropped.
Verdict increment_sign_test(const procgen::PathSource &source,
                            const strategy::StoppingRule &tau0,
                            const strategy::StoppingRule &tau1,
                            const std::optional<strategy::EventSpec> &event,
                            const SignTestOptions &opts);

Verdict increment_sign_test(const procgen::ProcessSpec &spec, const TimeGrid &grid,
                            std::uint64_t seed, const strategy::StoppingRule &tau0,
                            const strategy::StoppingRule &tau1,
                            const std::optional<strategy::EventSpec> &event,
                            const SignTestOptions &opts);

struct Proportion {
  std::size_t count = 0;
  double estimate = 0.0;
  double se = 0.0;
  double lower = 0.0; // Clopper-Pearson lower bound
};

Proportion proportion(std::size_t count, std::size_t n, double confidence);

struct ReachabilityReport {
  double threshold = 0.0;
  std::size_t n = 0;
  std::size_t n_conditioned = 0;
  double conditioning_frequency = 0.0;
  double confidence = 0.999;
  Proportion up;         // X_{tau+T} - X_tau > C
  Proportion down;       // X_{tau+T} - X_tau < -C
  Proportion sup_below;  // sup_{[h,T]} (X_{tau+.} - X_tau) < -C
  Proportion inf_above;  // inf_{[h,T]} (X_{tau+.} - X_tau) > C
};

struct ReachabilityOptions {
  std::size_t n = 10000;
  double confidence = 0.999;
};

ReachabilityReport reachability_test(const procgen::PathSource &source, double h,
                                     double T, double C,
                                     const strategy::StoppingRule &tau,
                                     const std::optional<strategy::EventSpec> &event,
                                     const ReachabilityOptions &opts);

struct Candidate {
  std::string label;
  strategy::SimpleStrategy strategy;
};

/// {sign * 1_{(0,t]} : t in times, sign in {+1,-1}} with CC spacing h.
std::vector<Candidate> interval_family(std::span<const double> times, double h);
/// {sign * 1_{(tau_a, tau_a + h]} } with tau_a the first hit of level a
/// truncated at horizon - h.
std::vector<Candidate> hitting_family(std::span<const double> levels, double h,
                                      double horizon);

struct CandidateResult {
  std::string label;
  Verdict verdict;
  double fraction_nonneg = 0.0; // gain >= -eps
  double mean = 0.0;
  double se = 0.0;
  double mean_lower = 0.0;
  double min_gain = 0.0;
  bool flagged = false;
};

struct SearchResult {
  std::vector<CandidateResult> candidates;
  std::size_t best = 0;
  bool arbitrage_found = false;
};

struct SearchOptions {
  std::size_t n = 10000;
  double eps = 1e-9;
  double confidence = 0.999;
};

SearchResult arbitrage_search(const procgen::PathSource &source,
                              std::span<const Candidate> family,
                              const SearchOptions &opts);

// ---- reports ---------------------------------------------------------------------

nlohmann::json to_json(const Verdict &v);
nlohmann::json to_json(const ReachabilityReport &r);
nlohmann::json to_json(const SearchResult &r);

/// candidate,n_pos,n_neg,n_zero,lb_pos,lb_neg,class
void write_verdict_csv(std::ostream &out,
                       std::span<const std::pair<std::string, Verdict>> rows);
void write_search_csv(std::ostream &out, const SearchResult &r);

} // namespace noarb::detect
