#pragma once

#include "noarb/procgen.hpp"
#include "noarb/strategy.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <variant>
#include <vector>

namespace noarb::dmw {

struct Node {
  std::ptrdiff_t parent = -1;
  double prob = 1.0; // branch probability from the parent
  double price = 0.0;
  std::size_t level = 0;
  std::vector<std::size_t> children;
};

/// Finite filtration as a tree; node 0 is the root.
class ScenarioTree {
public:
  ScenarioTree() = default;
  explicit ScenarioTree(double root_price);

  std::size_t add_child(std::size_t parent, double prob, double price);

  const std::vector<Node> &nodes() const { return nodes_; }
  const Node &node(std::size_t i) const { return nodes_.at(i); }
  std::size_t size() const { return nodes_.size(); }
  std::size_t depth() const;
  bool is_leaf(std::size_t i) const { return nodes_.at(i).children.empty(); }

  /// Throws DomainError unless sibling probabilities are > 0 and sum to 1.
  void validate() const;

  ScenarioTree map_prices(const std::function<double(double)> &f) const;

  friend bool operator==(const ScenarioTree &a, const ScenarioTree &b);

private:
  std::vector<Node> nodes_;
};

/// q[i] is the replacement branch weight into node i (q[0] = 1).
struct MartingaleCertificate {
  std::vector<double> q;
};

/// f[i] is the position held over the step from node i to its children
/// (zero at leaves).
struct ArbitrageCertificate {
  std::vector<double> f;
};

using Certificate = std::variant<MartingaleCertificate, ArbitrageCertificate>;

inline bool is_martingale(const Certificate &c) {
  return std::holds_alternative<MartingaleCertificate>(c);
}

constexpr double kBoundaryTol = 1e-9;
constexpr double kMinWeight = 1e-12;

Certificate solve_tree(const ScenarioTree &tree);

class ShapeMismatch : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

bool verify_certificate(const ScenarioTree &tree, const Certificate &cert);

/// Independent oracle: enumerate f in {+1, -1} at every node and test
/// one-step dominance directly.
bool brute_force_has_arbitrage(const ScenarioTree &tree);

/// Random tree with 1..max_periods periods and 1..max_children children per
/// node; child prices sit on a quarter grid around the parent so that boundary
/// and degenerate nodes are common.
ScenarioTree random_tree(std::uint64_t seed, std::size_t max_periods = 3,
                         std::size_t max_children = 3);

/// Equal-frequency quantisation of the chain X_{tau_1}, ..., X_{tau_m}
/// (source path 0). The root carries the sample mean of X_{tau_1}.
ScenarioTree sample_chain_tree(const procgen::PathSource &source,
                               std::span<const strategy::StoppingRule> rules,
                               std::size_t paths, std::size_t bins);

// ---- serialization -----------------------------------------------------------------

nlohmann::json to_json(const ScenarioTree &tree);
ScenarioTree tree_from_json(const nlohmann::json &j);
nlohmann::json to_json(const Certificate &cert);
Certificate certificate_from_json(const nlohmann::json &j);

/// node,level,price,expected_child_price,residual under a martingale certificate.
void write_residual_csv(std::ostream &out, const ScenarioTree &tree,
                        const MartingaleCertificate &cert);

} // namespace noarb::dmw
