#include "noarb/dmw.hpp"

#include "noarb/format.hpp"
#include "noarb/rng.hpp"

#include <boost/rational.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace noarb::dmw {

ScenarioTree::ScenarioTree(double root_price) {
  nodes_.push_back(Node{-1, 1.0, root_price, 0, {}});
}

std::size_t ScenarioTree::add_child(std::size_t parent, double prob, double price) {
  if (parent >= nodes_.size()) {
    throw DomainError("unknown parent node");
  }
  const std::size_t id = nodes_.size();
  nodes_.push_back(
      Node{static_cast<std::ptrdiff_t>(parent), prob, price, nodes_[parent].level + 1, {}});
  nodes_[parent].children.push_back(id);
  return id;
}

std::size_t ScenarioTree::depth() const {
  std::size_t d = 0;
  for (const auto &n : nodes_) {
    d = std::max(d, n.level);
  }
  return d;
}

void ScenarioTree::validate() const {
  if (nodes_.empty()) {
    throw DomainError("empty tree");
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto &n = nodes_[i];
    if (!std::isfinite(n.price)) {
      throw DomainError("non-finite price at node " + std::to_string(i));
    }
    if (n.children.empty()) {
      continue;
    }
    double sum = 0.0;
    for (const auto c : n.children) {
      if (!(nodes_[c].prob > 0.0)) {
        throw DomainError("non-positive branch probability at node " + std::to_string(c));
      }
      sum += nodes_[c].prob;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw DomainError("branch probabilities under node " + std::to_string(i) +
                        " do not sum to 1");
    }
  }
}

ScenarioTree ScenarioTree::map_prices(const std::function<double(double)> &f) const {
  ScenarioTree out = *this;
  for (auto &n : out.nodes_) {
    n.price = f(n.price);
  }
  return out;
}

bool operator==(const ScenarioTree &a, const ScenarioTree &b) {
  if (a.nodes_.size() != b.nodes_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
    const auto &x = a.nodes_[i];
    const auto &y = b.nodes_[i];
    if (x.parent != y.parent || x.prob != y.prob || x.price != y.price ||
        x.level != y.level || x.children != y.children) {
      return false;
    }
  }
  return true;
}

// ---- one-step problems ------------------------------------------------------------

namespace {

using Rational = boost::rational<long long>;

std::optional<Rational> as_small_rational(double x) {
  for (long long d = 1; d <= 64; ++d) {
    const double scaled = x * static_cast<double>(d);
    if (std::abs(scaled) < 1e12 && scaled == std::round(scaled)) {
      return Rational(static_cast<long long>(std::llround(scaled)), d);
    }
  }
  return std::nullopt;
}

double to_double(const Rational &r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

enum class Kind { interior, degenerate, arb_up, arb_down };

template <class T> struct Local {
  Kind kind;
  std::vector<T> q;
};

template <class T> Local<T> solve_node(const T &p, const std::vector<T> &c, const T &tol) {
  const std::size_t m = c.size();
  std::vector<std::size_t> below, above, equal;
  for (std::size_t k = 0; k < m; ++k) {
    if (c[k] < p - tol) {
      below.push_back(k);
    } else if (c[k] > p + tol) {
      above.push_back(k);
    } else {
      equal.push_back(k);
    }
  }
  Local<T> out{Kind::interior, std::vector<T>(m, T(0))};
  if (below.empty() && above.empty()) {
    out.kind = Kind::degenerate;
    for (auto &q : out.q) {
      q = T(1) / T(static_cast<long long>(m));
    }
    return out;
  }
  if (below.empty()) {
    out.kind = Kind::arb_up;
    return out;
  }
  if (above.empty()) {
    out.kind = Kind::arb_down;
    return out;
  }
  // average of every two-point martingale measure plus point masses at p
  for (const auto i : below) {
    for (const auto j : above) {
      const T span = c[j] - c[i];
      out.q[i] += (c[j] - p) / span;
      out.q[j] += (p - c[i]) / span;
    }
  }
  for (const auto k : equal) {
    out.q[k] += T(1);
  }
  const T atoms = T(static_cast<long long>(below.size() * above.size() + equal.size()));
  for (auto &q : out.q) {
    q /= atoms;
  }
  return out;
}

struct NodeResult {
  Kind kind;
  std::vector<double> q;
};

NodeResult solve_node(double p, const std::vector<double> &c) {
  std::vector<Rational> rc;
  const auto rp = as_small_rational(p);
  bool exact = rp.has_value();
  for (std::size_t k = 0; exact && k < c.size(); ++k) {
    const auto r = as_small_rational(c[k]);
    exact = r.has_value();
    if (exact) {
      rc.push_back(*r);
    }
  }
  NodeResult out;
  if (exact) {
    const auto local = solve_node<Rational>(*rp, rc, Rational(0));
    out.kind = local.kind;
    for (const auto &q : local.q) {
      out.q.push_back(to_double(q));
    }
    return out;
  }
  const double tol = kBoundaryTol * std::max(1.0, std::abs(p));
  auto local = solve_node<double>(p, c, tol);
  out.kind = local.kind;
  out.q = std::move(local.q);
  return out;
}

} // namespace

Certificate solve_tree(const ScenarioTree &tree) {
  tree.validate();
  const auto &nodes = tree.nodes();
  MartingaleCertificate mart{std::vector<double>(nodes.size(), 0.0)};
  mart.q[0] = 1.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto &n = nodes[i];
    if (n.children.empty()) {
      continue;
    }
    std::vector<double> prices;
    for (const auto c : n.children) {
      prices.push_back(nodes[c].price);
    }
    const NodeResult local = solve_node(n.price, prices);
    if (local.kind == Kind::arb_up || local.kind == Kind::arb_down) {
      ArbitrageCertificate arb{std::vector<double>(nodes.size(), 0.0)};
      arb.f[i] = local.kind == Kind::arb_up ? 1.0 : -1.0;
      return arb;
    }
    for (std::size_t k = 0; k < n.children.size(); ++k) {
      mart.q[n.children[k]] = local.q[k];
    }
  }
  return mart;
}

namespace {

double price_tol(double p) { return kBoundaryTol * std::max(1.0, std::abs(p)); }

bool verify_martingale(const ScenarioTree &tree, const MartingaleCertificate &cert) {
  const auto &nodes = tree.nodes();
  if (cert.q.size() != nodes.size()) {
    throw ShapeMismatch("martingale certificate size does not match the tree");
  }
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto &n = nodes[i];
    if (n.children.empty()) {
      continue;
    }
    double mass = 0.0, mean = 0.0;
    for (const auto c : n.children) {
      const double q = cert.q[c];
      if (!(q >= kMinWeight) || !std::isfinite(q)) {
        return false;
      }
      mass += q;
      mean += q * nodes[c].price;
    }
    if (std::abs(mass - 1.0) > kBoundaryTol) {
      return false;
    }
    if (std::abs(mean - n.price) > price_tol(n.price)) {
      return false;
    }
  }
  return true;
}

bool verify_arbitrage(const ScenarioTree &tree, const ArbitrageCertificate &cert) {
  const auto &nodes = tree.nodes();
  if (cert.f.size() != nodes.size()) {
    throw ShapeMismatch("arbitrage certificate size does not match the tree");
  }
  // terminal gains (f . S)_N along every root-to-leaf path
  std::vector<double> wealth(nodes.size(), 0.0);
  double scale = 0.0;
  for (const auto &n : nodes) {
    scale = std::max(scale, std::abs(n.price));
  }
  const double tol = kBoundaryTol * std::max(1.0, scale);
  bool any_positive = false;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto &n = nodes[i];
    if (!std::isfinite(cert.f[i])) {
      return false;
    }
    if (n.children.empty()) {
      if (wealth[i] < -tol) {
        return false;
      }
      any_positive = any_positive || wealth[i] > tol;
      continue;
    }
    for (const auto c : n.children) {
      if (c <= i) {
        throw ShapeMismatch("tree nodes are not in topological order");
      }
      wealth[c] = wealth[i] + cert.f[i] * (nodes[c].price - n.price);
    }
  }
  return any_positive;
}

} // namespace

bool verify_certificate(const ScenarioTree &tree, const Certificate &cert) {
  tree.validate();
  return std::visit(
      [&](const auto &c) {
        if constexpr (std::is_same_v<std::decay_t<decltype(c)>, MartingaleCertificate>) {
          return verify_martingale(tree, c);
        } else {
          return verify_arbitrage(tree, c);
        }
      },
      cert);
}

bool brute_force_has_arbitrage(const ScenarioTree &tree) {
  const auto &nodes = tree.nodes();
  for (const auto &n : nodes) {
    if (n.children.empty()) {
      continue;
    }
    bool all_exact = as_small_rational(n.price).has_value();
    for (const auto c : n.children) {
      all_exact = all_exact && as_small_rational(nodes[c].price).has_value();
    }
    const double tol = all_exact ? 0.0 : price_tol(n.price);
    for (const double f : {1.0, -1.0}) {
      bool nonneg = true, positive = false;
      for (const auto c : n.children) {
        const double g = f * (nodes[c].price - n.price);
        nonneg = nonneg && g >= -tol;
        positive = positive || g > tol;
      }
      if (nonneg && positive) {
        return true;
      }
    }
  }
  return false;
}

ScenarioTree random_tree(std::uint64_t seed, std::size_t max_periods,
                         std::size_t max_children) {
  if (max_periods < 1 || max_children < 1) {
    throw DomainError("random_tree needs at least one period and one child");
  }
  Engine engine(mix_seed(seed));
  std::uniform_int_distribution<std::size_t> periods(1, max_periods);
  std::uniform_int_distribution<std::size_t> fanout(1, max_children);
  std::uniform_int_distribution<int> step(-3, 3);
  std::uniform_real_distribution<double> weight(0.1, 1.0);
  const std::size_t depth = periods(engine);
  ScenarioTree tree(0.0);
  std::vector<std::size_t> frontier{0};
  for (std::size_t level = 0; level < depth; ++level) {
    std::vector<std::size_t> next;
    for (const auto parent : frontier) {
      const std::size_t m = fanout(engine);
      std::vector<double> w(m);
      for (auto &x : w) {
        x = weight(engine);
      }
      const double total = std::accumulate(w.begin(), w.end(), 0.0);
      const double p = tree.node(parent).price;
      for (std::size_t k = 0; k < m; ++k) {
        next.push_back(tree.add_child(parent, w[k] / total, p + 0.25 * step(engine)));
      }
    }
    frontier = std::move(next);
  }
  return tree;
}

namespace {

/// Equal-frequency groups of `idx` sorted by value; ties never straddle groups.
std::vector<std::vector<std::size_t>> quantile_groups(std::vector<std::size_t> idx,
                                                      const std::vector<double> &value,
                                                      std::size_t bins) {
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
  std::vector<std::vector<std::size_t>> groups;
  const std::size_t n = idx.size();
  std::size_t start = 0;
  for (std::size_t b = 1; b <= bins && start < n; ++b) {
    std::size_t end = b == bins ? n : std::max(start + 1, b * n / bins);
    while (end < n && value[idx[end]] == value[idx[end - 1]]) {
      ++end;
    }
    if (end > start) {
      groups.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(start),
                          idx.begin() + static_cast<std::ptrdiff_t>(end));
    }
    start = end;
  }
  return groups;
}

} // namespace

ScenarioTree sample_chain_tree(const procgen::PathSource &source,
                               std::span<const strategy::StoppingRule> rules,
                               std::size_t paths, std::size_t bins) {
  if (bins < 2) {
    throw DomainError("sample_chain_tree needs at least two bins");
  }
  if (rules.empty()) {
    throw DomainError("sample_chain_tree needs at least one stopping rule");
  }
  const std::size_t m = rules.size();
  std::vector<std::vector<double>> chain(m, std::vector<double>(paths));
  for (std::size_t k = 0; k < paths; ++k) {
    const PathBundle bundle = source(k);
    std::size_t last = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t s = strategy::evaluate_stop(rules[j], bundle);
      if (j > 0 && s < last) {
        throw DomainError("stopping rules are not ordered on scenario " +
                          std::to_string(k));
      }
      last = s;
      chain[j][k] = bundle.front()[s];
    }
  }
  const std::size_t needed = 10 * bins;
  const auto mean_of = [](const std::vector<std::size_t> &idx,
                          const std::vector<double> &v) {
    double s = 0.0;
    for (const auto i : idx) {
      s += v[i];
    }
    return s / static_cast<double>(idx.size());
  };
  std::vector<std::size_t> all(paths);
  std::iota(all.begin(), all.end(), 0);
  if (paths < needed) {
    throw DomainError("sample_chain_tree: " + std::to_string(paths) +
                      " paths at the root, need at least " + std::to_string(needed));
  }
  ScenarioTree tree(mean_of(all, chain[0]));
  struct Pending {
    std::size_t node;
    std::vector<std::size_t> members;
  };
  std::vector<Pending> frontier{{0, all}};
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<Pending> next;
    for (auto &p : frontier) {
      if (p.members.size() < needed) {
        throw DomainError("sample_chain_tree: node at level " + std::to_string(j) +
                          " holds " + std::to_string(p.members.size()) +
                          " paths, need at least " + std::to_string(needed) +
                          "; increase paths roughly by a factor of " +
                          std::to_string(needed / std::max<std::size_t>(1, p.members.size()) + 1));
      }
      const double total = static_cast<double>(p.members.size());
      for (auto &g : quantile_groups(p.members, chain[j], bins)) {
        const double prob = static_cast<double>(g.size()) / total;
        const std::size_t id = tree.add_child(p.node, prob, mean_of(g, chain[j]));
        next.push_back({id, std::move(g)});
      }
    }
    frontier = std::move(next);
  }
  return tree;
}

// ---- serialization -----------------------------------------------------------------

nlohmann::json to_json(const ScenarioTree &tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto &n : tree.nodes()) {
    nodes.push_back({{"parent", n.parent}, {"prob", n.prob}, {"price", n.price}});
  }
  return {{"nodes", nodes}};
}

ScenarioTree tree_from_json(const nlohmann::json &j) {
  const auto &nodes = j.at("nodes");
  if (nodes.empty() || nodes[0].at("parent").get<long long>() != -1) {
    throw DomainError("tree JSON must start with a root node");
  }
  ScenarioTree tree(nodes[0].at("price").get<double>());
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const auto parent = nodes[i].at("parent").get<long long>();
    if (parent < 0 || static_cast<std::size_t>(parent) >= i) {
      throw DomainError("tree JSON parents must precede their children");
    }
    tree.add_child(static_cast<std::size_t>(parent), nodes[i].at("prob").get<double>(),
                   nodes[i].at("price").get<double>());
  }
  return tree;
}

nlohmann::json to_json(const Certificate &cert) {
  if (const auto *m = std::get_if<MartingaleCertificate>(&cert)) {
    return {{"type", "martingale"}, {"q", m->q}};
  }
  return {{"type", "arbitrage"}, {"f", std::get<ArbitrageCertificate>(cert).f}};
}

Certificate certificate_from_json(const nlohmann::json &j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "martingale") {
    return MartingaleCertificate{j.at("q").get<std::vector<double>>()};
  }
  if (type == "arbitrage") {
    return ArbitrageCertificate{j.at("f").get<std::vector<double>>()};
  }
  throw DomainError("unknown certificate type '" + type + "'");
}

void write_residual_csv(std::ostream &out, const ScenarioTree &tree,
                        const MartingaleCertificate &cert) {
  if (cert.q.size() != tree.size()) {
    throw ShapeMismatch("martingale certificate size does not match the tree");
  }
  out << "node,level,price,expected_child_price,residual\n";
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const auto &n = tree.node(i);
    if (n.children.empty()) {
      continue;
    }
    double e = 0.0;
    for (const auto c : n.children) {
      e += cert.q[c] * tree.node(c).price;
    }
    out << i << ',' << n.level << ',' << fmt12(n.price) << ',' << fmt12(e) << ','
        << fmt12(e - n.price) << '\n';
  }
}

} // namespace noarb::dmw
