#include "msynth/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <unordered_map>

#include "msynth/errors.hpp"
#include "msynth/graphical_model.hpp"

namespace msynth {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent[b] = a;
    return true;
  }
};

Clique pair_clique(AttrId a, AttrId b) { return Clique({a, b}); }

// Largest c with k*c <= budget such that k*c and all partial sums j*c are
// exact in doubles (low mantissa bits cleared). Keeps repeated equal charges
// from drifting past the budget in the ledger sum.
double exact_share(double budget, int k) {
  double c = budget / k;
  if (k == 1) return budget;
  if (k >= 4096 || !(c > 0.0)) return c;
  std::uint64_t bits;
  std::memcpy(&bits, &c, sizeof bits);
  bits &= ~0xFFFULL;
  std::memcpy(&c, &bits, sizeof c);
  while (c > 0.0 && c * k > budget) {
    bits -= 0x1000ULL;
    std::memcpy(&c, &bits, sizeof c);
  }
  return c;
}

}  // namespace

WeightedGraph::WeightedGraph(int nodes) : nodes_(nodes) {
  if (nodes < 0) throw NonPositiveParameter("node count must be >= 0");
}

std::pair<AttrId, AttrId> WeightedGraph::key(AttrId a, AttrId b) const {
  if (a == b) throw SameAttribute("self-loop on attribute " +
                                  std::to_string(a));
  if (a < 0 || b < 0 || a >= nodes_ || b >= nodes_)
    throw UnknownAttribute("edge endpoint out of range");
  return {std::min(a, b), std::max(a, b)};
}

void WeightedGraph::set(AttrId a, AttrId b, double w) { weights_[key(a, b)] = w; }

void WeightedGraph::add(AttrId a, AttrId b, double delta) {
  weights_[key(a, b)] += delta;
}

bool WeightedGraph::has(AttrId a, AttrId b) const {
  return weights_.count(key(a, b)) > 0;
}

double WeightedGraph::weight(AttrId a, AttrId b) const {
  auto it = weights_.find(key(a, b));
  if (it == weights_.end())
    throw UnknownAttribute("no edge (" + std::to_string(a) + ", " +
                           std::to_string(b) + ")");
  return it->second;
}

std::vector<WeightedGraph::Edge> WeightedGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(weights_.size());
  for (const auto& [k, w] : weights_) out.push_back({k.first, k.second, w});
  return out;
}

double mutual_information(const Dataset& data, AttrId i, AttrId j) {
  if (i == j) throw SameAttribute("mutual information of an attribute with itself");
  if (i < 0 || j < 0 || i >= static_cast<AttrId>(data.attr_count()) ||
      j >= static_cast<AttrId>(data.attr_count()))
    throw UnknownAttribute("attribute out of range");
  const std::size_t m = data.rows();
  if (m == 0) return 0.0;
  std::unordered_map<std::uint64_t, std::size_t> joint;
  std::unordered_map<std::int32_t, std::size_t> left, right;
  const auto& ci = data.column(i);
  const auto& cj = data.column(j);
  for (std::size_t r = 0; r < m; ++r) {
    std::uint64_t k = (static_cast<std::uint64_t>(
                           static_cast<std::uint32_t>(ci[r]))
                       << 32) |
                      static_cast<std::uint32_t>(cj[r]);
    ++joint[k];
    ++left[ci[r]];
    ++right[cj[r]];
  }
  double mi = 0.0;
  const double dm = static_cast<double>(m);
  for (const auto& [k, n] : joint) {
    std::int32_t a = static_cast<std::int32_t>(k >> 32);
    std::int32_t b = static_cast<std::int32_t>(k & 0xFFFFFFFFULL);
    double p = n / dm;
    mi += p * std::log(n * dm /
                       (static_cast<double>(left[a]) * right[b]));
  }
  return std::max(0.0, mi);
}

std::vector<std::pair<AttrId, AttrId>> maximum_spanning_tree(
    const WeightedGraph& graph) {
  auto edges = graph.edges();
  std::stable_sort(edges.begin(), edges.end(),
                   [](const WeightedGraph::Edge& x, const WeightedGraph::Edge& y) {
                     if (x.weight != y.weight) return x.weight > y.weight;
                     if (x.a != y.a) return x.a < y.a;
                     return x.b < y.b;
                   });
  UnionFind uf(graph.nodes());
  std::vector<std::pair<AttrId, AttrId>> out;
  for (const auto& e : edges)
    if (uf.unite(e.a, e.b)) out.push_back({e.a, e.b});
  if (graph.nodes() > 0 &&
      out.size() + 1 != static_cast<std::size_t>(graph.nodes()))
    throw Disconnected("graph has no spanning tree");
  return out;
}

bool SelectionResult::contains(const Clique& c) const {
  return std::find(cliques.begin(), cliques.end(), c) != cliques.end();
}

double special_triple_weight(double epsilon) {
  if (epsilon <= 0.3) return 8.0;
  if (epsilon >= 4.0) return 4.0;
  return 6.0;
}

std::vector<Clique> augment_triangles(
    const Dataset& data, const Domain& domain,
    const std::vector<std::pair<AttrId, AttrId>>& tree, double threshold) {
  const int d = static_cast<int>(domain.attr_count());
  std::vector<std::vector<AttrId>> nbrs(d);
  for (const auto& [a, b] : tree) {
    nbrs[a].push_back(b);
    nbrs[b].push_back(a);
  }
  const double m = static_cast<double>(data.rows());
  std::vector<Clique> out;
  if (m == 0.0) return out;

  for (AttrId hub = 0; hub < d; ++hub) {
    auto& around = nbrs[hub];
    if (around.size() < 2) continue;
    std::sort(around.begin(), around.end());

    // Score each pair of hub neighbors by how much the two tree edges alone
    // underfit the full three-way marginal.
    WeightedGraph scores(d);
    for (std::size_t x = 0; x < around.size(); ++x) {
      for (std::size_t y = x + 1; y < around.size(); ++y) {
        AttrId j = around[x], k = around[y];
        RdpLedger scratch;
        RngStream noiseless(0);
        MeasureOptions opts;
        opts.zero_noise = true;
        auto log = measure_marginals(
            data, domain, {pair_clique(hub, j), pair_clique(hub, k)}, {},
            opts, noiseless, scratch);
        SolverOptions solver;
        solver.loss_stop = 1e-10;
        auto model = estimate(domain, log, solver);
        Clique triple = pair_clique(hub, j).set_union(Clique({k}));
        auto fitted = model.marginal(triple);
        auto actual = marginal(data, domain, triple);
        double gap = 0.0;
        for (std::size_t t = 0; t < actual.size(); ++t)
          gap += std::abs(actual[t] - fitted[t]);
        double e = gap / m;
        if (e >= threshold) scores.set(j, k, e);
      }
    }

    // Maximum spanning forest of the retained neighbor edges.
    auto edges = scores.edges();
    std::stable_sort(edges.begin(), edges.end(),
                     [](const WeightedGraph::Edge& x,
                        const WeightedGraph::Edge& y) {
                       if (x.weight != y.weight) return x.weight > y.weight;
                       if (x.a != y.a) return x.a < y.a;
                       return x.b < y.b;
                     });
    UnionFind uf(d);
    for (const auto& e : edges) {
      if (!uf.unite(e.a, e.b)) continue;
      out.push_back(pair_clique(e.a, e.b));
      out.push_back(pair_clique(e.a, e.b).set_union(Clique({hub})));
    }
  }
  return out;
}

SpecialSets split_special(const std::vector<Clique>& special, int attr_count) {
  std::set<Clique> pairs, triples;
  for (const auto& c : special) {
    for (AttrId a : c.attrs())
      if (a < 0 || a >= attr_count)
        throw UnknownAttribute("special clique attribute");
    if (c.size() == 2)
      pairs.insert(c);
    else if (c.size() == 3)
      triples.insert(c);
    else
      throw BadConfig("special cliques must have 2 or 3 attributes");
  }
  // Three special pairs forming a triangle imply the boosted triple.
  for (const auto& p : pairs) {
    for (const auto& q : pairs) {
      if (!(p < q) || !p.intersects(q)) continue;
      Clique tri = p.set_union(q);
      if (tri.size() != 3) continue;
      bool closed = true;
      for (std::size_t x = 0; x < 3 && closed; ++x)
        for (std::size_t y = x + 1; y < 3; ++y)
          if (!pairs.count(pair_clique(tri.attrs()[x], tri.attrs()[y]))) {
            closed = false;
            break;
          }
      if (closed) triples.insert(tri);
    }
  }
  SpecialSets out;
  out.pairs.assign(pairs.begin(), pairs.end());
  out.triples.assign(triples.begin(), triples.end());
  return out;
}

SelectionResult select_public(const Dataset& provisional, const Domain& domain,
                              const PrivacyParams& params,
                              const std::vector<Clique>& special,
                              double triangle_threshold,
                              std::uint64_t cell_cap) {
  params.validate();
  if (provisional.rows() == 0)
    throw EmptyDataset("selection needs a provisional dataset");
  const int d = static_cast<int>(domain.attr_count());
  if (provisional.attr_count() != static_cast<std::size_t>(d))
    throw DomainMismatch("provisional data does not match the domain");

  SpecialSets sets = split_special(special, d);
  std::set<Clique> special_pairs(sets.pairs.begin(), sets.pairs.end());
  std::set<Clique> special_triples(sets.triples.begin(), sets.triples.end());

  WeightedGraph graph(d);
  for (AttrId i = 0; i < d; ++i)
    for (AttrId j = i + 1; j < d; ++j)
      graph.set(i, j, mutual_information(provisional, i, j));
  std::set<Clique> boosted;
  for (const auto& c : special) {
    const auto& a = c.attrs();
    for (std::size_t x = 0; x < a.size(); ++x)
      for (std::size_t y = x + 1; y < a.size(); ++y)
        boosted.insert(pair_clique(a[x], a[y]));
  }
  for (const auto& p : boosted) graph.add(p.attrs()[0], p.attrs()[1], 100.0);

  auto tree = maximum_spanning_tree(graph);

  std::set<Clique> chosen;
  for (const auto& [a, b] : tree) chosen.insert(pair_clique(a, b));
  chosen.insert(special_pairs.begin(), special_pairs.end());
  chosen.insert(special_triples.begin(), special_triples.end());
  for (const auto& c :
       augment_triangles(provisional, domain, tree, triangle_threshold))
    chosen.insert(c);

  SelectionResult result;
  for (const auto& c : chosen) {
    if (domain.cells(c) >= cell_cap) continue;  // too large to measure
    double w = 1.0;
    if (special_triples.count(c))
      w = special_triple_weight(params.epsilon);
    else if (special_pairs.count(c))
      w = 2.0;
    result.cliques.push_back(c);
    result.weights.push_back(w);
  }
  return result;
}

std::vector<Clique> select_private(const Dataset& data, const Domain& domain,
                                   const MeasurementLog& oneway_log,
                                   double rho,
                                   const std::vector<Clique>& initial,
                                   RngStream& rng, RdpLedger& ledger) {
  if (!(rho > 0.0)) throw NonPositiveParameter("selection budget must be > 0");
  const int d = static_cast<int>(domain.attr_count());
  for (AttrId a = 0; a < d; ++a) {
    bool found = false;
    for (const auto& m : oneway_log.items())
      if (m.clique == Clique({a})) {
        found = true;
        break;
      }
    if (!found)
      throw MissingOneWay("no one-way measurement for attribute " +
                          domain.attribute(a).name);
  }
  UnionFind uf(d);
  std::vector<Clique> result;
  for (const auto& c : initial) {
    if (c.size() != 2)
      throw BadConfig("initial selection entries must be attribute pairs");
    for (AttrId a : c.attrs())
      if (a < 0 || a >= d) throw UnknownAttribute("initial pair attribute");
    uf.unite(c.attrs()[0], c.attrs()[1]);
    result.push_back(c);
  }
  int components = 0;
  for (int i = 0; i < d; ++i)
    if (uf.find(i) == i) ++components;
  if (components <= 1) return result;  // already spanning, no budget spent

  // Score every pair by the distance between its true marginal and the
  // independent prediction from the one-way model.
  auto model = estimate(domain, oneway_log, SolverOptions{});
  std::vector<std::vector<double>> q(d, std::vector<double>(d, 0.0));
  for (AttrId i = 0; i < d; ++i) {
    for (AttrId j = i + 1; j < d; ++j) {
      auto predicted = model.marginal(pair_clique(i, j));
      auto actual = marginal(data, domain, pair_clique(i, j));
      double l1 = 0.0;
      for (std::size_t t = 0; t < actual.size(); ++t)
        l1 += std::abs(actual[t] - predicted[t]);
      q[i][j] = l1;
    }
  }

  const int rounds = components - 1;
  const double share = exact_share(rho, rounds);
  double eps_step = std::sqrt(2.0 * share);
  while (eps_step > 0.0 && exponential_rho(eps_step, 1.0) > share)
    eps_step = std::nextafter(eps_step, 0.0);

  for (int round = 0; round < rounds; ++round) {
    std::vector<std::pair<AttrId, AttrId>> candidates;
    std::vector<double> scores;
    for (AttrId i = 0; i < d; ++i) {
      for (AttrId j = i + 1; j < d; ++j) {
        if (uf.find(i) == uf.find(j)) continue;
        candidates.push_back({i, j});
        scores.push_back(q[i][j]);
      }
    }
    std::size_t pick = exponential_mechanism(scores, eps_step, 1.0, rng, ledger);
    auto [a, b] = candidates[pick];
    uf.unite(a, b);
    result.push_back(pair_clique(a, b));
  }
  return result;
}

}  // namespace msynth
