#include "msynth/junction_tree.hpp"

#include <algorithm>
#include <numeric>

#include "msynth/errors.hpp"

namespace msynth {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent[b] = a;  // keep the smaller root for deterministic labels
    return true;
  }
};

}  // namespace

int JunctionTree::find_containing(const Clique& c) const {
  for (std::size_t i = 0; i < cliques.size(); ++i)
    if (cliques[i].contains(c)) return static_cast<int>(i);
  return -1;
}

JunctionTree build_junction_tree(const Domain& domain,
                                 const std::vector<Clique>& cliques,
                                 std::uint64_t cell_cap) {
  const int n = static_cast<int>(domain.attr_count());
  if (n == 0) throw EmptyDomain("no attributes");
  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  for (const auto& c : cliques) {
    const auto& a = c.attrs();
    for (AttrId x : a)
      if (x >= n) throw UnknownAttribute("clique attribute " +
                                         std::to_string(x));
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = i + 1; j < a.size(); ++j)
        adj[a[i]][a[j]] = adj[a[j]][a[i]] = 1;
  }

  // Min-fill elimination; ties go to the lowest attribute index.
  JunctionTree jt;
  std::vector<char> eliminated(n, 0);
  std::vector<Clique> elim_cliques;
  jt.elim_parents.resize(n);
  for (int round = 0; round < n; ++round) {
    int best = -1;
    long long best_fill = -1;
    for (int v = 0; v < n; ++v) {
      if (eliminated[v]) continue;
      long long fill = 0;
      std::vector<int> nb;
      for (int u = 0; u < n; ++u)
        if (!eliminated[u] && adj[v][u]) nb.push_back(u);
      for (std::size_t i = 0; i < nb.size(); ++i)
        for (std::size_t j = i + 1; j < nb.size(); ++j)
          if (!adj[nb[i]][nb[j]]) ++fill;
      if (best == -1 || fill < best_fill) {
        best = v;
        best_fill = fill;
      }
    }
    std::vector<int> nb;
    for (int u = 0; u < n; ++u)
      if (!eliminated[u] && adj[best][u]) nb.push_back(u);
    for (std::size_t i = 0; i < nb.size(); ++i)
      for (std::size_t j = i + 1; j < nb.size(); ++j)
        adj[nb[i]][nb[j]] = adj[nb[j]][nb[i]] = 1;
    eliminated[best] = 1;
    jt.elimination_order.push_back(best);
    std::vector<AttrId> parents(nb.begin(), nb.end());
    jt.elim_parents[best] = Clique(parents);
    std::vector<AttrId> cl = parents;
    cl.push_back(best);
    elim_cliques.push_back(Clique(std::move(cl)));
  }

  // Keep maximal elimination cliques only.
  std::vector<Clique> maximal;
  for (const auto& c : elim_cliques) {
    bool contained = false;
    for (const auto& other : elim_cliques)
      if (other != c && other.contains(c) &&
          other.attrs().size() > c.attrs().size()) {
        contained = true;
        break;
      }
    if (!contained) maximal.push_back(c);
  }
  std::sort(maximal.begin(), maximal.end());
  maximal.erase(std::unique(maximal.begin(), maximal.end()), maximal.end());
  jt.cliques = std::move(maximal);

  for (const auto& c : jt.cliques)
    if (domain.cells(c) > cell_cap)
      throw TreewidthTooLarge("triangulated clique has " +
                              std::to_string(domain.cells(c)) +
                              " cells, cap " + std::to_string(cell_cap));

  // Max-separator spanning forest (Kruskal, deterministic tie order).
  const int m = static_cast<int>(jt.cliques.size());
  struct Cand {
    std::size_t sep;
    int a, b;
  };
  std::vector<Cand> cands;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      Clique sep = jt.cliques[i].set_intersection(jt.cliques[j]);
      if (sep.size() > 0)
        cands.push_back(Cand{sep.size(), i, j});
    }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.sep != y.sep) return x.sep > y.sep;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });
  UnionFind uf(m);
  jt.neighbors.assign(m, {});
  for (const auto& c : cands) {
    if (!uf.unite(c.a, c.b)) continue;
    JunctionTree::Edge e;
    e.a = c.a;
    e.b = c.b;
    e.separator = jt.cliques[c.a].set_intersection(jt.cliques[c.b]);
    jt.neighbors[c.a].push_back(c.b);
    jt.neighbors[c.b].push_back(c.a);
    jt.edges.push_back(std::move(e));
  }
  jt.component.resize(m);
  std::vector<int> root_label(m, -1);
  int next = 0;
  for (int i = 0; i < m; ++i) {
    int r = uf.find(i);
    if (root_label[r] == -1) root_label[r] = next++;
    jt.component[i] = root_label[r];
  }
  return jt;
}

}  // namespace msynth
