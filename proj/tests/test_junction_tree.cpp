#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "msynth/errors.hpp"
#include "msynth/junction_tree.hpp"

using namespace msynth;

namespace {

// Every input clique must land inside some tree clique.
void check_covers(const JunctionTree& jt, const std::vector<Clique>& input) {
  for (const auto& c : input) {
    int k = jt.find_containing(c);
    REQUIRE(k >= 0);
    CHECK(jt.cliques[k].contains(c));
  }
}

// Running intersection: for every attribute, the tree cliques containing it
// form a connected subgraph of the junction forest.
void check_running_intersection(const JunctionTree& jt, int attr_count) {
  int n = static_cast<int>(jt.cliques.size());
  for (AttrId a = 0; a < attr_count; ++a) {
    std::vector<int> holding;
    for (int k = 0; k < n; ++k)
      if (jt.cliques[k].contains(a)) holding.push_back(k);
    if (holding.empty()) continue;
    // BFS from the first holder along edges whose both ends hold `a`.
    std::set<int> seen{holding[0]};
    std::vector<int> queue{holding[0]};
    while (!queue.empty()) {
      int k = queue.back();
      queue.pop_back();
      for (const auto& e : jt.edges) {
        int other = -1;
        if (e.a == k) other = e.b;
        if (e.b == k) other = e.a;
        if (other < 0 || seen.count(other)) continue;
        if (jt.cliques[other].contains(a) && jt.cliques[k].contains(a)) {
          seen.insert(other);
          queue.push_back(other);
        }
      }
    }
    for (int k : holding) CHECK(seen.count(k) == 1);
  }
}

// Edges must form a forest: per component, edges = cliques - 1.
void check_forest(const JunctionTree& jt) {
  int comps = 0;
  for (int c : jt.component) comps = std::max(comps, c + 1);
  CHECK(jt.edges.size() + static_cast<std::size_t>(comps) ==
        jt.cliques.size());
  for (const auto& e : jt.edges) {
    CHECK(jt.component[e.a] == jt.component[e.b]);
    CHECK(e.separator ==
          jt.cliques[e.a].set_intersection(jt.cliques[e.b]));
  }
}

}  // namespace

TEST_CASE("chain of pairs yields the pairs themselves") {
  Domain d;
  for (int i = 0; i < 5; ++i) d.add("V" + std::to_string(i), 2);
  std::vector<Clique> input = {Clique({0, 1}), Clique({1, 2}), Clique({2, 3}),
                               Clique({3, 4})};
  auto jt = build_junction_tree(d, input);
  CHECK(jt.cliques.size() == 4);
  check_covers(jt, input);
  check_running_intersection(jt, 5);
  check_forest(jt);
  for (const auto& c : jt.cliques) CHECK(c.size() == 2);
}

TEST_CASE("four-cycle triangulates into two triangles") {
  Domain d;
  for (int i = 0; i < 4; ++i) d.add("V" + std::to_string(i), 2);
  std::vector<Clique> input = {Clique({0, 1}), Clique({1, 2}), Clique({2, 3}),
                               Clique({0, 3})};
  auto jt = build_junction_tree(d, input);
  CHECK(jt.cliques.size() == 2);
  for (const auto& c : jt.cliques) CHECK(c.size() == 3);
  check_covers(jt, input);
  check_running_intersection(jt, 4);
  check_forest(jt);
}

TEST_CASE("uncovered attributes become singleton cliques") {
  Domain d;
  for (int i = 0; i < 4; ++i) d.add("V" + std::to_string(i), 3);
  auto jt = build_junction_tree(d, {Clique({0, 1})});
  CHECK(jt.cliques.size() == 3);  // {0,1}, {2}, {3}
  check_covers(jt, {Clique({0, 1}), Clique({2}), Clique({3})});
  check_forest(jt);
  // Three separate components.
  std::set<int> comps(jt.component.begin(), jt.component.end());
  CHECK(comps.size() == 3);
  CHECK(jt.edges.empty());
}

TEST_CASE("cliques come out in lexicographic order with no containment") {
  std::mt19937_64 gen(404);
  for (int rep = 0; rep < 100; ++rep) {
    int attrs = 3 + static_cast<int>(gen() % 5);
    Domain d = fixtures::random_domain(attrs, 3, gen);
    std::vector<Clique> input;
    int m = 1 + static_cast<int>(gen() % 5);
    for (int i = 0; i < m; ++i) {
      std::vector<AttrId> ids;
      for (int a = 0; a < attrs; ++a)
        if (gen() % 3 == 0) ids.push_back(a);
      if (ids.empty()) ids.push_back(static_cast<AttrId>(gen() % attrs));
      input.emplace_back(ids);
    }
    auto jt = build_junction_tree(d, input);
    CHECK(std::is_sorted(jt.cliques.begin(), jt.cliques.end()));
    for (std::size_t i = 0; i < jt.cliques.size(); ++i)
      for (std::size_t j = 0; j < jt.cliques.size(); ++j)
        if (i != j) CHECK(!jt.cliques[i].contains(jt.cliques[j]));
    check_covers(jt, input);
    check_running_intersection(jt, attrs);
    check_forest(jt);
  }
}

TEST_CASE("triangulation is deterministic") {
  std::mt19937_64 gen(505);
  Domain d = fixtures::random_domain(6, 3, gen);
  std::vector<Clique> input = {Clique({0, 2}), Clique({2, 4}), Clique({4, 5}),
                               Clique({1, 3}), Clique({0, 5})};
  auto a = build_junction_tree(d, input);
  auto b = build_junction_tree(d, input);
  REQUIRE(a.cliques.size() == b.cliques.size());
  for (std::size_t i = 0; i < a.cliques.size(); ++i)
    CHECK(a.cliques[i] == b.cliques[i]);
  CHECK(a.elimination_order == b.elimination_order);
}

TEST_CASE("oversized triangulated cliques are rejected") {
  Domain d;
  for (int i = 0; i < 3; ++i) d.add("V" + std::to_string(i), 100);
  CHECK_THROWS_AS(build_junction_tree(d, {Clique({0, 1, 2})}, 1000),
                  TreewidthTooLarge);
  CHECK_NOTHROW(build_junction_tree(d, {Clique({0, 1})}, 10000));
}

TEST_CASE("find_containing locates sub-cliques or reports absence") {
  Domain d;
  for (int i = 0; i < 4; ++i) d.add("V" + std::to_string(i), 2);
  auto jt = build_junction_tree(d, {Clique({0, 1, 2}), Clique({2, 3})});
  CHECK(jt.find_containing(Clique({0, 2})) >= 0);
  CHECK(jt.find_containing(Clique({1})) >= 0);
  int k = jt.find_containing(Clique({0, 3}));
  CHECK(k == -1);
}
