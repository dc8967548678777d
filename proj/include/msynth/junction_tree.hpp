#pragma once

#include <cstdint>
#include <vector>

#include "msynth/domain.hpp"

namespace msynth {

// Clique forest produced by min-fill triangulation. Satisfies the running
// intersection property per connected component; disconnected attribute
// groups stay separate trees.
struct JunctionTree {
  std::vector<Clique> cliques;  // maximal cliques, lexicographic order
  struct Edge {
    int a = 0;
    int b = 0;
    Clique separator;
  };
  std::vector<Edge> edges;
  std::vector<int> component;             // per clique
  std::vector<std::vector<int>> neighbors;  // per clique, adjacent cliques
  std::vector<AttrId> elimination_order;  // min-fill order over all attributes
  std::vector<Clique> elim_parents;       // per attribute id

  // First clique containing every attribute of c, or -1.
  int find_containing(const Clique& c) const;
};

// Builds the junction forest over every attribute of the domain; attributes
// not covered by any input clique become singleton cliques. Throws
// TreewidthTooLarge when a triangulated clique's cell grid exceeds cell_cap.
JunctionTree build_junction_tree(const Domain& domain,
                                 const std::vector<Clique>& cliques,
                                 std::uint64_t cell_cap = kDefaultCellCap);

}  // namespace msynth
