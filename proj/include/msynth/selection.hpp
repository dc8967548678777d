#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "msynth/accountant.hpp"
#include "msynth/domain.hpp"
#include "msynth/mechanisms.hpp"
#include "msynth/rng.hpp"

namespace msynth {

// Symmetric edge weights over attribute ids [0, nodes); no self-loops.
// Absent edges are absent, not zero.
class WeightedGraph {
 public:
  explicit WeightedGraph(int nodes);

  int nodes() const { return nodes_; }
  void set(AttrId a, AttrId b, double w);
  void add(AttrId a, AttrId b, double delta);
  bool has(AttrId a, AttrId b) const;
  double weight(AttrId a, AttrId b) const;

  struct Edge {
    AttrId a;
    AttrId b;
    double weight;
  };
  std::vector<Edge> edges() const;  // lexicographic order

 private:
  std::pair<AttrId, AttrId> key(AttrId a, AttrId b) const;

  int nodes_;
  std::map<std::pair<AttrId, AttrId>, double> weights_;
};

// Empirical mutual information between two columns, in nats; 0 log 0 = 0.
double mutual_information(const Dataset& data, AttrId i, AttrId j);

// Kruskal with lexicographic tie-break; edges in selection order.
std::vector<std::pair<AttrId, AttrId>> maximum_spanning_tree(
    const WeightedGraph& graph);

// Marginal cliques chosen for measurement with their loss weights.
struct SelectionResult {
  std::vector<Clique> cliques;
  std::vector<double> weights;

  bool contains(const Clique& c) const;
};

// Loss weight of a boosted three-way clique at this privacy level.
double special_triple_weight(double epsilon);

// Splits the configured special cliques into pairs and triples; three pairs
// forming a triangle imply the triple. Sizes other than 2 or 3 reject.
struct SpecialSets {
  std::vector<Clique> pairs;
  std::vector<Clique> triples;
};
SpecialSets split_special(const std::vector<Clique>& special, int attr_count);

// Data-driven triangle augmentation of a spanning tree: for every pair of
// edges sharing a hub, scores how badly the tree alone explains the three-way
// marginal (normalized L1 gap to the tree-model estimate); per hub, keeps a
// maximum spanning forest of the neighbor graph over scores >= threshold and
// emits the closing pair plus the triangle for every kept edge.
std::vector<Clique> augment_triangles(
    const Dataset& data, const Domain& domain,
    const std::vector<std::pair<AttrId, AttrId>>& tree,
    double threshold = 0.1);

// Public-data selection: mutual-information MST with +100 boosts on pairs
// inside the special cliques, the special cliques themselves (plus triangles
// closed by special pairs), triangle augmentation, and a size cutoff. Weights:
// special triples by special_triple_weight, special pairs 2, the rest 1.
SelectionResult select_public(const Dataset& provisional, const Domain& domain,
                              const PrivacyParams& params,
                              const std::vector<Clique>& special,
                              double triangle_threshold = 0.1,
                              std::uint64_t cell_cap = kDefaultCellCap);

// Private selection of a spanning pair set by repeated exponential-mechanism
// draws over cross-component pairs, scored by how far each true two-way
// marginal sits from the one-way model's prediction. Consumes at most rho
// from the ledger (split evenly over the rounds); with one component the
// initial set returns unchanged at zero cost.
std::vector<Clique> select_private(const Dataset& data, const Domain& domain,
                                   const MeasurementLog& oneway_log,
                                   double rho,
                                   const std::vector<Clique>& initial,
                                   RngStream& rng, RdpLedger& ledger);

}  // namespace msynth
