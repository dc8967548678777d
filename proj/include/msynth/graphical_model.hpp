#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msynth/domain.hpp"
#include "msynth/junction_tree.hpp"
#include "msynth/mechanisms.hpp"

namespace msynth {

// Discrete log-linear model over a junction forest: one log-potential vector
// per forest clique, P(x) proportional to exp(sum of its clique potentials).
// Marginal queries run exact two-pass belief propagation; results are cached
// until the potentials change.
class GraphicalModel {
 public:
  GraphicalModel(Domain domain, JunctionTree tree, double total);

  const Domain& domain() const { return domain_; }
  const JunctionTree& tree() const { return tree_; }
  double total() const { return total_; }
  void set_total(double t);

  std::vector<std::vector<double>>& theta() { return theta_; }
  const std::vector<std::vector<double>>& theta() const { return theta_; }
  // Call after mutating theta so cached beliefs are recomputed.
  void invalidate() { calibrated_ = false; }

  // Normalized probability vector per forest clique (each sums to 1).
  const std::vector<std::vector<double>>& clique_probabilities() const;

  // Count-scale marginal (probabilities times total) for any clique of domain
  // attributes, via variable elimination over the forest; attributes in
  // different trees combine independently.
  std::vector<double> marginal(const Clique& c,
                               std::uint64_t cell_cap = kDefaultCellCap) const;

  std::string to_json_text() const;
  static GraphicalModel from_json_text(const std::string& text);
  void save(const std::string& path) const;
  static GraphicalModel load(const std::string& path);

 private:
  void calibrate() const;
  std::vector<double> component_marginal(int component,
                                         const Clique& target,
                                         std::uint64_t cell_cap) const;

  Domain domain_;
  JunctionTree tree_;
  double total_;
  std::vector<std::vector<double>> theta_;

  // Traversal orders and per-edge index maps, fixed at construction.
  std::vector<int> bfs_order_;
  std::vector<int> bfs_parent_;
  std::vector<int> parent_edge_;
  std::vector<std::vector<std::uint32_t>> edge_map_a_;
  std::vector<std::vector<std::uint32_t>> edge_map_b_;

  mutable bool calibrated_ = false;
  mutable std::vector<std::vector<double>> beliefs_;  // log space
  mutable std::vector<std::vector<double>> probs_;
};

struct SolverOptions {
  int iters = 2500;
  double step = 2.0;
  std::uint64_t cell_cap = kDefaultCellCap;
  // Stop early once the loss reaches this value (negative disables).
  double loss_stop = -1.0;
};

struct SolverDiagnostics {
  int iterations = 0;
  int halvings = 0;
  double final_loss = 0.0;
  double estimated_total = 0.0;
  bool stopped_early = false;
};

// Precision-weighted estimate of the record count from the log's identity
// measurements (sum of noisy values over the weight), clamped at zero.
double estimate_total(const MeasurementLog& log);

// Squared-residual loss of one measurement against a count-scale marginal of
// its clique, and its gradient with respect to that marginal.
double measurement_loss(const Measurement& m,
                        const std::vector<double>& count_marginal);
void add_measurement_gradient(const Measurement& m,
                              const std::vector<double>& count_marginal,
                              std::vector<double>& grad);

// Fits the maximum-likelihood model for the log: minimizes the summed
// measurement loss over distributions that factor over the measured cliques,
// by mirror descent on the clique potentials. Each iteration backtracks from
// the configured step (halving while the loss would increase), so the loss is
// non-increasing across iterations.
GraphicalModel estimate(const Domain& domain, const MeasurementLog& log,
                        const SolverOptions& options = {},
                        SolverDiagnostics* diagnostics = nullptr);

}  // namespace msynth
