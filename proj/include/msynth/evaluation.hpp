#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msynth/domain.hpp"
#include "msynth/rng.hpp"

namespace msynth {

// Probability that a record lands in given value subsets across a clique.
struct ConjunctionQuery {
  Clique clique;
  std::vector<std::vector<int>> subsets;  // parallel to clique attributes
};

// Error workload: random three-way marginals, random high-order
// conjunctions, and any designated marginals scored separately.
struct Workload {
  std::vector<Clique> threeway;
  std::vector<ConjunctionQuery> conjunctions;
  std::vector<Clique> designated;
  std::optional<std::uint64_t> seed;

  std::string to_json_text(const Domain& domain) const;
  static Workload from_json_text(const std::string& text,
                                 const Domain& domain);
  void save(const std::string& path, const Domain& domain) const;
  static Workload load(const std::string& path, const Domain& domain);
};

struct ScoreReport {
  std::vector<double> threeway_errors;
  std::vector<double> conjunction_errors;
  std::vector<double> designated_errors;
  std::optional<std::uint64_t> seed;

  double threeway_mean = 0.0;
  double conjunction_mean = 0.0;
  double designated_mean = 0.0;

  std::string to_json_text() const;
  void save(const std::string& path) const;
};

// Total count of records whose values fall inside every subset.
double conjunction_count(const Dataset& data, const Domain& domain,
                         const ConjunctionQuery& q,
                         std::uint64_t cell_cap = kDefaultCellCap);

// count distinct uniform attribute triples.
std::vector<Clique> random_3way_workload(const Domain& domain, int count,
                                         RngStream& rng);

// Each attribute joins a query independently with attr_prob (redrawn while
// empty); each subset is a uniform nonempty subset of the value range.
std::vector<ConjunctionQuery> random_conjunction_workload(const Domain& domain,
                                                          int count,
                                                          double attr_prob,
                                                          RngStream& rng);

// Normalized L1 errors between the two datasets on every workload entry:
// marginals compare as frequency vectors, conjunctions as single
// probabilities. Both datasets must be encoded over the same domain.
ScoreReport evaluate(const Dataset& truth, const Dataset& synth,
                     const Domain& domain, const Workload& workload,
                     std::uint64_t cell_cap = kDefaultCellCap);

}  // namespace msynth
