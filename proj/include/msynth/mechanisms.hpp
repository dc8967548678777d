#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msynth/accountant.hpp"
#include "msynth/domain.hpp"
#include "msynth/rng.hpp"

namespace msynth {

enum class TransformKind { identity, aggregate };

// One row of an aggregate transform: the predicted value is
// weight / sqrt(source_count) * marginal[cell], observed against the sum of
// the source cells' noisy values (variance source_count * sigma^2, equalized
// by the 1/sqrt(source_count) row scale).
struct AggregateRow {
  std::size_t cell = 0;
  std::size_t source_count = 1;
};

struct Measurement {
  Clique clique;
  TransformKind kind = TransformKind::identity;
  double weight = 1.0;
  double sigma = 0.0;
  std::vector<double> noisy_values;
  std::vector<AggregateRow> rows;  // aggregate only, parallel to noisy_values

  std::size_t value_count() const { return noisy_values.size(); }
};

// Ordered record of every noisy query answered against the private data.
class MeasurementLog {
 public:
  void append(Measurement m) { items_.push_back(std::move(m)); }
  const std::vector<Measurement>& items() const { return items_; }
  std::vector<Measurement>& items() { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  void set_seed_record(std::uint64_t seed, std::string stream);
  std::optional<std::uint64_t> seed() const { return seed_; }
  const std::string& stream() const { return stream_; }

  // Newline-delimited JSON, one measurement per line; attribute names resolve
  // against the domain on load.
  std::string to_ndjson(const Domain& domain) const;
  static MeasurementLog from_ndjson(const std::string& text,
                                    const Domain& domain);
  void save(const std::string& path, const Domain& domain) const;
  static MeasurementLog load(const std::string& path, const Domain& domain);

 private:
  std::vector<Measurement> items_;
  std::optional<std::uint64_t> seed_;
  std::string stream_;
};

struct MeasureOptions {
  double sigma = 1.0;
  std::uint64_t cell_cap = kDefaultCellCap;
  // Test hook: skip noise injection while keeping weights, log shape, and
  // ledger accounting identical.
  bool zero_noise = false;
};

// Measures the cliques' marginals in one Gaussian release. Weights are
// normalized to unit L2 norm so the whole weighted collection has L2
// sensitivity 1; the ledger gains exactly one entry of gaussian_rho(sigma, 1).
// An empty weight vector means equal weights.
MeasurementLog measure_marginals(const Dataset& data, const Domain& domain,
                                 const std::vector<Clique>& cliques,
                                 std::vector<double> weights,
                                 const MeasureOptions& options, RngStream& rng,
                                 RdpLedger& ledger);

// Samples an index with probability proportional to exp(eps_step * score).
// Charges exponential_rho(eps_step, sens) to the ledger.
std::size_t exponential_mechanism(const std::vector<double>& scores,
                                  double eps_step, double sens, RngStream& rng,
                                  RdpLedger& ledger);

}  // namespace msynth
