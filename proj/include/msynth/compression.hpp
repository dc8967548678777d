#pragma once

#include <cstdint>
#include <vector>

#include "msynth/domain.hpp"
#include "msynth/mechanisms.hpp"
#include "msynth/rng.hpp"

namespace msynth {

// Per-attribute value relabeling with one reserved "other" cell collecting
// the merged originals. Kept values map injectively in original order; the
// reserve cell always exists, even with nothing merged into it.
struct AttributeMap {
  std::vector<std::int32_t> forward;  // original index -> compressed index
  std::int32_t other = 0;             // compressed index of the reserve cell
  std::vector<std::int32_t> merged;   // originals collapsed into the reserve
};

struct CompressionMap {
  std::vector<AttributeMap> attrs;  // one per original attribute
};

struct CompressionResult {
  Dataset data;
  Domain domain;
  CompressionMap map;
};

// Collapses every attribute value whose noisy one-way count falls below three
// noise standard deviations into the reserve cell, and rewrites the dataset
// and domain accordingly. The threshold compares the unweighted count, so the
// measurement weight cancels out.
CompressionResult compress_domain(const MeasurementLog& oneway_log,
                                  const Dataset& data, const Domain& domain);

// Rewrites another dataset over the same original domain (e.g. provisional
// data) through an existing map.
Dataset apply_compression(const Dataset& data, const CompressionMap& map);

// Re-expresses identity measurements taken on the original domain as
// aggregate measurements over the compressed cells: noisy values of merged
// cells sum, and each row remembers how many source cells fed it so the
// solver can equalize the inflated noise variance.
MeasurementLog reexpress_measurements(const MeasurementLog& log,
                                      const CompressionMap& map);

// Maps a compressed dataset back to original value indices. Kept values
// invert exactly; reserve-cell occurrences are split as evenly as possible
// over that attribute's merged originals, remainders placed by seeded
// shuffle. A reserve cell with no merged originals falls back to a uniform
// draw over the full original domain (with a warning).
Dataset decompress(const Dataset& data, const CompressionMap& map,
                   RngStream& rng);

}  // namespace msynth
