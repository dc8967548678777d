#pragma once

#include <cstdint>
#include <vector>

#include "msynth/domain.hpp"
#include "msynth/graphical_model.hpp"
#include "msynth/rng.hpp"

namespace msynth {

// Rounds a nonnegative expected-count vector into an integer value column of
// length n: floor(mu_t) copies of each value, the remaining slots drawn
// without replacement proportional to the fractional remainders, then a
// shuffle. Every count lands within 1 of mu_t whenever n matches sum(mu).
std::vector<std::int32_t> synth_column(const std::vector<double>& mu,
                                       std::size_t n, RngStream& rng);

// Materializes n records from the model, one attribute at a time in a
// junction-tree pre-order so each attribute's already-generated neighbors
// always sit inside a single clique. Groups rows by those neighbors and fills
// each group with synth_column on the model's conditional expected counts.
Dataset synth_data(const GraphicalModel& model, std::size_t n, RngStream& rng);

// Record count defaults to the model's estimated total, rounded.
Dataset synth_data(const GraphicalModel& model, RngStream& rng);

}  // namespace msynth
