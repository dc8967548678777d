#pragma once

#include <string>
#include <vector>

#include "msynth/domain.hpp"
#include "msynth/rng.hpp"

namespace msynth {

// Attribute names the census preprocessing operates on; the derived split
// attributes take the income name plus "_A" / "_B" suffixes.
struct CensusNames {
  std::string valueh = "VALUEH";
  std::string incwage = "INCWAGE";
};

struct TransformResult {
  Dataset data;
  Domain domain;
};

// Buckets the home-value attribute into 0..5002 and splits income into a
// coarse bucket (0..51) plus a trailing-digit class (0..7). Labels of both
// source attributes must parse as nonnegative integers.
TransformResult census_transform(const Dataset& data, const Domain& domain,
                                 const CensusNames& names = {});

// The eight trailing-digit residue classes partitioning {0..99}: class k
// holds the values divisible by the k-th modulus (100, 20, 50, 25, 10, 5, 2,
// 1) and by none of the earlier ones.
const std::vector<std::vector<int>>& incwage_digit_classes();

// Uniform draw from digit class k.
int incwage_b_to_digits(int k, RngStream& rng);

// Inverts the bucketing: home values scale back by 5 (with the two sentinel
// codes restored) and income becomes 100 * bucket + a sampled digit from the
// stored class.
TransformResult census_reverse(const Dataset& data, const Domain& domain,
                               RngStream& rng, const CensusNames& names = {});

}  // namespace msynth
