// Shared worked example: a 1000-record three-attribute survey table with two
// noisy pairwise measurements at sigma=50, plus the published fitted model
// tables used as regression targets.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "msynth/domain.hpp"
#include "msynth/mechanisms.hpp"

namespace fixtures {

// Attribute order SEX{M,F}, LABFORCE{---,N,Y}, SCHOOL{N,Y}; all tables are
// row-major with the later attribute fastest.
inline msynth::Domain survey_domain() {
  msynth::Domain d;
  d.add("SEX", {"M", "F"});
  d.add("LABFORCE", {"---", "N", "Y"});
  d.add("SCHOOL", {"N", "Y"});
  return d;
}

inline constexpr std::array<int, 12> kJoint = {74, 82,  36, 29, 313, 3,
                                               85, 73, 252, 30,  23, 0};

inline constexpr std::array<double, 6> kTrueSexLab = {156, 65, 316,
                                                      158, 282, 23};
inline constexpr std::array<double, 6> kTrueLabSchool = {159, 155, 288,
                                                         59,  336, 3};
inline constexpr std::array<double, 4> kTrueSexSchool = {423, 114, 360, 103};

inline constexpr std::array<double, 6> kNoisySexLab = {
    132.428, 124.549, 244.365, 173.633, 318.029, -21.358};
inline constexpr std::array<double, 6> kNoisyLabSchool = {
    116.021, 186.826, 287.215, 171.134, 278.498, -46.497};

inline constexpr std::array<double, 6> kFitSexLab = {124.829, 121.696, 254.636,
                                                     166.034, 315.177, 0};
inline constexpr std::array<double, 6> kFitLabSchool = {
    110.029, 180.834, 276.477, 160.396, 254.636, 0};
inline constexpr std::array<double, 4> kFitSexSchool = {378.873, 122.289,
                                                        262.269, 218.942};
inline constexpr std::array<double, 12> kFitJoint = {
    47.221, 77.608, 77.016,  44.68,   254.636, 0,
    62.808, 103.226, 199.461, 115.716, 0,       0};
inline constexpr std::array<double, 3> kFitLab = {290.863, 436.873, 254.636};

// Closed-form optimum of the consistency projection for the noisy tables
// above under the precision-weighted total (971.646 + 993.197)/2 = 982.4215.
// Active set: the two negative cells pin at zero; each LABFORCE group then
// carries one shared mass across both cliques, split evenly among its free
// cells.  The reference kFit tables sit 0.05 lower in total (they sum to
// 982.372), which shifts each LABFORCE mass by 0.01-0.02; per-cell both
// solutions agree within 0.011.
inline constexpr double kOptTotal = 982.4215;
inline constexpr std::array<double, 6> kOptSexLab = {
    124.839, 121.70625, 254.646, 166.044, 315.18625, 0};
inline constexpr std::array<double, 6> kOptLabSchool = {
    110.039, 180.844, 276.48675, 160.40575, 254.646, 0};
inline constexpr std::array<double, 3> kOptLab = {290.883, 436.8925, 254.646};
inline constexpr double kOptLoss = 1862.929839625;

inline constexpr double kMeasureSigma = 50.0;

inline msynth::Dataset survey_dataset() {
  msynth::Dataset data(3, 1000);
  std::size_t row = 0;
  for (int s = 0; s < 2; ++s)
    for (int l = 0; l < 3; ++l)
      for (int c = 0; c < 2; ++c)
        for (int k = 0; k < kJoint[(s * 3 + l) * 2 + c]; ++k) {
          data.set_value(row, 0, s);
          data.set_value(row, 1, l);
          data.set_value(row, 2, c);
          ++row;
        }
  return data;
}

// Builds an identity measurement whose stored values are weight times the
// count-scale table, matching how the measuring mechanism records releases.
inline msynth::Measurement make_measurement(std::vector<msynth::AttrId> attrs,
                                            const double* table,
                                            std::size_t cells, double weight,
                                            double sigma) {
  msynth::Measurement m;
  m.clique = msynth::Clique(std::move(attrs));
  m.kind = msynth::TransformKind::identity;
  m.weight = weight;
  m.sigma = sigma;
  m.noisy_values.assign(table, table + cells);
  for (double& v : m.noisy_values) v *= weight;
  return m;
}

// The two-measurement log the fitted tables came from: both pairs at
// sigma=50 with equal weights of unit joint L2 norm.
inline msynth::MeasurementLog survey_log() {
  const double w = 1.0 / std::sqrt(2.0);
  msynth::MeasurementLog log;
  log.append(
      make_measurement({0, 1}, kNoisySexLab.data(), 6, w, kMeasureSigma));
  log.append(
      make_measurement({1, 2}, kNoisyLabSchool.data(), 6, w, kMeasureSigma));
  return log;
}

// Random discrete dataset for property tests; values drawn i.i.d. per column
// from a random categorical so columns show mild dependence via shared seeds.
inline msynth::Dataset random_dataset(const msynth::Domain& domain,
                                      std::size_t rows,
                                      std::mt19937_64& gen) {
  msynth::Dataset data(domain.attr_count(), rows);
  for (std::size_t a = 0; a < domain.attr_count(); ++a) {
    std::uniform_int_distribution<int> pick(
        0, static_cast<int>(domain.size(static_cast<int>(a))) - 1);
    for (std::size_t r = 0; r < rows; ++r)
      data.set_value(r, static_cast<int>(a), pick(gen));
  }
  return data;
}

inline msynth::Domain random_domain(int attrs, int max_size,
                                    std::mt19937_64& gen) {
  std::uniform_int_distribution<int> size(2, max_size);
  msynth::Domain d;
  for (int a = 0; a < attrs; ++a)
    d.add("V" + std::to_string(a), static_cast<std::size_t>(size(gen)));
  return d;
}

}  // namespace fixtures
