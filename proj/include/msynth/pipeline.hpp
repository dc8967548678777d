#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msynth/accountant.hpp"
#include "msynth/census.hpp"
#include "msynth/compression.hpp"
#include "msynth/domain.hpp"
#include "msynth/evaluation.hpp"
#include "msynth/graphical_model.hpp"
#include "msynth/selection.hpp"

namespace msynth {

struct PipelineConfig {
  std::string mode = "mst";  // "nist-mst" needs provisional data, "mst" none
  PrivacyParams params;
  std::uint64_t seed = 0;

  std::string domain_path;
  std::string data_path;
  std::string provisional_path;

  // Cliques by attribute name, resolved after any census transform.
  std::vector<std::vector<std::string>> special;

  std::uint64_t cell_cap = kDefaultCellCap;
  SolverOptions solver;
  bool census = false;
  CensusNames census_names;

  std::string out_data;      // synthetic records (empty: not written)
  std::string out_manifest;  // defaults next to out_data
  std::string out_report;

  int workload_threeway = 100;
  int workload_conjunctions = 100;

  void validate() const;
};

struct PipelineResult {
  // Synthetic records over the published schema (census codes reversed).
  Dataset synthetic;
  Domain synthetic_domain;

  RdpLedger ledger;
  SelectionResult selection;
  CompressionMap compression;
  SolverDiagnostics solver;
  ScoreReport report;
  std::string manifest_json;
};

PipelineResult run_nist_mst(const PipelineConfig& config);
PipelineResult run_mst(const PipelineConfig& config);

// Dispatches on config.mode.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace msynth
