#include "msynth/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "msynth/errors.hpp"
#include "msynth/generation.hpp"

namespace msynth {

namespace {

nlohmann::ordered_json clique_names(const Clique& c, const Domain& domain) {
  auto names = nlohmann::ordered_json::array();
  for (AttrId a : c.attrs()) names.push_back(domain.attribute(a).name);
  return names;
}

// Largest noise scale whose single-invocation cost stays within the budget.
double sigma_for_rho(double budget) {
  double sigma = std::sqrt(1.0 / (2.0 * budget));
  while (gaussian_rho(sigma, 1.0) > budget)
    sigma = std::nextafter(sigma, std::numeric_limits<double>::infinity());
  return sigma;
}

struct RunOutput {
  PipelineResult result;
  Domain work_domain;  // schema the selection and compression refer to
  double sigma = 0.0;
  double rho = 0.0;  // mst only
};

RunOutput run_common(const PipelineConfig& config, bool nist) {
  config.validate();
  Domain original_domain = Domain::load(config.domain_path);
  Dataset original_data = Dataset::load_csv(config.data_path, original_domain);
  RngStream master(config.seed);

  Domain work_domain = original_domain;
  Dataset work_data = original_data;
  if (config.census) {
    auto t = census_transform(original_data, original_domain,
                              config.census_names);
    work_data = std::move(t.data);
    work_domain = std::move(t.domain);
  }
  const int d = static_cast<int>(work_domain.attr_count());

  std::vector<Clique> special;
  for (const auto& names : config.special)
    special.push_back(work_domain.clique_of(names));
  SpecialSets specials = split_special(special, d);

  RdpLedger ledger;
  double sigma, rho = 0.0, select_budget = 0.0;
  if (nist) {
    sigma = calibrate_sigma(config.params, 2);
  } else {
    // Equal three-way split; the last share absorbs the rounding so the
    // three budgets sum to rho bit-for-bit.
    rho = calibrate_rho(config.params);
    double share = rho / 3.0;
    double last = rho - 2.0 * share;
    select_budget = share;
    sigma = sigma_for_rho(std::min(share, last));
  }

  std::vector<Clique> oneways;
  std::vector<double> oneway_weights;
  const std::string boosted_name = config.census_names.incwage + "_A";
  for (AttrId a = 0; a < d; ++a) {
    oneways.push_back(Clique({a}));
    bool boosted =
        nist && config.census && work_domain.attribute(a).name == boosted_name;
    oneway_weights.push_back(boosted ? 2.0 : 1.0);
  }
  MeasureOptions mopts;
  mopts.sigma = sigma;
  mopts.cell_cap = config.cell_cap;
  RngStream rng1 = master.derive("measure-1");
  auto log1 = measure_marginals(work_data, work_domain, oneways,
                                oneway_weights, mopts, rng1, ledger);
  log1.set_seed_record(config.seed, "measure-1");

  auto comp = compress_domain(log1, work_data, work_domain);
  auto log1c = reexpress_measurements(log1, comp.map);

  SelectionResult selection;
  if (nist) {
    Dataset provisional =
        Dataset::load_csv(config.provisional_path, original_domain);
    if (config.census)
      provisional =
          census_transform(provisional, original_domain, config.census_names)
              .data;
    Dataset provisional_c = apply_compression(provisional, comp.map);
    selection = select_public(provisional_c, comp.domain, config.params,
                              special, 0.1, config.cell_cap);
  } else {
    RngStream rng_sel = master.derive("select");
    auto pairs = select_private(comp.data, comp.domain, log1c, select_budget,
                                specials.pairs, rng_sel, ledger);
    std::set<Clique> chosen(pairs.begin(), pairs.end());
    chosen.insert(specials.triples.begin(), specials.triples.end());
    std::set<Clique> pair_set(specials.pairs.begin(), specials.pairs.end());
    std::set<Clique> triple_set(specials.triples.begin(),
                                specials.triples.end());
    for (const auto& c : chosen) {
      if (comp.domain.cells(c) >= config.cell_cap) continue;
      double w = 1.0;
      if (triple_set.count(c))
        w = special_triple_weight(config.params.epsilon);
      else if (pair_set.count(c))
        w = 2.0;
      selection.cliques.push_back(c);
      selection.weights.push_back(w);
    }
  }

  MeasurementLog combined;
  combined.set_seed_record(config.seed, "measure-1+measure-2");
  for (const auto& m : log1c.items()) combined.append(m);
  if (!selection.cliques.empty()) {
    RngStream rng2 = master.derive("measure-2");
    auto log2 = measure_marginals(comp.data, comp.domain, selection.cliques,
                                  selection.weights, mopts, rng2, ledger);
    for (const auto& m : log2.items()) combined.append(m);
  }

  SolverOptions solver = config.solver;
  solver.cell_cap = config.cell_cap;
  SolverDiagnostics diag;
  auto model = estimate(comp.domain, combined, solver, &diag);

  RngStream rng_synth = master.derive("synth");
  Dataset synth_comp = synth_data(model, rng_synth);
  RngStream rng_dec = master.derive("decompress");
  Dataset synth_work = decompress(synth_comp, comp.map, rng_dec);

  Dataset published = synth_work;
  Domain published_domain = work_domain;
  if (config.census) {
    RngStream rng_rev = master.derive("reverse");
    auto rev =
        census_reverse(synth_work, work_domain, rng_rev, config.census_names);
    published = std::move(rev.data);
    published_domain = std::move(rev.domain);
  }

  // Score on the working schema, where truth and synthetic records are
  // encoded identically; oversized cliques are skipped rather than scored.
  RngStream rng_wl = master.derive("workload");
  Workload workload;
  workload.seed = config.seed;
  double triples_available =
      static_cast<double>(d) * (d - 1) * (d - 2) / 6.0;
  int want = static_cast<int>(
      std::min<double>(config.workload_threeway, triples_available));
  if (d >= 3 && want > 0) {
    auto cliques = random_3way_workload(work_domain, want, rng_wl);
    for (const auto& c : cliques)
      if (work_domain.cells(c) < config.cell_cap)
        workload.threeway.push_back(c);
  }
  if (config.workload_conjunctions > 0) {
    auto queries = random_conjunction_workload(
        work_domain, config.workload_conjunctions, 0.1, rng_wl);
    for (auto& q : queries)
      if (work_domain.cells(q.clique) < config.cell_cap)
        workload.conjunctions.push_back(std::move(q));
  }
  for (const auto& c : specials.triples)
    if (work_domain.cells(c) < config.cell_cap)
      workload.designated.push_back(c);

  RunOutput out;
  out.sigma = sigma;
  out.rho = rho;
  out.result.report =
      evaluate(work_data, synth_work, work_domain, workload, config.cell_cap);
  out.work_domain = work_domain;
  out.result.synthetic = std::move(published);
  out.result.synthetic_domain = std::move(published_domain);
  out.result.ledger = ledger;
  out.result.selection = std::move(selection);
  out.result.compression = std::move(comp.map);
  out.result.solver = diag;
  return out;
}

std::string build_manifest(const PipelineConfig& config, const RunOutput& run) {
  const Domain& work_domain = run.work_domain;
  nlohmann::ordered_json j;
  auto& cfg = j["config"];
  cfg["mode"] = config.mode;
  cfg["epsilon"] = config.params.epsilon;
  cfg["delta"] = config.params.delta;
  cfg["seed"] = config.seed;
  cfg["domain"] = config.domain_path;
  cfg["data"] = config.data_path;
  if (!config.provisional_path.empty())
    cfg["provisional"] = config.provisional_path;
  cfg["census_transforms"] = config.census;
  cfg["cell_cap"] = config.cell_cap;
  cfg["iters"] = config.solver.iters;
  cfg["step"] = config.solver.step;
  auto specials = nlohmann::ordered_json::array();
  for (const auto& names : config.special) specials.push_back(names);
  cfg["special"] = specials;

  auto& privacy = j["privacy"];
  privacy["requested_epsilon"] = config.params.epsilon;
  privacy["delta"] = config.params.delta;
  privacy["sigma"] = run.sigma;
  if (config.mode == "mst") privacy["rho"] = run.rho;
  auto entries = nlohmann::ordered_json::array();
  for (const auto& e : run.result.ledger.entries()) {
    nlohmann::ordered_json ej;
    ej["label"] = e.label;
    ej["rho"] = e.rho;
    entries.push_back(ej);
  }
  privacy["ledger"] = entries;
  privacy["total_rho"] = run.result.ledger.total_rho();
  privacy["epsilon"] = run.result.ledger.epsilon_at(config.params.delta);

  auto sel = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < run.result.selection.cliques.size(); ++i) {
    nlohmann::ordered_json e;
    e["attrs"] = clique_names(run.result.selection.cliques[i], work_domain);
    e["weight"] = run.result.selection.weights[i];
    sel.push_back(e);
  }
  j["selection"] = sel;

  auto cmp = nlohmann::ordered_json::array();
  for (std::size_t a = 0; a < run.result.compression.attrs.size(); ++a) {
    const auto& am = run.result.compression.attrs[a];
    nlohmann::ordered_json e;
    e["attr"] = work_domain.attribute(static_cast<AttrId>(a)).name;
    e["kept"] = am.other;
    auto merged = nlohmann::ordered_json::array();
    for (std::int32_t t : am.merged)
      merged.push_back(
          work_domain.attribute(static_cast<AttrId>(a)).labels[t]);
    e["merged"] = merged;
    cmp.push_back(e);
  }
  j["compression"] = cmp;

  auto& sv = j["solver"];
  sv["iterations"] = run.result.solver.iterations;
  sv["halvings"] = run.result.solver.halvings;
  sv["final_loss"] = run.result.solver.final_loss;
  sv["estimated_total"] = run.result.solver.estimated_total;
  sv["stopped_early"] = run.result.solver.stopped_early;

  auto& sc = j["scores"];
  sc["threeway_mean"] = run.result.report.threeway_mean;
  sc["threeway_count"] = run.result.report.threeway_errors.size();
  sc["conjunction_mean"] = run.result.report.conjunction_mean;
  sc["conjunction_count"] = run.result.report.conjunction_errors.size();
  sc["designated_mean"] = run.result.report.designated_mean;
  sc["designated_count"] = run.result.report.designated_errors.size();
  return j.dump(2);
}

void write_outputs(const PipelineConfig& config, PipelineResult& result) {
  if (!config.out_data.empty())
    result.synthetic.save_csv(config.out_data, result.synthetic_domain);
  std::string manifest_path = config.out_manifest;
  if (manifest_path.empty() && !config.out_data.empty())
    manifest_path = config.out_data + ".manifest.json";
  if (!manifest_path.empty()) {
    std::ofstream out(manifest_path);
    if (!out) throw ParseError("cannot write " + manifest_path);
    out << result.manifest_json;
  }
  std::string report_path = config.out_report;
  if (report_path.empty() && !config.out_data.empty())
    report_path = config.out_data + ".report.json";
  if (!report_path.empty()) result.report.save(report_path);
}

PipelineResult run_mode(const PipelineConfig& config, bool nist) {
  RunOutput run = run_common(config, nist);
  run.result.manifest_json = build_manifest(config, run);
  write_outputs(config, run.result);
  return std::move(run.result);
}

}  // namespace

void PipelineConfig::validate() const {
  params.validate();
  if (mode != "mst" && mode != "nist-mst")
    throw BadConfig("mode must be 'mst' or 'nist-mst', got '" + mode + "'");
  if (mode == "nist-mst" && provisional_path.empty())
    throw BadConfig("nist-mst mode needs a provisional dataset");
  if (mode == "mst" && !provisional_path.empty())
    throw BadConfig("mst mode takes no provisional dataset");
  if (domain_path.empty()) throw BadConfig("domain path is required");
  if (data_path.empty()) throw BadConfig("data path is required");
  if (workload_threeway < 0 || workload_conjunctions < 0)
    throw BadConfig("workload sizes must be nonnegative");
}

PipelineResult run_nist_mst(const PipelineConfig& config) {
  if (config.mode != "nist-mst")
    throw BadConfig("config mode is not nist-mst");
  return run_mode(config, true);
}

PipelineResult run_mst(const PipelineConfig& config) {
  if (config.mode != "mst") throw BadConfig("config mode is not mst");
  return run_mode(config, false);
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  config.validate();
  return config.mode == "nist-mst" ? run_nist_mst(config) : run_mst(config);
}

}  // namespace msynth
