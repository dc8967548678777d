// Command-line front end: full pipeline runs plus standalone tools for the
// individual stages (measure, select, estimate, synth, evaluate, inspect-log).

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "msynth/accountant.hpp"
#include "msynth/domain.hpp"
#include "msynth/errors.hpp"
#include "msynth/evaluation.hpp"
#include "msynth/generation.hpp"
#include "msynth/graphical_model.hpp"
#include "msynth/mechanisms.hpp"
#include "msynth/pipeline.hpp"
#include "msynth/rng.hpp"
#include "msynth/selection.hpp"

namespace {

using namespace msynth;

std::vector<std::string> split_names(const std::string& list) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : list) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::vector<std::string>> split_special(
    const std::vector<std::string>& flags) {
  std::vector<std::vector<std::string>> out;
  out.reserve(flags.size());
  for (const auto& f : flags) out.push_back(split_names(f));
  return out;
}

std::vector<Clique> resolve_cliques(const Domain& domain,
                                    const std::vector<std::string>& flags) {
  std::vector<Clique> out;
  out.reserve(flags.size());
  for (const auto& f : flags) out.push_back(domain.clique_of(split_names(f)));
  return out;
}

std::string clique_names(const Domain& domain, const Clique& c) {
  std::string s;
  for (AttrId a : c.attrs()) {
    if (!s.empty()) s += ',';
    s += domain.attribute(a).name;
  }
  return s;
}

void write_text(const std::string& path, const std::string& text) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw ParseError("cannot write " + path);
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
}

struct RunArgs {
  PipelineConfig config;
  std::vector<std::string> special;
};

void cmd_run(RunArgs& a) {
  a.config.special = split_special(a.special);
  if (a.config.out_manifest.empty() && !a.config.out_data.empty())
    a.config.out_manifest = a.config.out_data + ".manifest.json";
  if (a.config.out_report.empty() && !a.config.out_data.empty())
    a.config.out_report = a.config.out_data + ".report.json";
  PipelineResult result = run_pipeline(a.config);
  std::printf("rows: %zu\n", result.synthetic.rows());
  std::printf("rho spent: %.17g\n", result.ledger.total_rho());
  std::printf("epsilon spent: %.17g (requested %.17g)\n",
              result.ledger.epsilon_at(a.config.params.delta),
              a.config.params.epsilon);
  std::printf("threeway error mean: %.6f\n", result.report.threeway_mean);
  std::printf("conjunction error mean: %.6f\n", result.report.conjunction_mean);
  if (!result.report.designated_errors.empty())
    std::printf("designated error mean: %.6f\n",
                result.report.designated_mean);
  if (!a.config.out_data.empty()) {
    std::printf("wrote %s\n", a.config.out_data.c_str());
    std::printf("wrote %s\n", a.config.out_manifest.c_str());
    std::printf("wrote %s\n", a.config.out_report.c_str());
  }
}

struct MeasureArgs {
  std::string domain_path, data_path, out_path;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t cell_cap = kDefaultCellCap;
  std::vector<std::string> cliques;
  std::vector<double> weights;
};

void cmd_measure(MeasureArgs& a) {
  Domain domain = Domain::load(a.domain_path);
  Dataset data = Dataset::load_csv(a.data_path, domain);
  std::vector<Clique> cliques = resolve_cliques(domain, a.cliques);
  if (cliques.empty())
    for (std::size_t i = 0; i < domain.attr_count(); ++i)
      cliques.emplace_back(std::vector<AttrId>{static_cast<AttrId>(i)});
  MeasureOptions opts;
  opts.sigma = a.sigma;
  opts.cell_cap = a.cell_cap;
  RngStream master(a.seed);
  RngStream rng = master.derive("measure");
  RdpLedger ledger;
  MeasurementLog log =
      measure_marginals(data, domain, cliques, a.weights, opts, rng, ledger);
  log.set_seed_record(a.seed, "measure");
  log.save(a.out_path, domain);
  std::printf("measured %zu cliques, sigma %.17g, rho %.17g\n", cliques.size(),
              a.sigma, ledger.total_rho());
  std::printf("wrote %s\n", a.out_path.c_str());
}

struct SelectArgs {
  std::string domain_path, data_path, out_path;
  double epsilon = 1.0;
  double delta = 2.2e-12;
  double triangle_threshold = 0.1;
  std::uint64_t cell_cap = kDefaultCellCap;
  std::vector<std::string> special;
};

void cmd_select(SelectArgs& a) {
  Domain domain = Domain::load(a.domain_path);
  Dataset data = Dataset::load_csv(a.data_path, domain);
  std::vector<Clique> special = resolve_cliques(domain, a.special);
  PrivacyParams params{a.epsilon, a.delta};
  SelectionResult sel = select_public(data, domain, params, special,
                                      a.triangle_threshold, a.cell_cap);
  nlohmann::ordered_json doc;
  doc["cliques"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < sel.cliques.size(); ++i) {
    nlohmann::ordered_json entry;
    entry["attrs"] = nlohmann::ordered_json::array();
    for (AttrId at : sel.cliques[i].attrs())
      entry["attrs"].push_back(domain.attribute(at).name);
    entry["weight"] = sel.weights[i];
    doc["cliques"].push_back(std::move(entry));
  }
  for (std::size_t i = 0; i < sel.cliques.size(); ++i)
    std::printf("%s  weight %.6g\n",
                clique_names(domain, sel.cliques[i]).c_str(), sel.weights[i]);
  if (!a.out_path.empty()) {
    write_text(a.out_path, doc.dump(2) + "\n");
    std::printf("wrote %s\n", a.out_path.c_str());
  }
}

struct EstimateArgs {
  std::string domain_path, log_path, out_path;
  SolverOptions solver;
};

void cmd_estimate(EstimateArgs& a) {
  Domain domain = Domain::load(a.domain_path);
  MeasurementLog log = MeasurementLog::load(a.log_path, domain);
  SolverDiagnostics diag;
  GraphicalModel model = estimate(domain, log, a.solver, &diag);
  model.save(a.out_path);
  std::printf("iterations: %d (halvings %d%s)\n", diag.iterations,
              diag.halvings, diag.stopped_early ? ", stopped early" : "");
  std::printf("final loss: %.17g\n", diag.final_loss);
  std::printf("estimated total: %.17g\n", diag.estimated_total);
  std::printf("wrote %s\n", a.out_path.c_str());
}

struct SynthArgs {
  std::string model_path, out_path;
  std::uint64_t rows = 0;
  bool rows_set = false;
  std::uint64_t seed = 0;
};

void cmd_synth(SynthArgs& a) {
  GraphicalModel model = GraphicalModel::load(a.model_path);
  RngStream master(a.seed);
  RngStream rng = master.derive("synth");
  Dataset synth = a.rows_set ? synth_data(model, a.rows, rng)
                             : synth_data(model, rng);
  synth.save_csv(a.out_path, model.domain());
  std::printf("synthesized %zu rows\n", synth.rows());
  std::printf("wrote %s\n", a.out_path.c_str());
}

struct EvaluateArgs {
  std::string domain_path, truth_path, synth_path, workload_path, out_path;
  std::uint64_t seed = 0;
  int threeway = 100;
  int conjunctions = 100;
  std::uint64_t cell_cap = kDefaultCellCap;
};

void cmd_evaluate(EvaluateArgs& a) {
  Domain domain = Domain::load(a.domain_path);
  Dataset truth = Dataset::load_csv(a.truth_path, domain);
  Dataset synth = Dataset::load_csv(a.synth_path, domain);
  Workload workload;
  if (!a.workload_path.empty()) {
    workload = Workload::load(a.workload_path, domain);
  } else {
    workload.seed = a.seed;
    RngStream master(a.seed);
    RngStream rng = master.derive("workload");
    std::size_t d = domain.attr_count();
    double triples = static_cast<double>(d) * (d - 1) * (d - 2) / 6.0;
    int want = static_cast<int>(std::min<double>(a.threeway, triples));
    if (d >= 3 && want > 0)
      workload.threeway = random_3way_workload(domain, want, rng);
    if (a.conjunctions > 0)
      workload.conjunctions =
          random_conjunction_workload(domain, a.conjunctions, 0.1, rng);
  }
  ScoreReport report = evaluate(truth, synth, domain, workload, a.cell_cap);
  std::printf("threeway error mean: %.6f over %zu queries\n",
              report.threeway_mean, report.threeway_errors.size());
  std::printf("conjunction error mean: %.6f over %zu queries\n",
              report.conjunction_mean, report.conjunction_errors.size());
  if (!report.designated_errors.empty())
    std::printf("designated error mean: %.6f over %zu queries\n",
                report.designated_mean, report.designated_errors.size());
  if (!a.out_path.empty()) {
    report.save(a.out_path);
    std::printf("wrote %s\n", a.out_path.c_str());
  }
}

struct InspectArgs {
  std::string domain_path, log_path;
};

void cmd_inspect(InspectArgs& a) {
  Domain domain = Domain::load(a.domain_path);
  MeasurementLog log = MeasurementLog::load(a.log_path, domain);
  if (log.seed())
    std::printf("seed %llu stream %s\n",
                static_cast<unsigned long long>(*log.seed()),
                log.stream().c_str());
  for (std::size_t i = 0; i < log.size(); ++i) {
    const Measurement& m = log.items()[i];
    double lo = 0.0, hi = 0.0, sum = 0.0;
    if (!m.noisy_values.empty()) {
      lo = *std::min_element(m.noisy_values.begin(), m.noisy_values.end());
      hi = *std::max_element(m.noisy_values.begin(), m.noisy_values.end());
      for (double v : m.noisy_values) sum += v;
    }
    std::printf(
        "[%zu] %s  %s  weight %.6g  sigma %.6g  values %zu  sum %.4f  "
        "range [%.4f, %.4f]\n",
        i, clique_names(domain, m.clique).c_str(),
        m.kind == TransformKind::identity ? "identity" : "aggregate", m.weight,
        m.sigma, m.value_count(), sum, lo, hi);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private synthetic tabular data"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run the full pipeline");
  run->add_option("--mode", run_args.config.mode, "mst or nist-mst")
      ->capture_default_str();
  run->add_option("--epsilon", run_args.config.params.epsilon,
                  "privacy budget")
      ->capture_default_str();
  run->add_option("--delta", run_args.config.params.delta, "privacy slack")
      ->capture_default_str();
  run->add_option("--seed", run_args.config.seed, "random seed")
      ->capture_default_str();
  run->add_option("--domain", run_args.config.domain_path, "domain JSON")
      ->required();
  run->add_option("--data", run_args.config.data_path, "private records CSV")
      ->required();
  run->add_option("--provisional", run_args.config.provisional_path,
                  "public surrogate CSV (nist-mst only)");
  run->add_option("--out", run_args.config.out_data, "synthetic records CSV")
      ->required();
  run->add_option("--manifest", run_args.config.out_manifest,
                  "run manifest path (default <out>.manifest.json)");
  run->add_option("--report", run_args.config.out_report,
                  "score report path (default <out>.report.json)");
  run->add_option("--iters", run_args.config.solver.iters, "solver iterations")
      ->capture_default_str();
  run->add_option("--step", run_args.config.solver.step, "solver step size")
      ->capture_default_str();
  run->add_option("--cell-cap", run_args.config.cell_cap,
                  "largest allowed clique cell count")
      ->capture_default_str();
  run->add_flag("--census-transforms", run_args.config.census,
                "apply VALUEH/INCWAGE recoding");
  run->add_option("--special", run_args.special,
                  "boosted clique as comma-joined attribute names (repeat)");
  run->add_option("--threeway", run_args.config.workload_threeway,
                  "three-way marginals in the score workload")
      ->capture_default_str();
  run->add_option("--conjunctions", run_args.config.workload_conjunctions,
                  "conjunction queries in the score workload")
      ->capture_default_str();
  run->callback([&run_args] { cmd_run(run_args); });

  MeasureArgs measure_args;
  auto* measure =
      app.add_subcommand("measure", "Release noisy marginals to a log");
  measure->add_option("--domain", measure_args.domain_path, "domain JSON")
      ->required();
  measure->add_option("--data", measure_args.data_path, "records CSV")
      ->required();
  measure->add_option("--sigma", measure_args.sigma, "noise scale")
      ->capture_default_str();
  measure->add_option("--seed", measure_args.seed, "random seed")
      ->capture_default_str();
  measure->add_option("--cell-cap", measure_args.cell_cap,
                      "largest allowed clique cell count")
      ->capture_default_str();
  measure->add_option("--special", measure_args.cliques,
                      "clique to measure (repeat; default all one-ways)");
  measure->add_option("--weight", measure_args.weights,
                      "per-clique weight (repeat, parallel to --special)");
  measure->add_option("--out", measure_args.out_path, "measurement log path")
      ->required();
  measure->callback([&measure_args] { cmd_measure(measure_args); });

  SelectArgs select_args;
  auto* select =
      app.add_subcommand("select", "Choose cliques from public data");
  select->add_option("--domain", select_args.domain_path, "domain JSON")
      ->required();
  select->add_option("--data", select_args.data_path, "public records CSV")
      ->required();
  select->add_option("--epsilon", select_args.epsilon, "privacy budget")
      ->capture_default_str();
  select->add_option("--delta", select_args.delta, "privacy slack")
      ->capture_default_str();
  select->add_option("--special", select_args.special,
                     "boosted clique as comma-joined names (repeat)");
  select->add_option("--triangle-threshold", select_args.triangle_threshold,
                     "augmentation error cutoff")
      ->capture_default_str();
  select->add_option("--cell-cap", select_args.cell_cap,
                     "largest allowed clique cell count")
      ->capture_default_str();
  select->add_option("--out", select_args.out_path, "selection JSON path");
  select->callback([&select_args] { cmd_select(select_args); });

  EstimateArgs estimate_args;
  auto* est = app.add_subcommand("estimate", "Fit a model to a log");
  est->add_option("--domain", estimate_args.domain_path, "domain JSON")
      ->required();
  est->add_option("--log", estimate_args.log_path, "measurement log path")
      ->required();
  est->add_option("--iters", estimate_args.solver.iters, "solver iterations")
      ->capture_default_str();
  est->add_option("--step", estimate_args.solver.step, "solver step size")
      ->capture_default_str();
  est->add_option("--cell-cap", estimate_args.solver.cell_cap,
                  "largest allowed clique cell count")
      ->capture_default_str();
  est->add_option("--out", estimate_args.out_path, "model JSON path")
      ->required();
  est->callback([&estimate_args] { cmd_estimate(estimate_args); });

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Sample records from a model");
  synth->add_option("--model", synth_args.model_path, "model JSON path")
      ->required();
  auto* rows_opt =
      synth->add_option("--rows", synth_args.rows,
                        "record count (default: model total)");
  synth->add_option("--seed", synth_args.seed, "random seed")
      ->capture_default_str();
  synth->add_option("--out", synth_args.out_path, "output CSV path")
      ->required();
  synth->callback([&synth_args, rows_opt] {
    synth_args.rows_set = rows_opt->count() > 0;
    cmd_synth(synth_args);
  });

  EvaluateArgs eval_args;
  auto* eval = app.add_subcommand("evaluate", "Score synthetic against truth");
  eval->add_option("--domain", eval_args.domain_path, "domain JSON")
      ->required();
  eval->add_option("--truth", eval_args.truth_path, "reference records CSV")
      ->required();
  eval->add_option("--synth", eval_args.synth_path, "synthetic records CSV")
      ->required();
  eval->add_option("--workload", eval_args.workload_path,
                   "workload JSON (default: generated from --seed)");
  eval->add_option("--seed", eval_args.seed, "workload seed")
      ->capture_default_str();
  eval->add_option("--threeway", eval_args.threeway,
                   "three-way marginals to generate")
      ->capture_default_str();
  eval->add_option("--conjunctions", eval_args.conjunctions,
                   "conjunction queries to generate")
      ->capture_default_str();
  eval->add_option("--cell-cap", eval_args.cell_cap,
                   "largest allowed clique cell count")
      ->capture_default_str();
  eval->add_option("--out", eval_args.out_path, "score report JSON path");
  eval->callback([&eval_args] { cmd_evaluate(eval_args); });

  InspectArgs inspect_args;
  auto* inspect =
      app.add_subcommand("inspect-log", "Summarize a measurement log");
  inspect->add_option("--domain", inspect_args.domain_path, "domain JSON")
      ->required();
  inspect->add_option("--log", inspect_args.log_path, "measurement log path")
      ->required();
  inspect->callback([&inspect_args] { cmd_inspect(inspect_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  } catch (const DataError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "Error: %s\n", e.what());
    return 1;
  }
  return 0;
}
