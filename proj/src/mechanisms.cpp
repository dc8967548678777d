#include "msynth/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "msynth/errors.hpp"

namespace msynth {

void MeasurementLog::set_seed_record(std::uint64_t seed, std::string stream) {
  seed_ = seed;
  stream_ = std::move(stream);
}

std::string MeasurementLog::to_ndjson(const Domain& domain) const {
  std::string out;
  if (seed_) {
    nlohmann::json h;
    h["seed"] = *seed_;
    h["stream"] = stream_;
    out += h.dump();
    out.push_back('\n');
  }
  for (const auto& m : items_) {
    nlohmann::json j;
    auto names = nlohmann::json::array();
    for (AttrId a : m.clique.attrs()) names.push_back(domain.attribute(a).name);
    j["clique"] = names;
    j["kind"] = m.kind == TransformKind::identity ? "identity" : "aggregate";
    j["weight"] = m.weight;
    j["sigma"] = m.sigma;
    j["values"] = m.noisy_values;
    if (m.kind == TransformKind::aggregate) {
      auto rows = nlohmann::json::array();
      for (const auto& r : m.rows)
        rows.push_back({r.cell, r.source_count});
      j["rows"] = rows;
    }
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

MeasurementLog MeasurementLog::from_ndjson(const std::string& text,
                                           const Domain& domain) {
  MeasurementLog log;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
      throw ParseError("measurement log line " + std::to_string(lineno) +
                       ": " + e.what());
    }
    if (j.contains("seed")) {
      log.set_seed_record(j["seed"].get<std::uint64_t>(),
                          j.value("stream", std::string()));
      continue;
    }
    Measurement m;
    std::vector<AttrId> ids;
    for (const auto& n : j.at("clique"))
      ids.push_back(domain.index_of(n.get<std::string>()));
    m.clique = Clique(std::move(ids));
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "identity") {
      m.kind = TransformKind::identity;
    } else if (kind == "aggregate") {
      m.kind = TransformKind::aggregate;
    } else {
      throw ParseError("unknown transform kind '" + kind + "'");
    }
    m.weight = j.at("weight").get<double>();
    m.sigma = j.at("sigma").get<double>();
    m.noisy_values = j.at("values").get<std::vector<double>>();
    if (m.kind == TransformKind::aggregate) {
      for (const auto& r : j.at("rows"))
        m.rows.push_back(AggregateRow{r.at(0).get<std::size_t>(),
                                      r.at(1).get<std::size_t>()});
      if (m.rows.size() != m.noisy_values.size())
        throw ParseError("aggregate rows do not match values");
    } else if (domain.cells(m.clique) != m.noisy_values.size()) {
      throw ParseError("identity values do not match clique cells");
    }
    log.append(std::move(m));
  }
  return log;
}

void MeasurementLog::save(const std::string& path,
                          const Domain& domain) const {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << to_ndjson(domain);
}

MeasurementLog MeasurementLog::load(const std::string& path,
                                    const Domain& domain) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_ndjson(ss.str(), domain);
}

MeasurementLog measure_marginals(const Dataset& data, const Domain& domain,
                                 const std::vector<Clique>& cliques,
                                 std::vector<double> weights,
                                 const MeasureOptions& options, RngStream& rng,
                                 RdpLedger& ledger) {
  if (cliques.empty()) throw EmptyCandidates("no cliques to measure");
  if (data.rows() == 0) throw EmptyDataset("no records to measure");
  if (!(options.sigma > 0.0))
    throw NonPositiveParameter("sigma must be > 0");
  if (weights.empty()) weights.assign(cliques.size(), 1.0);
  if (weights.size() != cliques.size())
    throw LengthMismatch("weights do not match cliques");
  double norm2 = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw NonPositiveParameter("weights must be > 0");
    norm2 += w * w;
  }
  double norm = std::sqrt(norm2);
  for (double& w : weights) w /= norm;

  MeasurementLog log;
  log.set_seed_record(rng.seed(), "measure");
  for (std::size_t c = 0; c < cliques.size(); ++c) {
    Measurement m;
    m.clique = cliques[c];
    m.kind = TransformKind::identity;
    m.weight = weights[c];
    m.sigma = options.sigma;
    auto counts = marginal(data, domain, cliques[c], options.cell_cap);
    m.noisy_values.resize(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
      double noise = options.zero_noise ? 0.0 : options.sigma * rng.gaussian();
      m.noisy_values[i] = weights[c] * counts[i] + noise;
    }
    log.append(std::move(m));
  }
  ledger.charge("gaussian sigma=" + std::to_string(options.sigma) +
                    " cliques=" + std::to_string(cliques.size()),
                gaussian_rho(options.sigma, 1.0));
  return log;
}

std::size_t exponential_mechanism(const std::vector<double>& scores,
                                  double eps_step, double sens, RngStream& rng,
                                  RdpLedger& ledger) {
  if (scores.empty()) throw EmptyCandidates("no candidates to select from");
  if (!(eps_step > 0.0)) throw NonPositiveParameter("eps_step must be > 0");
  if (!(sens > 0.0)) throw NonPositiveParameter("sens must be > 0");
  for (double s : scores)
    if (!std::isfinite(s)) throw NonPositiveParameter("scores must be finite");

  double m = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp(eps_step * (scores[i] - m));
    z += p[i];
  }
  double u = rng.uniform() * z;
  double acc = 0.0;
  std::size_t pick = scores.size() - 1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    acc += p[i];
    if (u < acc) {
      pick = i;
      break;
    }
  }
  ledger.charge("exponential eps=" + std::to_string(eps_step),
                exponential_rho(eps_step, sens));
  return pick;
}

}  // namespace msynth
