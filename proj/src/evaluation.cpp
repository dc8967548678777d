#include "msynth/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "msynth/errors.hpp"

namespace msynth {

namespace {

nlohmann::ordered_json clique_names(const Clique& c, const Domain& domain) {
  auto names = nlohmann::ordered_json::array();
  for (AttrId a : c.attrs()) names.push_back(domain.attribute(a).name);
  return names;
}

Clique clique_from_names(const nlohmann::ordered_json& names,
                         const Domain& domain) {
  std::vector<std::string> v;
  for (const auto& n : names) v.push_back(n.get<std::string>());
  return domain.clique_of(v);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

nlohmann::ordered_json metric_json(const std::vector<double>& errors,
                                   double mean) {
  nlohmann::ordered_json j;
  j["count"] = errors.size();
  j["mean"] = mean;
  j["errors"] = errors;
  return j;
}

}  // namespace

std::string Workload::to_json_text(const Domain& domain) const {
  nlohmann::ordered_json j;
  if (seed) j["seed"] = *seed;
  auto tw = nlohmann::ordered_json::array();
  for (const auto& c : threeway) tw.push_back(clique_names(c, domain));
  j["threeway"] = tw;
  auto cj = nlohmann::ordered_json::array();
  for (const auto& q : conjunctions) {
    nlohmann::ordered_json e;
    e["attrs"] = clique_names(q.clique, domain);
    e["subsets"] = q.subsets;
    cj.push_back(e);
  }
  j["conjunctions"] = cj;
  auto dg = nlohmann::ordered_json::array();
  for (const auto& c : designated) dg.push_back(clique_names(c, domain));
  j["designated"] = dg;
  return j.dump(2);
}

Workload Workload::from_json_text(const std::string& text,
                                  const Domain& domain) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("workload: ") + e.what());
  }
  Workload w;
  if (j.contains("seed")) w.seed = j["seed"].get<std::uint64_t>();
  for (const auto& names : j.value("threeway", nlohmann::ordered_json::array()))
    w.threeway.push_back(clique_from_names(names, domain));
  for (const auto& e :
       j.value("conjunctions", nlohmann::ordered_json::array())) {
    ConjunctionQuery q;
    q.clique = clique_from_names(e.at("attrs"), domain);
    q.subsets = e.at("subsets").get<std::vector<std::vector<int>>>();
    if (q.subsets.size() != q.clique.size())
      throw ParseError("conjunction subsets do not match attributes");
    for (std::size_t i = 0; i < q.subsets.size(); ++i) {
      if (q.subsets[i].empty()) throw ParseError("empty conjunction subset");
      for (int v : q.subsets[i])
        if (v < 0 ||
            v >= static_cast<int>(domain.size(q.clique.attrs()[i])))
          throw ParseError("conjunction subset value out of range");
    }
    w.conjunctions.push_back(std::move(q));
  }
  for (const auto& names :
       j.value("designated", nlohmann::ordered_json::array()))
    w.designated.push_back(clique_from_names(names, domain));
  return w;
}

void Workload::save(const std::string& path, const Domain& domain) const {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << to_json_text(domain);
}

Workload Workload::load(const std::string& path, const Domain& domain) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str(), domain);
}

std::string ScoreReport::to_json_text() const {
  nlohmann::ordered_json j;
  if (seed) j["seed"] = *seed;
  j["threeway"] = metric_json(threeway_errors, threeway_mean);
  j["conjunctions"] = metric_json(conjunction_errors, conjunction_mean);
  j["designated"] = metric_json(designated_errors, designated_mean);
  return j.dump(2);
}

void ScoreReport::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << to_json_text();
}

double conjunction_count(const Dataset& data, const Domain& domain,
                         const ConjunctionQuery& q, std::uint64_t cell_cap) {
  if (q.subsets.size() != q.clique.size())
    throw LengthMismatch("conjunction subsets do not match attributes");
  auto counts = marginal(data, domain, q.clique, cell_cap);
  CellIndexer ix(domain, q.clique);
  std::vector<std::vector<char>> member(q.clique.size());
  for (std::size_t i = 0; i < q.clique.size(); ++i) {
    if (q.subsets[i].empty()) throw LengthMismatch("empty conjunction subset");
    member[i].assign(domain.size(q.clique.attrs()[i]), 0);
    for (int v : q.subsets[i]) {
      if (v < 0 || v >= static_cast<int>(member[i].size()))
        throw UnknownValue("conjunction subset value " + std::to_string(v));
      member[i][v] = 1;
    }
  }
  double total = 0.0;
  std::vector<int> cell(q.clique.size(), 0);
  for (std::size_t idx = 0; idx < counts.size(); ++idx) {
    ix.decode(idx, cell);
    bool in = true;
    for (std::size_t i = 0; i < cell.size() && in; ++i)
      in = member[i][cell[i]] != 0;
    if (in) total += counts[idx];
  }
  return total;
}

std::vector<Clique> random_3way_workload(const Domain& domain, int count,
                                         RngStream& rng) {
  const int d = static_cast<int>(domain.attr_count());
  if (d < 3) throw TooFewAttributes("need at least three attributes");
  if (count < 0) throw BadConfig("negative workload size");
  const double available =
      static_cast<double>(d) * (d - 1) * (d - 2) / 6.0;
  if (static_cast<double>(count) > available)
    throw BadConfig("asked for " + std::to_string(count) + " triples, only " +
                    std::to_string(static_cast<std::uint64_t>(available)) +
                    " exist");
  std::set<Clique> seen;
  std::vector<Clique> out;
  while (static_cast<int>(out.size()) < count) {
    AttrId a = static_cast<AttrId>(rng.uniform_index(d));
    AttrId b = static_cast<AttrId>(rng.uniform_index(d));
    AttrId c = static_cast<AttrId>(rng.uniform_index(d));
    if (a == b || a == c || b == c) continue;
    Clique t({a, b, c});
    if (seen.insert(t).second) out.push_back(t);
  }
  return out;
}

std::vector<ConjunctionQuery> random_conjunction_workload(const Domain& domain,
                                                          int count,
                                                          double attr_prob,
                                                          RngStream& rng) {
  if (!(attr_prob > 0.0) || attr_prob > 1.0)
    throw BadConfig("attribute probability must be in (0, 1]");
  const int d = static_cast<int>(domain.attr_count());
  if (d == 0) throw TooFewAttributes("empty domain");
  std::vector<ConjunctionQuery> out;
  while (static_cast<int>(out.size()) < count) {
    std::vector<AttrId> attrs;
    for (AttrId a = 0; a < d; ++a)
      if (rng.uniform() < attr_prob) attrs.push_back(a);
    if (attrs.empty()) continue;  // redraw empty samples
    ConjunctionQuery q;
    q.clique = Clique(attrs);
    q.subsets.resize(attrs.size());
    for (std::size_t i = 0; i < attrs.size(); ++i) {
      const int size = static_cast<int>(domain.size(attrs[i]));
      do {
        q.subsets[i].clear();
        for (int v = 0; v < size; ++v)
          if (rng.uniform() < 0.5) q.subsets[i].push_back(v);
      } while (q.subsets[i].empty());
    }
    out.push_back(std::move(q));
  }
  return out;
}

ScoreReport evaluate(const Dataset& truth, const Dataset& synth,
                     const Domain& domain, const Workload& workload,
                     std::uint64_t cell_cap) {
  if (truth.attr_count() != domain.attr_count() ||
      synth.attr_count() != domain.attr_count())
    throw DomainMismatch("datasets do not share the workload domain");
  if (truth.rows() == 0 || synth.rows() == 0)
    throw EmptyDataset("cannot score an empty dataset");
  const double mt = static_cast<double>(truth.rows());
  const double ms = static_cast<double>(synth.rows());

  auto marginal_error = [&](const Clique& c) {
    auto a = marginal(truth, domain, c, cell_cap);
    auto b = marginal(synth, domain, c, cell_cap);
    double err = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      err += std::abs(a[i] / mt - b[i] / ms);
    return err;
  };

  ScoreReport report;
  report.seed = workload.seed;
  for (const auto& c : workload.threeway)
    report.threeway_errors.push_back(marginal_error(c));
  for (const auto& q : workload.conjunctions)
    report.conjunction_errors.push_back(
        std::abs(conjunction_count(truth, domain, q, cell_cap) / mt -
                 conjunction_count(synth, domain, q, cell_cap) / ms));
  for (const auto& c : workload.designated)
    report.designated_errors.push_back(marginal_error(c));
  report.threeway_mean = mean_of(report.threeway_errors);
  report.conjunction_mean = mean_of(report.conjunction_errors);
  report.designated_mean = mean_of(report.designated_errors);
  return report;
}

}  // namespace msynth
