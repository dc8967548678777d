#include "msynth/graphical_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "msynth/errors.hpp"

namespace msynth {

namespace {

double lse(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// For sub a subset of big: index of each big-cell's projection into sub.
std::vector<std::uint32_t> sub_index_map(const Domain& domain,
                                         const Clique& big,
                                         const Clique& sub) {
  if (!big.contains(sub)) throw LengthMismatch("projection target not nested");
  CellIndexer big_ix(domain, big);
  CellIndexer sub_ix(domain, sub);
  std::vector<std::size_t> stride(big.size(), 0);
  for (std::size_t k = 0; k < big.size(); ++k)
    for (std::size_t m = 0; m < sub.size(); ++m)
      if (big.attrs()[k] == sub.attrs()[m]) stride[k] = sub_ix.stride(m);
  std::vector<std::uint32_t> map(big_ix.cells());
  std::vector<std::size_t> digit(big.size(), 0);
  std::size_t sidx = 0;
  for (std::size_t i = 0; i < map.size(); ++i) {
    map[i] = static_cast<std::uint32_t>(sidx);
    for (std::size_t k = big.size(); k-- > 0;) {
      ++digit[k];
      sidx += stride[k];
      if (digit[k] < big_ix.size(k)) break;
      sidx -= stride[k] * digit[k];
      digit[k] = 0;
    }
  }
  return map;
}

// Log-space projection: out[j] = log sum exp over big cells mapping to j.
std::vector<double> lse_project_map(const std::vector<double>& big,
                                    const std::vector<std::uint32_t>& map,
                                    std::size_t out_cells) {
  std::vector<double> mx(out_cells, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < big.size(); ++i)
    mx[map[i]] = std::max(mx[map[i]], big[i]);
  std::vector<double> acc(out_cells, 0.0);
  for (std::size_t i = 0; i < big.size(); ++i)
    acc[map[i]] += std::exp(big[i] - mx[map[i]]);
  std::vector<double> out(out_cells);
  for (std::size_t j = 0; j < out_cells; ++j)
    out[j] = std::isfinite(mx[j]) ? mx[j] + std::log(acc[j]) : mx[j];
  return out;
}

void add_map(std::vector<double>& big, const std::vector<std::uint32_t>& map,
             const std::vector<double>& sub) {
  for (std::size_t i = 0; i < big.size(); ++i) big[i] += sub[map[i]];
}

struct LogFactor {
  Clique scope;
  std::vector<double> values;
};

}  // namespace

GraphicalModel::GraphicalModel(Domain domain, JunctionTree tree, double total)
    : domain_(std::move(domain)), tree_(std::move(tree)), total_(total) {
  if (!(total_ >= 0.0)) throw NonPositiveParameter("total must be >= 0");
  theta_.resize(tree_.cliques.size());
  for (std::size_t k = 0; k < tree_.cliques.size(); ++k)
    theta_[k].assign(static_cast<std::size_t>(domain_.cells(tree_.cliques[k])),
                     0.0);

  // BFS forest traversal with deterministic roots.
  const int m = static_cast<int>(tree_.cliques.size());
  bfs_parent_.assign(m, -1);
  parent_edge_.assign(m, -1);
  std::vector<char> seen(m, 0);
  for (int s = 0; s < m; ++s) {
    if (seen[s]) continue;
    std::vector<int> queue{s};
    seen[s] = 1;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      int k = queue[q];
      bfs_order_.push_back(k);
      for (int c : tree_.neighbors[k]) {
        if (seen[c]) continue;
        seen[c] = 1;
        bfs_parent_[c] = k;
        queue.push_back(c);
      }
    }
  }
  edge_map_a_.resize(tree_.edges.size());
  edge_map_b_.resize(tree_.edges.size());
  for (std::size_t e = 0; e < tree_.edges.size(); ++e) {
    const auto& ed = tree_.edges[e];
    edge_map_a_[e] = sub_index_map(domain_, tree_.cliques[ed.a], ed.separator);
    edge_map_b_[e] = sub_index_map(domain_, tree_.cliques[ed.b], ed.separator);
  }
  for (int k = 0; k < m; ++k) {
    if (bfs_parent_[k] < 0) continue;
    for (std::size_t e = 0; e < tree_.edges.size(); ++e) {
      const auto& ed = tree_.edges[e];
      if ((ed.a == k && ed.b == bfs_parent_[k]) ||
          (ed.b == k && ed.a == bfs_parent_[k]))
        parent_edge_[k] = static_cast<int>(e);
    }
  }
}

void GraphicalModel::set_total(double t) {
  if (!(t >= 0.0)) throw NonPositiveParameter("total must be >= 0");
  total_ = t;
}

void GraphicalModel::calibrate() const {
  if (calibrated_) return;
  const int m = static_cast<int>(tree_.cliques.size());
  // msg[2e] flows a->b over edge e, msg[2e+1] flows b->a.
  std::vector<std::vector<double>> msg(2 * tree_.edges.size());

  auto edge_between = [&](int k, int other) {
    int e = parent_edge_[k] >= 0 && bfs_parent_[k] == other ? parent_edge_[k]
                                                            : parent_edge_[other];
    return e;
  };
  auto send = [&](int from, int to) {
    int e = edge_between(from, to);
    const auto& ed = tree_.edges[e];
    const auto& from_map = ed.a == from ? edge_map_a_[e] : edge_map_b_[e];
    std::vector<double> tmp = theta_[from];
    for (int nb : tree_.neighbors[from]) {
      if (nb == to) continue;
      int ne = edge_between(nb, from);
      const auto& ned = tree_.edges[ne];
      int dir = ned.a == nb ? 0 : 1;
      const auto& in = msg[2 * ne + dir];
      const auto& to_map = ned.a == from ? edge_map_a_[ne] : edge_map_b_[ne];
      add_map(tmp, to_map, in);
    }
    int dir = ed.a == from ? 0 : 1;
    msg[2 * e + dir] =
        lse_project_map(tmp, from_map, from_map.empty()
                                           ? 0
                                           : 1 + *std::max_element(
                                                     from_map.begin(),
                                                     from_map.end()));
  };

  for (auto it = bfs_order_.rbegin(); it != bfs_order_.rend(); ++it)
    if (bfs_parent_[*it] >= 0) send(*it, bfs_parent_[*it]);
  for (int k : bfs_order_)
    for (int c : tree_.neighbors[k])
      if (bfs_parent_[c] == k) send(k, c);

  beliefs_.assign(m, {});
  probs_.assign(m, {});
  for (int k = 0; k < m; ++k) {
    std::vector<double> b = theta_[k];
    for (int nb : tree_.neighbors[k]) {
      int e = edge_between(nb, k);
      const auto& ed = tree_.edges[e];
      int dir = ed.a == nb ? 0 : 1;
      const auto& to_map = ed.a == k ? edge_map_a_[e] : edge_map_b_[e];
      add_map(b, to_map, msg[2 * e + dir]);
    }
    double z = lse(b);
    probs_[k].resize(b.size());
    for (std::size_t i = 0; i < b.size(); ++i)
      probs_[k][i] = std::exp(b[i] - z);
    beliefs_[k] = std::move(b);
  }
  calibrated_ = true;
}

const std::vector<std::vector<double>>& GraphicalModel::clique_probabilities()
    const {
  calibrate();
  return probs_;
}

std::vector<double> GraphicalModel::component_marginal(
    int component, const Clique& target, std::uint64_t cell_cap) const {
  calibrate();
  // Any single clique that already covers the target avoids elimination.
  for (std::size_t k = 0; k < tree_.cliques.size(); ++k) {
    if (tree_.component[k] != component) continue;
    if (tree_.cliques[k].contains(target)) {
      auto map = sub_index_map(domain_, tree_.cliques[k], target);
      std::vector<double> out(domain_.cells(target), 0.0);
      for (std::size_t i = 0; i < map.size(); ++i)
        out[map[i]] += probs_[k][i];
      return out;
    }
  }

  // Steiner subtree: cliques on paths from attribute covers to the root cover.
  std::vector<int> comp;
  for (std::size_t k = 0; k < tree_.cliques.size(); ++k)
    if (tree_.component[k] == component) comp.push_back(static_cast<int>(k));
  std::vector<char> cover(tree_.cliques.size(), 0);
  for (AttrId a : target.attrs()) {
    for (int k : comp)
      if (tree_.cliques[k].contains(a)) {
        cover[k] = 1;
        break;
      }
  }
  int root = -1;
  for (int k : comp)
    if (cover[k]) {
      root = k;
      break;
    }
  if (root < 0) throw UnknownAttribute("target not in component");

  std::vector<int> order, parent(tree_.cliques.size(), -1);
  std::vector<char> seen(tree_.cliques.size(), 0);
  order.push_back(root);
  seen[root] = 1;
  for (std::size_t q = 0; q < order.size(); ++q) {
    int k = order[q];
    for (int c : tree_.neighbors[k])
      if (!seen[c]) {
        seen[c] = 1;
        parent[c] = k;
        order.push_back(c);
      }
  }
  std::vector<char> keep = cover;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if (keep[*it] && parent[*it] >= 0) keep[parent[*it]] = 1;

  auto check_cap = [&](const Clique& scope) {
    if (domain_.cells(scope) > cell_cap)
      throw CliqueTooLarge("elimination factor has " +
                           std::to_string(domain_.cells(scope)) +
                           " cells, cap " + std::to_string(cell_cap));
  };
  auto log_of = [](std::vector<double> p) {
    for (double& x : p)
      x = x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity();
    return p;
  };

  // Post-order elimination over the kept subtree. Each message keeps only its
  // parent separator plus target attributes seen so far.
  std::vector<LogFactor> msg_of(tree_.cliques.size());
  std::vector<char> has_msg(tree_.cliques.size(), 0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int k = *it;
    if (!keep[k]) continue;
    LogFactor f;
    f.scope = tree_.cliques[k];
    f.values = log_of(probs_[k]);
    for (int c : tree_.neighbors[k]) {
      if (parent[c] != k || !has_msg[c]) continue;
      const LogFactor& mc = msg_of[c];
      if (!f.scope.contains(mc.scope)) {
        Clique wide = f.scope.set_union(mc.scope);
        check_cap(wide);
        LogFactor g;
        g.scope = wide;
        g.values.assign(domain_.cells(wide), 0.0);
        add_map(g.values, sub_index_map(domain_, wide, f.scope), f.values);
        f = std::move(g);
      }
      add_map(f.values, sub_index_map(domain_, f.scope, mc.scope), mc.values);
    }
    if (parent[k] < 0) {
      auto res = lse_project_map(
          f.values, sub_index_map(domain_, f.scope, target),
          static_cast<std::size_t>(domain_.cells(target)));
      double z = lse(res);
      std::vector<double> out(res.size());
      for (std::size_t i = 0; i < res.size(); ++i)
        out[i] = std::exp(res[i] - z);
      return out;
    }
    // Divide by the separator belief toward the parent.
    Clique sep = tree_.cliques[k].set_intersection(tree_.cliques[parent[k]]);
    auto sep_prob = lse_project_map(
        log_of(probs_[k]), sub_index_map(domain_, tree_.cliques[k], sep),
        static_cast<std::size_t>(domain_.cells(sep)));
    auto sep_map = sub_index_map(domain_, f.scope, sep);
    for (std::size_t i = 0; i < f.values.size(); ++i)
      f.values[i] -= sep_prob[sep_map[i]];
    Clique keep_scope = sep.set_union(f.scope.set_intersection(target));
    msg_of[k].scope = keep_scope;
    msg_of[k].values = lse_project_map(
        f.values, sub_index_map(domain_, f.scope, keep_scope),
        static_cast<std::size_t>(domain_.cells(keep_scope)));
    has_msg[k] = 1;
  }
  throw UnknownAttribute("target not reachable in component");
}

std::vector<double> GraphicalModel::marginal(const Clique& c,
                                             std::uint64_t cell_cap) const {
  if (c.size() == 0) throw TooFewAttributes("empty marginal clique");
  if (domain_.cells(c) > cell_cap)
    throw CliqueTooLarge("marginal has " + std::to_string(domain_.cells(c)) +
                         " cells, cap " + std::to_string(cell_cap));
  calibrate();

  // Attributes in different trees are independent.
  std::vector<int> comp_of_attr(c.size(), -1);
  for (std::size_t i = 0; i < c.size(); ++i) {
    AttrId a = c.attrs()[i];
    for (std::size_t k = 0; k < tree_.cliques.size(); ++k)
      if (tree_.cliques[k].contains(a)) {
        comp_of_attr[i] = tree_.component[k];
        break;
      }
    if (comp_of_attr[i] < 0)
      throw UnknownAttribute("attribute " + std::to_string(a) +
                             " not in model");
  }
  std::vector<int> comps = comp_of_attr;
  std::sort(comps.begin(), comps.end());
  comps.erase(std::unique(comps.begin(), comps.end()), comps.end());

  std::vector<double> out(static_cast<std::size_t>(domain_.cells(c)), 1.0);
  for (int comp : comps) {
    std::vector<AttrId> sub_attrs;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (comp_of_attr[i] == comp) sub_attrs.push_back(c.attrs()[i]);
    Clique sub(sub_attrs);
    auto p = component_marginal(comp, sub, cell_cap);
    auto map = sub_index_map(domain_, c, sub);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= p[map[i]];
  }
  for (double& x : out) x *= total_;
  return out;
}

std::string GraphicalModel::to_json_text() const {
  nlohmann::ordered_json j;
  j["total"] = total_;
  j["domain"] = nlohmann::ordered_json::parse(domain_.to_json_text());
  auto cl = nlohmann::ordered_json::array();
  for (const auto& c : tree_.cliques) {
    auto names = nlohmann::ordered_json::array();
    for (AttrId a : c.attrs()) names.push_back(domain_.attribute(a).name);
    cl.push_back(names);
  }
  j["cliques"] = cl;
  j["theta"] = theta_;
  return j.dump(2);
}

GraphicalModel GraphicalModel::from_json_text(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
  Domain domain = Domain::from_json_text(j.at("domain").dump());
  std::vector<Clique> cliques;
  for (const auto& names : j.at("cliques")) {
    std::vector<AttrId> ids;
    for (const auto& n : names) ids.push_back(domain.index_of(n));
    cliques.push_back(Clique(std::move(ids)));
  }
  JunctionTree jt = build_junction_tree(domain, cliques);
  if (jt.cliques.size() != cliques.size())
    throw ParseError("stored cliques are not junction-tree cliques");
  GraphicalModel model(std::move(domain), std::move(jt),
                       j.at("total").get<double>());
  auto theta = j.at("theta").get<std::vector<std::vector<double>>>();
  if (theta.size() != model.theta().size())
    throw ParseError("theta does not match cliques");
  for (std::size_t k = 0; k < theta.size(); ++k)
    if (theta[k].size() != model.theta()[k].size())
      throw ParseError("theta vector length mismatch");
  model.theta() = std::move(theta);
  model.invalidate();
  return model;
}

void GraphicalModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << to_json_text();
}

GraphicalModel GraphicalModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

double estimate_total(const MeasurementLog& log) {
  double num = 0.0, den = 0.0;
  for (const auto& m : log.items()) {
    if (m.kind != TransformKind::identity) continue;
    double sum = 0.0;
    for (double y : m.noisy_values) sum += y;
    double est = sum / m.weight;
    double var = m.noisy_values.size() * m.sigma * m.sigma /
                 (m.weight * m.weight);
    num += est / var;
    den += 1.0 / var;
  }
  if (den == 0.0) return 1.0;  // nothing to infer a total from
  return std::max(0.0, num / den);
}

double measurement_loss(const Measurement& m,
                        const std::vector<double>& count_marginal) {
  double loss = 0.0;
  if (m.kind == TransformKind::identity) {
    if (count_marginal.size() != m.noisy_values.size())
      throw LengthMismatch("marginal does not match measurement");
    for (std::size_t i = 0; i < count_marginal.size(); ++i) {
      double r = m.weight * count_marginal[i] - m.noisy_values[i];
      loss += r * r;
    }
  } else {
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
      const auto& row = m.rows[r];
      if (row.cell >= count_marginal.size())
        throw LengthMismatch("aggregate row outside marginal");
      double s = 1.0 / std::sqrt(static_cast<double>(row.source_count));
      double res =
          s * (m.weight * count_marginal[row.cell] - m.noisy_values[r]);
      loss += res * res;
    }
  }
  return loss;
}

void add_measurement_gradient(const Measurement& m,
                              const std::vector<double>& count_marginal,
                              std::vector<double>& grad) {
  if (grad.size() != count_marginal.size())
    throw LengthMismatch("gradient buffer size");
  if (m.kind == TransformKind::identity) {
    if (count_marginal.size() != m.noisy_values.size())
      throw LengthMismatch("marginal does not match measurement");
    for (std::size_t i = 0; i < count_marginal.size(); ++i)
      grad[i] += 2.0 * m.weight *
                 (m.weight * count_marginal[i] - m.noisy_values[i]);
  } else {
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
      const auto& row = m.rows[r];
      double s2 = 1.0 / static_cast<double>(row.source_count);
      grad[row.cell] += 2.0 * m.weight * s2 *
                        (m.weight * count_marginal[row.cell] -
                         m.noisy_values[r]);
    }
  }
}

GraphicalModel estimate(const Domain& domain, const MeasurementLog& log,
                        const SolverOptions& options,
                        SolverDiagnostics* diagnostics) {
  if (log.empty()) throw EmptyLog("no measurements to fit");
  if (options.iters < 0) throw NonPositiveParameter("iters must be >= 0");
  if (!(options.step > 0.0)) throw NonPositiveParameter("step must be > 0");

  std::vector<Clique> cliques;
  for (const auto& m : log.items()) cliques.push_back(m.clique);
  std::sort(cliques.begin(), cliques.end());
  cliques.erase(std::unique(cliques.begin(), cliques.end()), cliques.end());

  JunctionTree jt = build_junction_tree(domain, cliques, options.cell_cap);
  double total = estimate_total(log);
  GraphicalModel model(domain, std::move(jt), total);
  const auto& tree = model.tree();

  struct Attached {
    const Measurement* m;
    int clique;                       // junction-tree clique it lives in
    std::vector<std::uint32_t> map;   // clique cell -> measurement cell
    std::size_t cells;
  };
  std::vector<Attached> att;
  for (const auto& m : log.items()) {
    Attached a;
    a.m = &m;
    a.clique = tree.find_containing(m.clique);
    if (a.clique < 0)
      throw TreewidthTooLarge("measurement clique not in junction tree");
    a.map = sub_index_map(domain, tree.cliques[a.clique], m.clique);
    a.cells = static_cast<std::size_t>(domain.cells(m.clique));
    att.push_back(std::move(a));
  }

  auto marginals_of = [&]() {
    const auto& probs = model.clique_probabilities();
    std::vector<std::vector<double>> out(att.size());
    for (std::size_t i = 0; i < att.size(); ++i) {
      out[i].assign(att[i].cells, 0.0);
      const auto& p = probs[att[i].clique];
      for (std::size_t c = 0; c < p.size(); ++c)
        out[i][att[i].map[c]] += p[c];
      for (double& x : out[i]) x *= total;
    }
    return out;
  };
  auto loss_of = [&](const std::vector<std::vector<double>>& mu) {
    double loss = 0.0;
    for (std::size_t i = 0; i < att.size(); ++i)
      loss += measurement_loss(*att[i].m, mu[i]);
    return loss;
  };

  auto mu = marginals_of();
  double loss = loss_of(mu);
  SolverDiagnostics diag;
  diag.estimated_total = total;

  const int max_halvings = 60;
  for (int it = 0; it < options.iters; ++it) {
    if (options.loss_stop >= 0.0 && loss <= options.loss_stop) {
      diag.stopped_early = true;
      break;
    }
    // Mirror step: marginal-space gradient pushed onto the clique potentials.
    std::vector<std::vector<double>> grad(model.theta().size());
    for (std::size_t k = 0; k < grad.size(); ++k)
      grad[k].assign(model.theta()[k].size(), 0.0);
    for (std::size_t i = 0; i < att.size(); ++i) {
      std::vector<double> g(att[i].cells, 0.0);
      add_measurement_gradient(*att[i].m, mu[i], g);
      auto& gk = grad[att[i].clique];
      for (std::size_t c = 0; c < gk.size(); ++c) gk[c] += g[att[i].map[c]];
    }

    std::vector<std::vector<double>> saved = model.theta();
    double s = options.step;
    bool accepted = false;
    for (int h = 0; h < max_halvings; ++h) {
      auto& th = model.theta();
      for (std::size_t k = 0; k < th.size(); ++k)
        for (std::size_t c = 0; c < th[k].size(); ++c)
          th[k][c] = saved[k][c] - s * grad[k][c];
      model.invalidate();
      auto mu_try = marginals_of();
      double loss_try = loss_of(mu_try);
      if (loss_try <= loss && std::isfinite(loss_try)) {
        mu = std::move(mu_try);
        loss = loss_try;
        accepted = true;
        break;
      }
      s *= 0.5;
      ++diag.halvings;
    }
    diag.iterations = it + 1;
    if (!accepted) {
      // The step failed at every scale; the state is unchanged, so every
      // later iteration would replay the same rejections. Converged.
      model.theta() = std::move(saved);
      model.invalidate();
      break;
    }
  }
  diag.final_loss = loss;
  if (diagnostics) *diagnostics = diag;
  return model;
}

}  // namespace msynth
