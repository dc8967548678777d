#include "msynth/generation.hpp"

#include <algorithm>
#include <cmath>

#include "msynth/errors.hpp"

namespace msynth {

std::vector<std::int32_t> synth_column(const std::vector<double>& mu,
                                       std::size_t n, RngStream& rng) {
  std::vector<std::int32_t> col;
  col.reserve(n);
  std::vector<double> rem(mu.size());
  double total_rem = 0.0;
  std::size_t floors = 0;
  for (std::size_t t = 0; t < mu.size(); ++t) {
    if (!(mu[t] >= 0.0))
      throw NegativeMass("expected count " + std::to_string(mu[t]));
    double f = std::floor(mu[t]);
    floors += static_cast<std::size_t>(f);
    col.insert(col.end(), static_cast<std::size_t>(f),
               static_cast<std::int32_t>(t));
    rem[t] = mu[t] - f;
    total_rem += rem[t];
  }
  if (n < floors)
    throw InsufficientBudget("column length " + std::to_string(n) +
                             " below floor mass " + std::to_string(floors));

  for (std::size_t k = floors; k < n; ++k) {
    if (total_rem <= 1e-12) {
      // Recompute to shed subtraction drift; if mass is truly gone the
      // leftover slots fall back to uniform values.
      total_rem = 0.0;
      for (double r : rem) total_rem += r;
      if (total_rem <= 0.0) {
        col.push_back(static_cast<std::int32_t>(rng.uniform_index(mu.size())));
        continue;
      }
    }
    double u = rng.uniform() * total_rem;
    std::size_t pick = mu.size() - 1;
    double acc = 0.0;
    for (std::size_t t = 0; t < rem.size(); ++t) {
      acc += rem[t];
      if (u <= acc) {
        pick = t;
        break;
      }
    }
    while (pick > 0 && rem[pick] == 0.0) --pick;  // guard against drift
    col.push_back(static_cast<std::int32_t>(pick));
    total_rem -= rem[pick];
    rem[pick] = 0.0;
  }
  rng.shuffle(col);
  return col;
}

Dataset synth_data(const GraphicalModel& model, std::size_t n, RngStream& rng) {
  const Domain& domain = model.domain();
  const JunctionTree& tree = model.tree();
  const int d = static_cast<int>(domain.attr_count());
  Dataset out(d, n);
  if (n == 0) return out;

  // Depth-first pre-order over the clique forest, lowest-index roots and
  // children first, attributes introduced in the order first seen.
  std::vector<int> clique_order;
  std::vector<char> seen(tree.cliques.size(), 0);
  for (std::size_t root = 0; root < tree.cliques.size(); ++root) {
    if (seen[root]) continue;
    std::vector<int> stack{static_cast<int>(root)};
    seen[root] = 1;
    while (!stack.empty()) {
      int k = stack.back();
      stack.pop_back();
      clique_order.push_back(k);
      auto kids = tree.neighbors[k];
      std::sort(kids.begin(), kids.end(), std::greater<int>());
      for (int c : kids) {
        if (seen[c]) continue;
        seen[c] = 1;
        stack.push_back(c);
      }
    }
  }

  std::vector<char> processed(d, 0);
  for (int k : clique_order) {
    for (AttrId attr : tree.cliques[k].attrs()) {
      if (processed[attr]) continue;

      std::vector<AttrId> parents;
      for (AttrId p : tree.cliques[k].attrs())
        if (processed[p]) parents.push_back(p);
      const std::size_t values = domain.size(attr);

      if (parents.empty()) {
        auto mu = model.marginal(Clique({attr}));
        double total = 0.0;
        for (double x : mu) total += x;
        std::vector<double> scaled(values, 0.0);
        if (total > 0.0)
          for (std::size_t t = 0; t < values; ++t)
            scaled[t] = mu[t] * (static_cast<double>(n) / total);
        else
          scaled.assign(values, static_cast<double>(n) / values);
        auto col = synth_column(scaled, n, rng);
        for (std::size_t r = 0; r < n; ++r) out.set_value(r, attr, col[r]);
        processed[attr] = 1;
        continue;
      }

      Clique parent_clique(parents);
      Clique query = parent_clique.set_union(Clique({attr}));
      auto counts = model.marginal(query);
      CellIndexer parent_ix(domain, parent_clique);
      CellIndexer query_ix(domain, query);

      // Offset of each parent cell inside the query grid, plus the stride of
      // the attribute being generated.
      std::size_t attr_stride = 0;
      {
        const auto& qa = query.attrs();
        for (std::size_t pos = 0; pos < qa.size(); ++pos)
          if (qa[pos] == attr) attr_stride = query_ix.stride(pos);
      }
      std::vector<std::size_t> base(parent_ix.cells(), 0);
      {
        std::vector<int> cell(parents.size(), 0);
        std::vector<std::size_t> qstride(parents.size(), 0);
        const auto& qa = query.attrs();
        for (std::size_t pk = 0; pk < parents.size(); ++pk)
          for (std::size_t pos = 0; pos < qa.size(); ++pos)
            if (qa[pos] == parents[pk]) qstride[pk] = query_ix.stride(pos);
        std::size_t q = 0;
        for (std::size_t c = 0; c < base.size(); ++c) {
          base[c] = q;
          for (std::size_t pk = parents.size(); pk-- > 0;) {
            ++cell[pk];
            q += qstride[pk];
            if (cell[pk] < static_cast<int>(parent_ix.size(pk))) break;
            q -= qstride[pk] * cell[pk];
            cell[pk] = 0;
          }
        }
      }

      std::vector<std::vector<std::uint32_t>> groups(parent_ix.cells());
      for (std::size_t r = 0; r < n; ++r) {
        std::size_t code = 0;
        for (std::size_t pk = 0; pk < parents.size(); ++pk)
          code += static_cast<std::size_t>(out.value(r, parents[pk])) *
                  parent_ix.stride(pk);
        groups[code].push_back(static_cast<std::uint32_t>(r));
      }

      for (std::size_t c = 0; c < groups.size(); ++c) {
        const auto& rows = groups[c];
        if (rows.empty()) continue;
        double denom = 0.0;
        std::vector<double> mu(values, 0.0);
        for (std::size_t t = 0; t < values; ++t) {
          mu[t] = counts[base[c] + t * attr_stride];
          denom += mu[t];
        }
        double g = static_cast<double>(rows.size());
        if (denom > 0.0)
          for (double& x : mu) x *= g / denom;
        else
          mu.assign(values, g / values);  // no model mass: spread evenly
        auto col = synth_column(mu, rows.size(), rng);
        for (std::size_t idx = 0; idx < rows.size(); ++idx)
          out.set_value(rows[idx], attr, col[idx]);
      }
      processed[attr] = 1;
    }
  }
  return out;
}

Dataset synth_data(const GraphicalModel& model, RngStream& rng) {
  double t = std::max(0.0, model.total());
  return synth_data(model, static_cast<std::size_t>(std::llround(t)), rng);
}

}  // namespace msynth
