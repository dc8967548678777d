#include "msynth/compression.hpp"

#include <algorithm>
#include <iostream>
#include <map>

#include "msynth/errors.hpp"

namespace msynth {

namespace {

const Measurement* find_oneway(const MeasurementLog& log, AttrId attr) {
  for (const auto& m : log.items())
    if (m.kind == TransformKind::identity && m.clique == Clique({attr}))
      return &m;
  return nullptr;
}

std::string reserve_label(const std::vector<std::string>& kept) {
  std::string label = "__other__";
  while (std::find(kept.begin(), kept.end(), label) != kept.end())
    label += "_";
  return label;
}

}  // namespace

CompressionResult compress_domain(const MeasurementLog& oneway_log,
                                  const Dataset& data, const Domain& domain) {
  const int d = static_cast<int>(domain.attr_count());
  CompressionResult result;
  result.map.attrs.resize(d);
  for (AttrId a = 0; a < d; ++a) {
    const Measurement* m = find_oneway(oneway_log, a);
    if (!m)
      throw MissingOneWay("no one-way measurement for attribute " +
                          domain.attribute(a).name);
    const std::size_t size = domain.size(a);
    if (m->noisy_values.size() != size)
      throw LengthMismatch("one-way measurement length for " +
                           domain.attribute(a).name);
    AttributeMap& am = result.map.attrs[a];
    am.forward.assign(size, 0);
    std::vector<std::string> kept_labels;
    const double cut = 3.0 * m->sigma;
    for (std::size_t t = 0; t < size; ++t) {
      if (m->noisy_values[t] >= cut) {
        am.forward[t] = static_cast<std::int32_t>(kept_labels.size());
        kept_labels.push_back(domain.attribute(a).labels[t]);
      }
    }
    am.other = static_cast<std::int32_t>(kept_labels.size());
    for (std::size_t t = 0; t < size; ++t) {
      if (m->noisy_values[t] < cut) {
        am.forward[t] = am.other;
        am.merged.push_back(static_cast<std::int32_t>(t));
      }
    }
    kept_labels.push_back(reserve_label(kept_labels));
    result.domain.add(domain.attribute(a).name, std::move(kept_labels));
  }
  result.data = apply_compression(data, result.map);
  return result;
}

Dataset apply_compression(const Dataset& data, const CompressionMap& map) {
  if (data.attr_count() != map.attrs.size())
    throw DomainMismatch("dataset does not match the compression map");
  Dataset out(data.attr_count(), data.rows());
  for (AttrId a = 0; a < static_cast<AttrId>(data.attr_count()); ++a) {
    const auto& fwd = map.attrs[a].forward;
    for (std::size_t r = 0; r < data.rows(); ++r) {
      std::int32_t v = data.value(r, a);
      if (v < 0 || v >= static_cast<std::int32_t>(fwd.size()))
        throw UnknownValue("value index " + std::to_string(v) +
                           " outside attribute " + std::to_string(a));
      out.set_value(r, a, fwd[v]);
    }
  }
  return out;
}

MeasurementLog reexpress_measurements(const MeasurementLog& log,
                                      const CompressionMap& map) {
  MeasurementLog out;
  if (log.seed()) out.set_seed_record(*log.seed(), log.stream());
  for (const auto& m : log.items()) {
    if (m.kind != TransformKind::identity)
      throw BadConfig("can only re-express identity measurements");
    const auto& attrs = m.clique.attrs();
    const std::size_t k = attrs.size();
    std::vector<std::size_t> orig_size(k), comp_size(k);
    for (std::size_t i = 0; i < k; ++i) {
      if (attrs[i] < 0 || attrs[i] >= static_cast<AttrId>(map.attrs.size()))
        throw UnknownAttribute("measured attribute outside the map");
      orig_size[i] = map.attrs[attrs[i]].forward.size();
      comp_size[i] =
          static_cast<std::size_t>(map.attrs[attrs[i]].other) + 1;
    }
    std::vector<std::size_t> comp_stride(k, 1);
    for (std::size_t i = k; i-- > 1;)
      comp_stride[i - 1] = comp_stride[i] * comp_size[i];
    std::size_t comp_cells = comp_stride.empty() ? 1 : comp_stride[0] * comp_size[0];

    std::vector<double> sums(comp_cells, 0.0);
    std::vector<std::size_t> counts(comp_cells, 0);
    std::vector<int> cell(k, 0);
    for (std::size_t orig = 0; orig < m.noisy_values.size(); ++orig) {
      std::size_t code = 0;
      for (std::size_t i = 0; i < k; ++i)
        code += static_cast<std::size_t>(
                    map.attrs[attrs[i]].forward[cell[i]]) *
                comp_stride[i];
      sums[code] += m.noisy_values[orig];
      ++counts[code];
      for (std::size_t i = k; i-- > 0;) {
        ++cell[i];
        if (cell[i] < static_cast<int>(orig_size[i])) break;
        cell[i] = 0;
      }
    }

    Measurement agg;
    agg.clique = m.clique;
    agg.kind = TransformKind::aggregate;
    agg.weight = m.weight;
    agg.sigma = m.sigma;
    for (std::size_t code = 0; code < comp_cells; ++code) {
      if (counts[code] == 0) continue;  // reserve cell with empty preimage
      agg.noisy_values.push_back(sums[code]);
      agg.rows.push_back(AggregateRow{code, counts[code]});
    }
    out.append(std::move(agg));
  }
  return out;
}

Dataset decompress(const Dataset& data, const CompressionMap& map,
                   RngStream& rng) {
  if (data.attr_count() != map.attrs.size())
    throw DomainMismatch("dataset does not match the compression map");
  const std::size_t n = data.rows();
  Dataset out(data.attr_count(), n);
  for (AttrId a = 0; a < static_cast<AttrId>(data.attr_count()); ++a) {
    const AttributeMap& am = map.attrs[a];
    std::vector<std::int32_t> inverse(am.other, -1);
    for (std::size_t t = 0; t < am.forward.size(); ++t)
      if (am.forward[t] != am.other)
        inverse[am.forward[t]] = static_cast<std::int32_t>(t);

    std::vector<std::size_t> pending;
    for (std::size_t r = 0; r < n; ++r) {
      std::int32_t v = data.value(r, a);
      if (v == am.other) {
        pending.push_back(r);
      } else {
        if (v < 0 || v >= am.other || inverse[v] < 0)
          throw UnknownValue("compressed value " + std::to_string(v) +
                             " for attribute " + std::to_string(a));
        out.set_value(r, a, inverse[v]);
      }
    }
    if (pending.empty()) continue;

    if (am.merged.empty()) {
      std::cerr << "warning: attribute " << a
                << " has reserve-cell records but nothing was merged; "
                   "drawing uniformly\n";
      for (std::size_t r : pending)
        out.set_value(r, a, static_cast<std::int32_t>(
                                rng.uniform_index(am.forward.size())));
      continue;
    }

    // Floor share per merged original, remainder to a shuffled prefix, then
    // shuffle the whole replacement pool so no row position is favored.
    std::vector<std::int32_t> order = am.merged;
    rng.shuffle(order);
    const std::size_t share = pending.size() / order.size();
    const std::size_t extra = pending.size() % order.size();
    std::vector<std::int32_t> pool;
    pool.reserve(pending.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      std::size_t copies = share + (i < extra ? 1 : 0);
      pool.insert(pool.end(), copies, order[i]);
    }
    rng.shuffle(pool);
    for (std::size_t i = 0; i < pending.size(); ++i)
      out.set_value(pending[i], a, pool[i]);
  }
  return out;
}

}  // namespace msynth
