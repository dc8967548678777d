#include "msynth/census.hpp"

#include <charconv>

#include "msynth/errors.hpp"

namespace msynth {

namespace {

long long parse_label(const std::string& label, const std::string& attr) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(label.data(), label.data() + label.size(), v);
  if (ec != std::errc{} || ptr != label.data() + label.size() || v < 0)
    throw NonIntegerLabel("attribute " + attr + " label '" + label + "'");
  return v;
}

std::vector<long long> parse_labels(const Domain& domain, AttrId a) {
  const Attribute& attr = domain.attribute(a);
  std::vector<long long> out;
  out.reserve(attr.labels.size());
  for (const auto& l : attr.labels) out.push_back(parse_label(l, attr.name));
  return out;
}

std::vector<std::string> int_labels(long long count) {
  std::vector<std::string> out;
  out.reserve(count);
  for (long long i = 0; i < count; ++i) out.push_back(std::to_string(i));
  return out;
}

int valueh_bucket(long long v) {
  if (v <= 25000) return static_cast<int>(v / 5);
  if (v == 9999998) return 5001;
  if (v == 9999999) return 5002;
  return 5000;
}

int incwage_a(long long v) {
  if (v <= 5000) return static_cast<int>(v / 100);
  if (v < 9999998) return 50;
  return 51;
}

constexpr int kModuli[8] = {100, 20, 50, 25, 10, 5, 2, 1};

int incwage_b(long long v) {
  for (int k = 0; k < 8; ++k)
    if (v % kModuli[k] == 0) return k;
  return 7;
}

AttrId require(const Domain& domain, const std::string& name) {
  if (!domain.has(name))
    throw MissingAttribute("attribute " + name + " not in domain");
  return domain.index_of(name);
}

}  // namespace

TransformResult census_transform(const Dataset& data, const Domain& domain,
                                 const CensusNames& names) {
  const AttrId valueh = require(domain, names.valueh);
  const AttrId incwage = require(domain, names.incwage);
  auto valueh_values = parse_labels(domain, valueh);
  auto incwage_values = parse_labels(domain, incwage);

  TransformResult result;
  for (AttrId a = 0; a < static_cast<AttrId>(domain.attr_count()); ++a) {
    if (a == valueh) {
      result.domain.add(names.valueh, int_labels(5003));
    } else if (a == incwage) {
      result.domain.add(names.incwage + "_A", int_labels(52));
      result.domain.add(names.incwage + "_B", int_labels(8));
    } else {
      result.domain.add(domain.attribute(a).name, domain.attribute(a).labels);
    }
  }

  const std::size_t n = data.rows();
  result.data = Dataset(result.domain.attr_count(), n);
  for (AttrId a = 0, outa = 0; a < static_cast<AttrId>(domain.attr_count());
       ++a) {
    if (a == valueh) {
      for (std::size_t r = 0; r < n; ++r)
        result.data.set_value(r, outa,
                              valueh_bucket(valueh_values[data.value(r, a)]));
      ++outa;
    } else if (a == incwage) {
      for (std::size_t r = 0; r < n; ++r) {
        long long v = incwage_values[data.value(r, a)];
        result.data.set_value(r, outa, incwage_a(v));
        result.data.set_value(r, outa + 1, incwage_b(v));
      }
      outa += 2;
    } else {
      for (std::size_t r = 0; r < n; ++r)
        result.data.set_value(r, outa, data.value(r, a));
      ++outa;
    }
  }
  return result;
}

const std::vector<std::vector<int>>& incwage_digit_classes() {
  static const std::vector<std::vector<int>> classes = [] {
    std::vector<std::vector<int>> out(8);
    std::vector<bool> taken(100, false);
    for (int k = 0; k < 8; ++k) {
      for (int v = 0; v < 100; ++v) {
        if (taken[v] || v % kModuli[k] != 0) continue;
        taken[v] = true;
        out[k].push_back(v);
      }
    }
    return out;
  }();
  return classes;
}

int incwage_b_to_digits(int k, RngStream& rng) {
  if (k < 0 || k > 7) throw BadConfig("digit class must be in 0..7");
  const auto& cls = incwage_digit_classes()[k];
  return cls[rng.uniform_index(cls.size())];
}

TransformResult census_reverse(const Dataset& data, const Domain& domain,
                               RngStream& rng, const CensusNames& names) {
  const AttrId valueh = require(domain, names.valueh);
  const AttrId iwa = require(domain, names.incwage + "_A");
  const AttrId iwb = require(domain, names.incwage + "_B");
  if (iwb != iwa + 1)
    throw MissingAttribute(names.incwage +
                           "_B must directly follow " + names.incwage + "_A");
  auto valueh_values = parse_labels(domain, valueh);
  auto a_values = parse_labels(domain, iwa);
  auto b_values = parse_labels(domain, iwb);

  TransformResult result;
  for (AttrId a = 0; a < static_cast<AttrId>(domain.attr_count()); ++a) {
    if (a == valueh) {
      std::vector<std::string> labels;
      labels.reserve(5003);
      for (int t = 0; t <= 5000; ++t) labels.push_back(std::to_string(5 * t));
      labels.push_back("9999998");
      labels.push_back("9999999");
      result.domain.add(names.valueh, std::move(labels));
    } else if (a == iwa) {
      std::vector<std::string> labels = int_labels(5100);
      labels.push_back("9999998");
      result.domain.add(names.incwage, std::move(labels));
    } else if (a == iwb) {
      continue;
    } else {
      result.domain.add(domain.attribute(a).name, domain.attribute(a).labels);
    }
  }

  const std::size_t n = data.rows();
  result.data = Dataset(result.domain.attr_count(), n);
  for (AttrId a = 0, outa = 0; a < static_cast<AttrId>(domain.attr_count());
       ++a) {
    if (a == valueh) {
      for (std::size_t r = 0; r < n; ++r) {
        long long code = valueh_values[data.value(r, a)];
        if (code < 0 || code > 5002)
          throw UnknownValue("home-value bucket " + std::to_string(code));
        result.data.set_value(r, outa, static_cast<std::int32_t>(code));
      }
      ++outa;
    } else if (a == iwa) {
      for (std::size_t r = 0; r < n; ++r) {
        long long bucket = a_values[data.value(r, a)];
        long long cls = b_values[data.value(r, iwb)];
        if (bucket < 0 || bucket > 51)
          throw UnknownValue("income bucket " + std::to_string(bucket));
        std::int32_t v;
        if (bucket == 51) {
          v = 5100;  // sentinel label slot
        } else {
          v = static_cast<std::int32_t>(
              100 * bucket + incwage_b_to_digits(static_cast<int>(cls), rng));
        }
        result.data.set_value(r, outa, v);
      }
      ++outa;
    } else if (a == iwb) {
      continue;
    } else {
      for (std::size_t r = 0; r < n; ++r)
        result.data.set_value(r, outa, data.value(r, a));
      ++outa;
    }
  }
  return result;
}

}  // namespace msynth
