#include "msynth/domain.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "msynth/errors.hpp"

namespace msynth {

Clique::Clique(std::vector<AttrId> attrs) : attrs_(std::move(attrs)) {
  std::sort(attrs_.begin(), attrs_.end());
  for (std::size_t i = 0; i < attrs_.size(); ++i) {
    if (attrs_[i] < 0) throw UnknownAttribute("negative attribute index");
    if (i > 0 && attrs_[i] == attrs_[i - 1])
      throw SameAttribute("attribute " + std::to_string(attrs_[i]) +
                          " repeated in clique");
  }
}

bool Clique::contains(AttrId a) const {
  return std::binary_search(attrs_.begin(), attrs_.end(), a);
}

bool Clique::contains(const Clique& sub) const {
  return std::includes(attrs_.begin(), attrs_.end(), sub.attrs_.begin(),
                       sub.attrs_.end());
}

bool Clique::intersects(const Clique& other) const {
  for (AttrId a : other.attrs_)
    if (contains(a)) return true;
  return false;
}

Clique Clique::set_union(const Clique& other) const {
  std::vector<AttrId> out;
  std::set_union(attrs_.begin(), attrs_.end(), other.attrs_.begin(),
                 other.attrs_.end(), std::back_inserter(out));
  return Clique(std::move(out));
}

Clique Clique::set_intersection(const Clique& other) const {
  std::vector<AttrId> out;
  std::set_intersection(attrs_.begin(), attrs_.end(), other.attrs_.begin(),
                        other.attrs_.end(), std::back_inserter(out));
  return Clique(std::move(out));
}

void Domain::add(std::string name, std::vector<std::string> labels) {
  if (name.empty()) throw ParseError("empty attribute name");
  if (has(name)) throw DuplicateAttribute(name);
  if (labels.empty()) throw EmptyDomain("attribute " + name + " has no values");
  std::unordered_set<std::string> seen;
  for (const auto& l : labels)
    if (!seen.insert(l).second)
      throw DuplicateAttribute("label " + l + " repeated in " + name);
  attrs_.push_back(Attribute{std::move(name), std::move(labels)});
}

void Domain::add(std::string name, std::size_t size) {
  std::vector<std::string> labels;
  labels.reserve(size);
  for (std::size_t i = 0; i < size; ++i) labels.push_back(std::to_string(i));
  add(std::move(name), std::move(labels));
}

Domain Domain::from_json_text(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("domain spec: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("domain spec must be a JSON object");
  Domain d;
  for (auto& [name, val] : j.items()) {
    if (val.is_number_unsigned() || val.is_number_integer()) {
      long long n = val.get<long long>();
      if (n <= 0) throw ParseError("attribute " + name + " size must be > 0");
      d.add(name, static_cast<std::size_t>(n));
    } else if (val.is_array()) {
      std::vector<std::string> labels;
      for (auto& v : val) {
        if (!v.is_string())
          throw ParseError("attribute " + name + " labels must be strings");
        labels.push_back(v.get<std::string>());
      }
      d.add(name, std::move(labels));
    } else {
      throw ParseError("attribute " + name + " must map to a size or labels");
    }
  }
  if (d.attr_count() == 0) throw EmptyDomain("no attributes in domain spec");
  return d;
}

Domain Domain::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string Domain::to_json_text() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& a : attrs_) j[a.name] = a.labels;
  return j.dump(2);
}

const Attribute& Domain::attribute(AttrId a) const {
  if (a < 0 || static_cast<std::size_t>(a) >= attrs_.size())
    throw UnknownAttribute("index " + std::to_string(a));
  return attrs_[a];
}

AttrId Domain::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < attrs_.size(); ++i)
    if (attrs_[i].name == name) return static_cast<AttrId>(i);
  throw UnknownAttribute(name);
}

bool Domain::has(const std::string& name) const {
  for (const auto& a : attrs_)
    if (a.name == name) return true;
  return false;
}

Clique Domain::clique_of(const std::vector<std::string>& names) const {
  std::vector<AttrId> ids;
  ids.reserve(names.size());
  for (const auto& n : names) ids.push_back(index_of(n));
  return Clique(std::move(ids));
}

Clique Domain::all_attrs() const {
  std::vector<AttrId> ids(attrs_.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<AttrId>(i);
  return Clique(std::move(ids));
}

std::uint64_t Domain::cells(const Clique& c) const {
  std::uint64_t n = 1;
  for (AttrId a : c.attrs()) {
    std::uint64_t s = size(a);
    if (s != 0 && n > std::numeric_limits<std::uint64_t>::max() / s)
      return std::numeric_limits<std::uint64_t>::max();
    n *= s;
  }
  return n;
}

bool Domain::operator==(const Domain& o) const {
  if (attrs_.size() != o.attrs_.size()) return false;
  for (std::size_t i = 0; i < attrs_.size(); ++i)
    if (attrs_[i].name != o.attrs_[i].name ||
        attrs_[i].labels != o.attrs_[i].labels)
      return false;
  return true;
}

CellIndexer::CellIndexer(const Domain& domain, const Clique& clique) {
  sizes_.reserve(clique.size());
  for (AttrId a : clique.attrs()) sizes_.push_back(domain.size(a));
  strides_.assign(sizes_.size(), 1);
  cells_ = 1;
  for (std::size_t k = sizes_.size(); k-- > 0;) {
    strides_[k] = cells_;
    if (sizes_[k] != 0 &&
        cells_ > std::numeric_limits<std::size_t>::max() / sizes_[k])
      throw CliqueTooLarge("cell grid overflows");
    cells_ *= sizes_[k];
  }
}

std::size_t CellIndexer::encode(const std::vector<int>& values) const {
  if (values.size() != sizes_.size())
    throw LengthMismatch("cell coordinate arity");
  std::size_t idx = 0;
  for (std::size_t k = 0; k < sizes_.size(); ++k) {
    if (values[k] < 0 || static_cast<std::size_t>(values[k]) >= sizes_[k])
      throw UnknownValue("coordinate out of range");
    idx += static_cast<std::size_t>(values[k]) * strides_[k];
  }
  return idx;
}

void CellIndexer::decode(std::size_t index, std::vector<int>& out) const {
  out.resize(sizes_.size());
  for (std::size_t k = 0; k < sizes_.size(); ++k) {
    out[k] = static_cast<int>(index / strides_[k] % sizes_[k]);
  }
}

Dataset::Dataset(std::size_t attr_count, std::size_t rows) : rows_(rows) {
  columns_.assign(attr_count, std::vector<std::int32_t>(rows, 0));
}

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == delim) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Dataset Dataset::parse_csv(const std::string& text, const Domain& domain,
                           char delimiter) {
  std::vector<std::string> lines;
  std::string cur;
  for (char ch : text) {
    if (ch == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) {
    if (cur.back() == '\r') cur.pop_back();
    lines.push_back(cur);
  }
  if (lines.empty()) throw ParseError("empty dataset file");

  auto header = split_line(lines[0], delimiter);
  if (header.size() != domain.attr_count())
    throw HeaderMismatch("expected " + std::to_string(domain.attr_count()) +
                         " columns, found " + std::to_string(header.size()));
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] != domain.attribute(static_cast<AttrId>(i)).name)
      throw HeaderMismatch("column " + std::to_string(i) + " is '" +
                           header[i] + "', expected '" +
                           domain.attribute(static_cast<AttrId>(i)).name + "'");

  std::vector<std::unordered_map<std::string, std::int32_t>> lookup(
      domain.attr_count());
  for (std::size_t a = 0; a < domain.attr_count(); ++a) {
    const auto& labels = domain.attribute(static_cast<AttrId>(a)).labels;
    for (std::size_t v = 0; v < labels.size(); ++v)
      lookup[a][labels[v]] = static_cast<std::int32_t>(v);
  }

  Dataset d(domain.attr_count(), lines.size() - 1);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto fields = split_line(lines[r], delimiter);
    if (fields.size() != domain.attr_count())
      throw ParseError("row " + std::to_string(r) + " has " +
                       std::to_string(fields.size()) + " fields");
    for (std::size_t a = 0; a < fields.size(); ++a) {
      auto it = lookup[a].find(fields[a]);
      if (it == lookup[a].end())
        throw UnknownValue("'" + fields[a] + "' for attribute " +
                           domain.attribute(static_cast<AttrId>(a)).name);
      d.columns_[a][r - 1] = it->second;
    }
  }
  return d;
}

Dataset Dataset::load_csv(const std::string& path, const Domain& domain,
                          char delimiter) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), domain, delimiter);
}

std::string Dataset::to_csv(const Domain& domain, char delimiter) const {
  if (attr_count() != domain.attr_count())
    throw DomainMismatch("dataset has " + std::to_string(attr_count()) +
                         " columns, domain has " +
                         std::to_string(domain.attr_count()));
  std::string out;
  for (std::size_t a = 0; a < domain.attr_count(); ++a) {
    const auto& name = domain.attribute(static_cast<AttrId>(a)).name;
    if (name.find(delimiter) != std::string::npos)
      throw ParseError("attribute name contains the delimiter: " + name);
    if (a) out.push_back(delimiter);
    out += name;
  }
  out.push_back('\n');
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t a = 0; a < attr_count(); ++a) {
      const auto& label =
          domain.attribute(static_cast<AttrId>(a)).labels[columns_[a][r]];
      if (label.find(delimiter) != std::string::npos)
        throw ParseError("label contains the delimiter: " + label);
      if (a) out.push_back(delimiter);
      out += label;
    }
    out.push_back('\n');
  }
  return out;
}

void Dataset::save_csv(const std::string& path, const Domain& domain,
                       char delimiter) const {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << to_csv(domain, delimiter);
}

std::vector<double> marginal(const Dataset& data, const Domain& domain,
                             const Clique& clique, std::uint64_t cell_cap) {
  if (clique.size() == 0) throw TooFewAttributes("empty clique");
  std::uint64_t n = domain.cells(clique);
  if (n > cell_cap)
    throw CliqueTooLarge(std::to_string(n) + " cells exceeds cap " +
                         std::to_string(cell_cap));
  CellIndexer ix(domain, clique);
  std::vector<double> out(ix.cells(), 0.0);
  const auto& attrs = clique.attrs();
  for (std::size_t r = 0; r < data.rows(); ++r) {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < attrs.size(); ++k)
      idx += static_cast<std::size_t>(data.value(r, attrs[k])) * ix.stride(k);
    out[idx] += 1.0;
  }
  return out;
}

std::vector<double> project_vector(const std::vector<double>& values,
                                   const Domain& domain, const Clique& from,
                                   const Clique& to) {
  if (!from.contains(to))
    throw BadConfig("projection target is not a sub-clique");
  CellIndexer from_ix(domain, from);
  CellIndexer to_ix(domain, to);
  if (values.size() != from_ix.cells())
    throw LengthMismatch("vector length does not match clique cells");

  // Stride of each source digit inside the target index (0 when the attribute
  // is summed out).
  std::vector<std::size_t> to_stride(from.size(), 0);
  for (std::size_t k = 0; k < from.size(); ++k) {
    for (std::size_t m = 0; m < to.size(); ++m)
      if (from.attrs()[k] == to.attrs()[m]) to_stride[k] = to_ix.stride(m);
  }

  std::vector<double> out(to_ix.cells(), 0.0);
  std::vector<std::size_t> digit(from.size(), 0);
  std::size_t tidx = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[tidx] += values[i];
    for (std::size_t k = from.size(); k-- > 0;) {
      ++digit[k];
      tidx += to_stride[k];
      if (digit[k] < from_ix.size(k)) break;
      tidx -= to_stride[k] * digit[k];
      digit[k] = 0;
    }
  }
  return out;
}

}  // namespace msynth
