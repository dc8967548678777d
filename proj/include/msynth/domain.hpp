#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace msynth {

using AttrId = int;

// Ascending, duplicate-free set of attribute indices.
class Clique {
 public:
  Clique() = default;
  explicit Clique(std::vector<AttrId> attrs);

  const std::vector<AttrId>& attrs() const { return attrs_; }
  std::size_t size() const { return attrs_.size(); }
  bool contains(AttrId a) const;
  bool contains(const Clique& sub) const;
  bool intersects(const Clique& other) const;
  Clique set_union(const Clique& other) const;
  Clique set_intersection(const Clique& other) const;

  bool operator==(const Clique& o) const { return attrs_ == o.attrs_; }
  bool operator!=(const Clique& o) const { return attrs_ != o.attrs_; }
  bool operator<(const Clique& o) const { return attrs_ < o.attrs_; }

 private:
  std::vector<AttrId> attrs_;
};

struct Attribute {
  std::string name;
  std::vector<std::string> labels;
};

// Ordered attribute schema. Attribute order is the document order of the JSON
// spec and defines cell-index order everywhere downstream.
class Domain {
 public:
  void add(std::string name, std::vector<std::string> labels);
  void add(std::string name, std::size_t size);

  static Domain from_json_text(const std::string& text);
  static Domain load(const std::string& path);
  std::string to_json_text() const;

  std::size_t attr_count() const { return attrs_.size(); }
  const Attribute& attribute(AttrId a) const;
  std::size_t size(AttrId a) const { return attribute(a).labels.size(); }
  AttrId index_of(const std::string& name) const;
  bool has(const std::string& name) const;

  Clique clique_of(const std::vector<std::string>& names) const;
  Clique all_attrs() const;

  // Product of attribute sizes over the clique, saturating at uint64 max.
  std::uint64_t cells(const Clique& c) const;

  bool operator==(const Domain& o) const;

 private:
  std::vector<Attribute> attrs_;
};

// Row-major indexing over a clique's cell grid (attributes ascending, last
// attribute fastest).
class CellIndexer {
 public:
  CellIndexer(const Domain& domain, const Clique& clique);

  std::size_t cells() const { return cells_; }
  std::size_t attr_count() const { return sizes_.size(); }
  std::size_t size(std::size_t k) const { return sizes_[k]; }
  std::size_t stride(std::size_t k) const { return strides_[k]; }

  std::size_t encode(const std::vector<int>& values) const;
  void decode(std::size_t index, std::vector<int>& out) const;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> strides_;
  std::size_t cells_;
};

// Column-oriented records; values are label indices into the domain.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t attr_count, std::size_t rows);

  static Dataset load_csv(const std::string& path, const Domain& domain,
                          char delimiter = ',');
  static Dataset parse_csv(const std::string& text, const Domain& domain,
                           char delimiter = ',');
  void save_csv(const std::string& path, const Domain& domain,
                char delimiter = ',') const;
  std::string to_csv(const Domain& domain, char delimiter = ',') const;

  std::size_t rows() const { return rows_; }
  std::size_t attr_count() const { return columns_.size(); }
  std::int32_t value(std::size_t row, AttrId attr) const {
    return columns_[attr][row];
  }
  void set_value(std::size_t row, AttrId attr, std::int32_t v) {
    columns_[attr][row] = v;
  }
  const std::vector<std::int32_t>& column(AttrId attr) const {
    return columns_[attr];
  }
  std::vector<std::int32_t>& column(AttrId attr) { return columns_[attr]; }

 private:
  std::vector<std::vector<std::int32_t>> columns_;
  std::size_t rows_ = 0;
};

inline constexpr std::uint64_t kDefaultCellCap = 1000000;

// Dense contingency counts over the clique's cell grid.
std::vector<double> marginal(const Dataset& data, const Domain& domain,
                             const Clique& clique,
                             std::uint64_t cell_cap = kDefaultCellCap);

// Projects a dense vector over `from` down to `to` (a sub-clique) by summing.
std::vector<double> project_vector(const std::vector<double>& values,
                                   const Domain& domain, const Clique& from,
                                   const Clique& to);

}  // namespace msynth
