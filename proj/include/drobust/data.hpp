#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "drobust/errors.hpp"
#include "drobust/linear_model.hpp"
#include "drobust/rng.hpp"

namespace drobust {

/// In-memory dataset: dense features, class labels, and optional latent
/// category assignments. Non-numeric CSV columns are retained by name so
/// that groupings can refer to them later.
struct Dataset {
  std::vector<double> features;  // N x dim, row-major
  std::vector<int> labels;       // in [0, num_classes)
  std::vector<int> groups;       // in [0, num_groups); empty when absent
  int dim = 0;
  int num_classes = 0;
  int num_groups = 0;

  std::vector<std::string> feature_names;
  std::vector<std::string> metadata_names;
  std::vector<std::vector<std::string>> metadata_columns;

  std::size_t size() const { return labels.size(); }
  bool has_groups() const { return !groups.empty(); }

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }

  int group_of(std::size_t i) const { return has_groups() ? groups[i] : 0; }
  int group_count() const { return has_groups() ? num_groups : 1; }

  void validate() const {
    if (labels.empty()) throw DomainError("Dataset: empty");
    if (features.size() != labels.size() * static_cast<std::size_t>(dim)) {
      throw DomainError("Dataset: feature matrix shape mismatch");
    }
    for (int y : labels) {
      if (y < 0 || y >= num_classes) {
        throw DomainError("Dataset: label out of range [0, K)");
      }
    }
    if (has_groups()) {
      if (groups.size() != labels.size()) {
        throw DomainError("Dataset: group vector length mismatch");
      }
      for (int z : groups) {
        if (z < 0 || z >= num_groups) {
          throw DomainError("Dataset: group out of range [0, S)");
        }
      }
    }
  }
};

enum class DataFormat { LIBSVM, CSV };

inline DataFormat parse_format(const std::string& name) {
  if (name == "libsvm") return DataFormat::LIBSVM;
  if (name == "csv") return DataFormat::CSV;
  throw ConfigError("unknown data format \"" + name +
                    "\" (expected \"libsvm\" or \"csv\")");
}

enum class GroupingMode { ByClass, ByColumn, BySubcategoryLabels, Singleton };

/// How to assign latent categories to samples.
struct GroupingSpec {
  GroupingMode mode = GroupingMode::ByClass;
  std::string column;  // for ByColumn

  static GroupingSpec parse(const std::string& text) {
    GroupingSpec spec;
    if (text == "by_class") {
      spec.mode = GroupingMode::ByClass;
    } else if (text == "singleton") {
      spec.mode = GroupingMode::Singleton;
    } else if (text == "by_subcategory_labels") {
      spec.mode = GroupingMode::BySubcategoryLabels;
    } else if (text.rfind("by_column:", 0) == 0) {
      spec.mode = GroupingMode::ByColumn;
      spec.column = text.substr(10);
      if (spec.column.empty()) {
        throw ConfigError("grouping by_column: needs a column name");
      }
    } else {
      throw ConfigError("unknown grouping \"" + text + "\"");
    }
    return spec;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline bool parse_number(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* begin = t.data();
  const char* end = begin + t.size();
  if (*begin == '+') ++begin;  // from_chars rejects an explicit plus
  if (begin == end) return false;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

inline bool parse_integer(const std::string& text, long& out) {
  double value = 0.0;
  if (!parse_number(text, value)) return false;
  if (value != std::floor(value) || std::abs(value) > 1e15) return false;
  out = static_cast<long>(value);
  return true;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == sep) {
      fields.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  return fields;
}

/// Map raw label values to class indices. Nonnegative integers are kept
/// as-is with K = max + 1; any negative label (e.g. the LIBSVM -1/+1
/// convention) switches to a sorted-ascending remap.
inline void assign_labels(const std::vector<long>& raw, std::vector<int>& out,
                          int& num_classes) {
  long lo = raw[0], hi = raw[0];
  for (long v : raw) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  out.resize(raw.size());
  if (lo >= 0) {
    num_classes = static_cast<int>(hi) + 1;
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = static_cast<int>(raw[i]);
    return;
  }
  std::vector<long> distinct(raw);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  num_classes = static_cast<int>(distinct.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = static_cast<int>(
        std::lower_bound(distinct.begin(), distinct.end(), raw[i]) -
        distinct.begin());
  }
}

/// First-appearance mapping of arbitrary string values to contiguous ids,
/// except that a column of nonnegative integers keeps its integer values
/// (so written group ids survive a round-trip unchanged).
inline void assign_groups(const std::vector<std::string>& raw,
                          std::vector<int>& out, int& num_groups) {
  bool integral = true;
  std::vector<long> as_int(raw.size());
  for (std::size_t i = 0; i < raw.size() && integral; ++i) {
    integral = parse_integer(raw[i], as_int[i]) && as_int[i] >= 0;
  }
  out.resize(raw.size());
  if (integral) {
    long hi = 0;
    for (long v : as_int) hi = std::max(hi, v);
    num_groups = static_cast<int>(hi) + 1;
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = static_cast<int>(as_int[i]);
    return;
  }
  std::map<std::string, int> ids;
  num_groups = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto [it, inserted] = ids.try_emplace(raw[i], num_groups);
    if (inserted) ++num_groups;
    out[i] = it->second;
  }
}

}  // namespace detail

/// LIBSVM reader: "label idx:val ..." with 1-based sparse indices, densified
/// to the largest index seen across the file.
inline Dataset load_libsvm(std::istream& in) {
  std::vector<long> raw_labels;
  std::vector<std::vector<std::pair<int, double>>> rows;
  std::string line;
  std::size_t line_no = 0;
  int max_index = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = detail::trim(line);
    if (text.empty()) continue;
    std::istringstream fields(text);
    std::string token;
    fields >> token;
    long label = 0;
    if (!detail::parse_integer(token, label)) {
      throw ParseError("libsvm: label \"" + token + "\" is not an integer",
                       line_no);
    }
    std::vector<std::pair<int, double>> row;
    while (fields >> token) {
      const std::size_t colon = token.find(':');
      if (colon == std::string::npos) {
        throw ParseError("libsvm: expected idx:val, got \"" + token + "\"",
                         line_no);
      }
      long index = 0;
      double value = 0.0;
      if (!detail::parse_integer(token.substr(0, colon), index) || index < 1) {
        throw ParseError("libsvm: bad feature index in \"" + token + "\"",
                         line_no);
      }
      if (!detail::parse_number(token.substr(colon + 1), value)) {
        throw ParseError("libsvm: bad feature value in \"" + token + "\"",
                         line_no);
      }
      max_index = std::max(max_index, static_cast<int>(index));
      row.emplace_back(static_cast<int>(index) - 1, value);
    }
    raw_labels.push_back(label);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("libsvm: empty dataset");

  Dataset ds;
  ds.dim = std::max(max_index, 1);
  ds.features.assign(rows.size() * static_cast<std::size_t>(ds.dim), 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& [j, v] : rows[i]) {
      ds.features[i * static_cast<std::size_t>(ds.dim) + j] = v;
    }
  }
  detail::assign_labels(raw_labels, ds.labels, ds.num_classes);
  ds.feature_names.resize(ds.dim);
  for (int j = 0; j < ds.dim; ++j) ds.feature_names[j] = "x" + std::to_string(j);
  return ds;
}

/// CSV reader. The header must contain a "label" column; a "group" column,
/// when present, populates the latent categories. Every other column is a
/// numeric feature unless its first value fails to parse, in which case the
/// whole column is kept as named string metadata (usable by by_column
/// groupings).
inline Dataset load_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("csv: empty file");
  const std::vector<std::string> header = detail::split(detail::trim(line), ',');
  int label_col = -1, group_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = detail::trim(header[c]);
    if (name == "label") label_col = static_cast<int>(c);
    if (name == "group") group_col = static_cast<int>(c);
  }
  if (label_col < 0) throw ParseError("csv: no \"label\" column in header", 1);

  std::vector<std::vector<std::string>> cells;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> row = detail::split(line, ',');
    if (row.size() != header.size()) {
      throw ParseError("csv: expected " + std::to_string(header.size()) +
                           " fields, got " + std::to_string(row.size()),
                       line_no);
    }
    cells.push_back(std::move(row));
  }
  if (cells.empty()) throw ParseError("csv: no data rows");

  // Classify non-label, non-group columns as feature or metadata by the
  // first data row.
  std::vector<int> feature_cols, metadata_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (static_cast<int>(c) == label_col || static_cast<int>(c) == group_col) {
      continue;
    }
    double probe = 0.0;
    if (detail::parse_number(cells[0][c], probe)) {
      feature_cols.push_back(static_cast<int>(c));
    } else {
      metadata_cols.push_back(static_cast<int>(c));
    }
  }

  Dataset ds;
  ds.dim = static_cast<int>(feature_cols.size());
  if (ds.dim == 0) throw ParseError("csv: no numeric feature columns");
  const std::size_t n = cells.size();
  ds.features.resize(n * static_cast<std::size_t>(ds.dim));
  std::vector<long> raw_labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!detail::parse_integer(cells[i][label_col], raw_labels[i])) {
      throw ParseError("csv: label \"" + cells[i][label_col] +
                           "\" is not an integer",
                       i + 2);
    }
    for (std::size_t jc = 0; jc < feature_cols.size(); ++jc) {
      double value = 0.0;
      if (!detail::parse_number(cells[i][feature_cols[jc]], value)) {
        throw ParseError("csv: non-numeric feature \"" +
                             cells[i][feature_cols[jc]] + "\" in column \"" +
                             detail::trim(header[feature_cols[jc]]) + "\"",
                         i + 2);
      }
      ds.features[i * static_cast<std::size_t>(ds.dim) + jc] = value;
    }
  }
  detail::assign_labels(raw_labels, ds.labels, ds.num_classes);

  for (int c : feature_cols) ds.feature_names.push_back(detail::trim(header[c]));
  for (int c : metadata_cols) {
    ds.metadata_names.push_back(detail::trim(header[c]));
    std::vector<std::string> column(n);
    for (std::size_t i = 0; i < n; ++i) column[i] = cells[i][c];
    ds.metadata_columns.push_back(std::move(column));
  }
  if (group_col >= 0) {
    std::vector<std::string> raw(n);
    for (std::size_t i = 0; i < n; ++i) raw[i] = detail::trim(cells[i][group_col]);
    detail::assign_groups(raw, ds.groups, ds.num_groups);
    ds.metadata_names.push_back("group");
    ds.metadata_columns.push_back(std::move(raw));
  }
  return ds;
}

inline Dataset load(const std::string& path, DataFormat format) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path);
  return format == DataFormat::LIBSVM ? load_libsvm(in) : load_csv(in);
}

/// Write label, group (when present), and features; 17 significant digits so
/// a reload reproduces every value exactly.
inline void write_csv(const Dataset& ds, std::ostream& out) {
  out << "label";
  if (ds.has_groups()) out << ",group";
  for (int j = 0; j < ds.dim; ++j) {
    out << ","
        << (j < static_cast<int>(ds.feature_names.size()) ? ds.feature_names[j]
                                                          : "x" + std::to_string(j));
  }
  out << "\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.labels[i];
    if (ds.has_groups()) out << "," << ds.groups[i];
    for (int j = 0; j < ds.dim; ++j) {
      out << "," << format_double(ds.features[i * static_cast<std::size_t>(ds.dim) + j]);
    }
    out << "\n";
  }
}

inline void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  write_csv(ds, out);
}

/// Assign latent categories per the grouping spec. Features and labels are
/// untouched.
inline Dataset apply_grouping(const Dataset& ds, const GroupingSpec& spec) {
  Dataset out = ds;
  switch (spec.mode) {
    case GroupingMode::ByClass:
      out.groups = ds.labels;
      out.num_groups = ds.num_classes;
      break;
    case GroupingMode::Singleton:
      out.groups.resize(ds.size());
      std::iota(out.groups.begin(), out.groups.end(), 0);
      out.num_groups = static_cast<int>(ds.size());
      break;
    case GroupingMode::BySubcategoryLabels:
      if (!ds.has_groups()) {
        throw ConfigError(
            "grouping by_subcategory_labels: dataset has no group column");
      }
      break;  // already contiguous from loading
    case GroupingMode::ByColumn: {
      const auto it = std::find(ds.metadata_names.begin(),
                                ds.metadata_names.end(), spec.column);
      if (it == ds.metadata_names.end()) {
        throw ConfigError("grouping by_column: no column named \"" +
                          spec.column + "\"");
      }
      const auto& raw =
          ds.metadata_columns[it - ds.metadata_names.begin()];
      std::map<std::string, int> ids;
      out.groups.resize(ds.size());
      out.num_groups = 0;
      for (std::size_t i = 0; i < raw.size(); ++i) {
        auto [entry, inserted] = ids.try_emplace(raw[i], out.num_groups);
        if (inserted) ++out.num_groups;
        out.groups[i] = entry->second;
      }
      break;
    }
  }
  return out;
}

/// Build the sub-category shift task: classes are ranked by descending count
/// (ties toward the smaller class id), ranks 1, 3, 5, ... become the positive
/// class and the rest the negative class, while the original classes become
/// the latent categories. Positive maps to class index 0.
inline Dataset make_subcategory_task(const Dataset& ds) {
  if (ds.num_classes < 2) {
    throw DomainError("make_subcategory_task: need at least 2 classes");
  }
  std::vector<std::int64_t> counts(ds.num_classes, 0);
  for (int y : ds.labels) ++counts[y];
  std::vector<int> order(ds.num_classes);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (counts[a] != counts[b]) return counts[a] > counts[b];
    return a < b;
  });
  std::vector<int> binary_of_class(ds.num_classes);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    binary_of_class[order[rank]] = rank % 2 == 0 ? 0 : 1;
  }

  Dataset out = ds;
  out.groups = ds.labels;
  out.num_groups = ds.num_classes;
  out.num_classes = 2;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out.labels[i] = binary_of_class[ds.labels[i]];
  }
  return out;
}

/// One Gaussian class-conditional component inside a latent category.
struct GaussianComponent {
  int label = 0;
  std::vector<double> mean;
  double stddev = 1.0;
  double weight = 1.0;
};

/// p(x, y | z) for one latent category: a mixture of labelled Gaussians.
struct GroupModel {
  std::vector<GaussianComponent> components;
};

namespace detail {

inline void check_priors(std::span<const double> priors, std::size_t n_groups,
                         const char* which) {
  if (priors.size() != n_groups) {
    throw DomainError(std::string("synth_prior_shift: ") + which +
                      " priors size mismatch");
  }
  double total = 0.0;
  for (double p : priors) {
    if (!(p >= 0.0)) {
      throw DomainError(std::string("synth_prior_shift: negative ") + which +
                        " prior");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw DomainError(std::string("synth_prior_shift: ") + which +
                      " priors must sum to 1");
  }
}

inline Dataset sample_split(Rng& rng, const std::vector<GroupModel>& groups,
                            std::span<const double> priors, std::size_t count,
                            int dim, int num_classes) {
  Dataset ds;
  ds.dim = dim;
  ds.num_classes = num_classes;
  ds.num_groups = static_cast<int>(groups.size());
  ds.features.resize(count * static_cast<std::size_t>(dim));
  ds.labels.resize(count);
  ds.groups.resize(count);
  ds.feature_names.resize(dim);
  for (int j = 0; j < dim; ++j) ds.feature_names[j] = "x" + std::to_string(j);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t z = rng.categorical(priors);
    std::vector<double> mix;
    mix.reserve(groups[z].components.size());
    for (const auto& comp : groups[z].components) mix.push_back(comp.weight);
    const auto& comp = groups[z].components[rng.categorical(mix)];
    for (int j = 0; j < dim; ++j) {
      ds.features[i * static_cast<std::size_t>(dim) + j] =
          comp.mean[j] + comp.stddev * rng.normal();
    }
    ds.labels[i] = comp.label;
    ds.groups[i] = static_cast<int>(z);
  }
  return ds;
}

}  // namespace detail

/// Latent prior probability change generator: train and test share the
/// per-category conditionals; only the category priors differ.
inline std::pair<Dataset, Dataset> synth_prior_shift(
    std::uint64_t seed, const std::vector<GroupModel>& groups,
    std::span<const double> train_priors, std::span<const double> test_priors,
    std::size_t n_train, std::size_t n_test) {
  if (groups.empty()) throw DomainError("synth_prior_shift: no groups");
  detail::check_priors(train_priors, groups.size(), "train");
  detail::check_priors(test_priors, groups.size(), "test");
  if (n_train < 1 || n_test < 1) {
    throw DomainError("synth_prior_shift: need n_train, n_test >= 1");
  }
  int dim = -1;
  int max_label = 0;
  for (const auto& group : groups) {
    if (group.components.empty()) {
      throw DomainError("synth_prior_shift: group without components");
    }
    for (const auto& comp : group.components) {
      if (comp.label < 0) throw DomainError("synth_prior_shift: negative label");
      if (!(comp.stddev > 0.0)) {
        throw DomainError("synth_prior_shift: stddev must be > 0");
      }
      if (dim < 0) dim = static_cast<int>(comp.mean.size());
      if (static_cast<int>(comp.mean.size()) != dim) {
        throw DomainError("synth_prior_shift: inconsistent mean dimensions");
      }
      max_label = std::max(max_label, comp.label);
    }
  }
  if (dim < 1) throw DomainError("synth_prior_shift: zero-dimensional means");

  Rng rng(seed);
  Dataset train = detail::sample_split(rng, groups, train_priors, n_train, dim,
                                       max_label + 1);
  Dataset test = detail::sample_split(rng, groups, test_priors, n_test, dim,
                                      max_label + 1);
  return {std::move(train), std::move(test)};
}

/// Take the rows at `indices`, keeping label/group spaces intact.
inline Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
  Dataset out;
  out.dim = ds.dim;
  out.num_classes = ds.num_classes;
  out.num_groups = ds.num_groups;
  out.feature_names = ds.feature_names;
  out.features.resize(indices.size() * static_cast<std::size_t>(ds.dim));
  out.labels.resize(indices.size());
  if (ds.has_groups()) out.groups.resize(indices.size());
  out.metadata_names = ds.metadata_names;
  out.metadata_columns.resize(ds.metadata_columns.size());
  for (std::size_t c = 0; c < ds.metadata_columns.size(); ++c) {
    out.metadata_columns[c].resize(indices.size());
  }
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t src = indices[i];
    std::copy_n(ds.features.data() + src * static_cast<std::size_t>(ds.dim),
                ds.dim, out.features.data() + i * static_cast<std::size_t>(ds.dim));
    out.labels[i] = ds.labels[src];
    if (ds.has_groups()) out.groups[i] = ds.groups[src];
    for (std::size_t c = 0; c < ds.metadata_columns.size(); ++c) {
      out.metadata_columns[c][i] = ds.metadata_columns[c][src];
    }
  }
  return out;
}

/// Group-stratified, seed-deterministic k-fold partition. Folds are disjoint
/// and cover all indices; validation fold v collects every stratum's members
/// dealt to v.
inline std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>>
kfold_split(const Dataset& ds, int folds, std::uint64_t seed) {
  if (folds < 2) throw DomainError("kfold_split: need folds >= 2");
  if (static_cast<std::size_t>(folds) > ds.size()) {
    throw DomainError("kfold_split: more folds than samples");
  }
  std::vector<std::vector<std::size_t>> strata;
  if (ds.has_groups()) {
    strata.resize(ds.num_groups);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      strata[ds.groups[i]].push_back(i);
    }
    for (int g = 0; g < ds.num_groups; ++g) {
      if (strata[g].size() < static_cast<std::size_t>(folds)) {
        throw ConfigError("kfold_split: group " + std::to_string(g) +
                          " has only " + std::to_string(strata[g].size()) +
                          " members but needs >= " + std::to_string(folds));
      }
    }
  } else {
    strata.resize(1);
    strata[0].resize(ds.size());
    std::iota(strata[0].begin(), strata[0].end(), 0);
  }

  Rng rng(seed);
  std::vector<std::vector<std::size_t>> fold_members(folds);
  for (auto& stratum : strata) {
    rng.shuffle(stratum);
    for (std::size_t i = 0; i < stratum.size(); ++i) {
      fold_members[i % folds].push_back(stratum[i]);
    }
  }

  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> out;
  out.reserve(folds);
  for (int v = 0; v < folds; ++v) {
    std::vector<std::size_t> valid = fold_members[v];
    std::sort(valid.begin(), valid.end());
    std::vector<std::size_t> train;
    train.reserve(ds.size() - valid.size());
    for (int u = 0; u < folds; ++u) {
      if (u == v) continue;
      train.insert(train.end(), fold_members[u].begin(), fold_members[u].end());
    }
    std::sort(train.begin(), train.end());
    out.emplace_back(std::move(train), std::move(valid));
  }
  return out;
}

/// Group-stratified random train/test split. Every stratum contributes at
/// least one sample to each side.
inline std::pair<Dataset, Dataset> train_test_split(const Dataset& ds,
                                                    double train_fraction,
                                                    std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw DomainError("train_test_split: fraction must lie in (0, 1)");
  }
  std::vector<std::vector<std::size_t>> strata;
  if (ds.has_groups()) {
    strata.resize(ds.num_groups);
    for (std::size_t i = 0; i < ds.size(); ++i) strata[ds.groups[i]].push_back(i);
    for (int g = 0; g < ds.num_groups; ++g) {
      if (strata[g].size() < 2) {
        throw ConfigError("train_test_split: group " + std::to_string(g) +
                          " has fewer than 2 members");
      }
    }
  } else {
    if (ds.size() < 2) throw ConfigError("train_test_split: need >= 2 samples");
    strata.resize(1);
    strata[0].resize(ds.size());
    std::iota(strata[0].begin(), strata[0].end(), 0);
  }

  Rng rng(seed);
  std::vector<std::size_t> train_idx, test_idx;
  for (auto& stratum : strata) {
    rng.shuffle(stratum);
    std::size_t take = static_cast<std::size_t>(
        std::lround(train_fraction * static_cast<double>(stratum.size())));
    take = std::clamp<std::size_t>(take, 1, stratum.size() - 1);
    train_idx.insert(train_idx.end(), stratum.begin(), stratum.begin() + take);
    test_idx.insert(test_idx.end(), stratum.begin() + take, stratum.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {subset(ds, train_idx), subset(ds, test_idx)};
}

/// Per-feature affine scaling fitted on one dataset and reused on another.
struct FeatureScaling {
  std::vector<double> mean;
  std::vector<double> scale;
};

inline FeatureScaling fit_standardizer(const Dataset& ds) {
  FeatureScaling fs;
  fs.mean.assign(ds.dim, 0.0);
  fs.scale.assign(ds.dim, 1.0);
  const double n = static_cast<double>(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (int j = 0; j < ds.dim; ++j) {
      fs.mean[j] += ds.features[i * static_cast<std::size_t>(ds.dim) + j];
    }
  }
  for (int j = 0; j < ds.dim; ++j) fs.mean[j] /= n;
  std::vector<double> var(ds.dim, 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (int j = 0; j < ds.dim; ++j) {
      const double c =
          ds.features[i * static_cast<std::size_t>(ds.dim) + j] - fs.mean[j];
      var[j] += c * c;
    }
  }
  for (int j = 0; j < ds.dim; ++j) {
    const double sd = std::sqrt(var[j] / n);
    fs.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  return fs;
}

inline Dataset apply_standardizer(const Dataset& ds, const FeatureScaling& fs) {
  Dataset out = ds;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (int j = 0; j < ds.dim; ++j) {
      auto& cell = out.features[i * static_cast<std::size_t>(ds.dim) + j];
      cell = (cell - fs.mean[j]) / fs.scale[j];
    }
  }
  return out;
}

}  // namespace drobust
