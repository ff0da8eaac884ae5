#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "overlapctl/errors.hpp"
#include "overlapctl/rng.hpp"

namespace overlapctl {

enum class Label : std::uint8_t { majority = 0, minority = 1 };

enum class Format { csv, keel_dat };

/// Binary-labeled feature matrix. Instance identity is the row index; all
/// operations that produce subsets keep the surviving rows in their original
/// relative order. The minority/majority roles are fixed when the dataset is
/// built and carried through subsets unchanged (a fold or an under-sampled
/// training set keeps the roles of its parent even if the counts invert).
struct Dataset {
  Eigen::MatrixXd features;               // n x m
  std::vector<Label> labels;              // length n
  std::vector<std::string> feature_names; // length m
  std::string label_name = "class";
  std::string minority_label = "positive";
  std::string majority_label = "negative";
  std::string source;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }

  bool is_minority(Eigen::Index i) const { return labels[static_cast<std::size_t>(i)] == Label::minority; }

  Eigen::Index minority_count() const {
    return static_cast<Eigen::Index>(
        std::count(labels.begin(), labels.end(), Label::minority));
  }
  Eigen::Index majority_count() const { return size() - minority_count(); }

  const std::string& label_text(Eigen::Index i) const {
    return is_minority(i) ? minority_label : majority_label;
  }

  /// Rows of the given class, ascending.
  std::vector<Eigen::Index> class_indices(Label which) const {
    std::vector<Eigen::Index> out;
    for (Eigen::Index i = 0; i < size(); ++i)
      if (labels[static_cast<std::size_t>(i)] == which) out.push_back(i);
    return out;
  }

  /// New dataset holding the listed rows, in the listed order.
  Dataset subset(const std::vector<Eigen::Index>& rows) const {
    Dataset out;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), dim());
    out.labels.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out.features.row(static_cast<Eigen::Index>(r)) = features.row(rows[r]);
      out.labels.push_back(labels[static_cast<std::size_t>(rows[r])]);
    }
    out.feature_names = feature_names;
    out.label_name = label_name;
    out.minority_label = minority_label;
    out.majority_label = majority_label;
    out.source = source;
    return out;
  }

  /// Both classes nonempty; the loader additionally requires
  /// minority_count <= majority_count (strict mode).
  void check(bool strict_ratio = false) const {
    if (size() < 2) throw DegenerateError("dataset needs at least 2 instances");
    if (dim() < 2) throw DegenerateError("dataset needs at least 2 features");
    if (static_cast<Eigen::Index>(labels.size()) != size())
      throw DimensionError("label count does not match row count");
    if (!features.allFinite()) throw ParseError("non-finite feature value");
    const Eigen::Index nmin = minority_count();
    const Eigen::Index nmaj = size() - nmin;
    if (nmin < 1 || nmaj < 1) throw LabelError("both classes must be nonempty");
    if (strict_ratio && nmin > nmaj)
      throw LabelError("minority class larger than majority class");
  }
};

inline Dataset make_dataset(Eigen::MatrixXd features, std::vector<Label> labels,
                            std::string source = "memory") {
  Dataset ds;
  ds.features = std::move(features);
  ds.labels = std::move(labels);
  ds.feature_names.reserve(static_cast<std::size_t>(ds.dim()));
  for (Eigen::Index j = 0; j < ds.dim(); ++j)
    ds.feature_names.push_back("f" + std::to_string(j));
  ds.source = std::move(source);
  ds.check();
  return ds;
}

/// |N_maj| / |N_min|  (>= 1 for datasets built by the loader).
inline double imbalance_ratio(const Dataset& ds) {
  return static_cast<double>(ds.majority_count()) /
         static_cast<double>(ds.minority_count());
}

// ---------------------------------------------------------------------------
// Fold planning
// ---------------------------------------------------------------------------

struct FoldPlan {
  int k = 0;
  std::vector<int> assignments;  // length n, fold ids in [0, k)
  std::uint64_t seed = 0;

  std::vector<Eigen::Index> fold_rows(int fold) const {
    std::vector<Eigen::Index> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] == fold) out.push_back(static_cast<Eigen::Index>(i));
    return out;
  }
  std::vector<Eigen::Index> complement_rows(int fold) const {
    std::vector<Eigen::Index> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] != fold) out.push_back(static_cast<Eigen::Index>(i));
    return out;
  }
};

/// Stratified assignment: per class, shuffle the row indices with a seeded
/// generator and deal them round-robin. The dealing cursor carries over from
/// one class to the next so overall fold sizes also differ by at most one.
inline FoldPlan stratified_folds(const Dataset& ds, int k, std::uint64_t seed) {
  const Eigen::Index nmin = ds.minority_count();
  if (k < 2) throw FoldError("fold count must be at least 2");
  if (static_cast<Eigen::Index>(k) > nmin)
    throw FoldError("fold count " + std::to_string(k) +
                    " exceeds minority count " + std::to_string(nmin));

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(static_cast<std::size_t>(ds.size()), -1);

  std::mt19937_64 gen(mix_seed(seed, 0x666f6c64ULL));  // "fold"
  int cursor = 0;
  for (Label cls : {Label::minority, Label::majority}) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < ds.size(); ++i)
      if (ds.labels[static_cast<std::size_t>(i)] == cls) idx.push_back(i);
    seeded_shuffle(idx, gen);
    for (Eigen::Index i : idx) {
      plan.assignments[static_cast<std::size_t>(i)] = cursor;
      cursor = (cursor + 1) % k;
    }
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Parsing / formatting
// ---------------------------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_fields(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.emplace_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

/// 17 significant digits round-trip every double bit-identically.
inline std::string format_g17(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 17);
  (void)ec;
  return std::string(buf, ptr);
}

struct RawTable {
  std::vector<std::string> column_names;
  std::vector<std::vector<std::string>> rows;  // all as raw text
};

inline std::string strip_bom(std::string line) {
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB &&
      static_cast<unsigned char>(line[2]) == 0xBF)
    return line.substr(3);
  return line;
}

inline RawTable read_csv_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  RawTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) line = strip_bom(line);
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (table.column_names.empty()) {
      table.column_names = std::move(fields);
      continue;
    }
    if (fields.size() != table.column_names.size())
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": expected " + std::to_string(table.column_names.size()) +
                       " fields, got " + std::to_string(fields.size()));
    table.rows.push_back(std::move(fields));
  }
  if (table.column_names.empty()) throw ParseError(path.string() + ": empty file");
  return table;
}

inline bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  return true;
}

/// KEEL .dat: @relation, @attribute NAME TYPE, optional @inputs/@outputs,
/// @data followed by comma-separated rows. Attribute declarations other than
/// the output must be numeric (real/integer); a nominal input is a load error.
inline RawTable read_keel_table(const std::filesystem::path& path,
                                std::string& out_label_column) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());

  struct Attr {
    std::string name;
    bool nominal = false;
  };
  std::vector<Attr> attrs;
  std::vector<std::string> outputs;
  bool in_data = false;
  RawTable table;
  std::string line;
  std::size_t lineno = 0;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) line = strip_bom(line);
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '%') continue;
    if (!in_data && sv.front() == '@') {
      std::string_view rest = sv.substr(1);
      const std::size_t sp = rest.find_first_of(" \t");
      std::string_view keyword = sp == std::string_view::npos ? rest : rest.substr(0, sp);
      std::string_view body = sp == std::string_view::npos ? std::string_view{} : trim(rest.substr(sp));
      if (iequals(keyword, "relation")) {
        // relation name unused beyond provenance
      } else if (iequals(keyword, "attribute")) {
        const std::size_t name_end = body.find_first_of(" \t{");
        if (name_end == std::string_view::npos || name_end == 0)
          throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad @attribute");
        Attr a;
        a.name = std::string(trim(body.substr(0, name_end)));
        std::string_view type = trim(body.substr(name_end));
        a.nominal = !type.empty() && type.front() == '{';
        attrs.push_back(std::move(a));
      } else if (iequals(keyword, "inputs")) {
        // informational; attribute order drives parsing
      } else if (iequals(keyword, "outputs")) {
        for (auto& f : split_fields(std::string(body))) outputs.push_back(f);
      } else if (iequals(keyword, "data")) {
        in_data = true;
      } else {
        throw ParseError(path.string() + ":" + std::to_string(lineno) +
                         ": unknown directive @" + std::string(keyword));
      }
      continue;
    }
    if (!in_data)
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": data before @data directive");
    auto fields = split_fields(sv);
    if (fields.size() != attrs.size())
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": expected " + std::to_string(attrs.size()) +
                       " fields, got " + std::to_string(fields.size()));
    table.rows.push_back(std::move(fields));
  }
  if (attrs.empty()) throw ParseError(path.string() + ": no @attribute declarations");
  if (outputs.size() > 1) throw ParseError(path.string() + ": multiple @outputs");

  out_label_column = outputs.empty() ? attrs.back().name : outputs.front();
  for (const auto& a : attrs) {
    table.column_names.push_back(a.name);
    if (a.nominal && a.name != out_label_column)
      throw ParseError(path.string() + ": nominal input attribute '" + a.name + "'");
  }
  return table;
}

}  // namespace detail

/// Loads a CSV or KEEL .dat file. label_spec is a column name or "last"
/// (for KEEL, "last" defers to @outputs when present). The minority class is
/// the least frequent label; a tie requires positive_label.
inline Dataset load_dataset(const std::filesystem::path& path, Format format,
                            const std::string& label_spec = "last",
                            const std::optional<std::string>& positive_label = std::nullopt) {
  std::string keel_label;
  detail::RawTable table = format == Format::csv
                               ? detail::read_csv_table(path)
                               : detail::read_keel_table(path, keel_label);

  std::string label_column = label_spec;
  if (label_spec == "last")
    label_column = format == Format::keel_dat ? keel_label : table.column_names.back();

  std::size_t label_idx = table.column_names.size();
  for (std::size_t j = 0; j < table.column_names.size(); ++j)
    if (table.column_names[j] == label_column) {
      label_idx = j;
      break;
    }
  if (label_idx == table.column_names.size())
    throw ParseError(path.string() + ": label column '" + label_column + "' not found");

  const std::size_t n = table.rows.size();
  const std::size_t m = table.column_names.size() - 1;
  if (n < 2) throw DegenerateError(path.string() + ": needs at least 2 data rows");
  if (m < 2) throw DegenerateError(path.string() + ": needs at least 2 feature columns");

  Dataset ds;
  ds.source = path.string();
  ds.label_name = label_column;
  for (std::size_t j = 0; j < table.column_names.size(); ++j)
    if (j != label_idx) ds.feature_names.push_back(table.column_names[j]);

  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  std::vector<std::string> raw_labels(n);
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < table.column_names.size(); ++j) {
      const std::string& cell = table.rows[r][j];
      if (j == label_idx) {
        if (cell.empty()) throw ParseError(path.string() + ": empty label in data row " + std::to_string(r + 1));
        raw_labels[r] = cell;
        continue;
      }
      auto v = detail::parse_double(cell);
      if (!v)
        throw ParseError(path.string() + ": non-numeric value '" + cell +
                         "' in data row " + std::to_string(r + 1) + ", column '" +
                         table.column_names[j] + "'");
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *v;
      ++c;
    }
  }

  // Resolve the two classes and the minority role.
  std::vector<std::pair<std::string, std::size_t>> counts;
  for (const auto& l : raw_labels) {
    auto it = std::find_if(counts.begin(), counts.end(),
                           [&](const auto& p) { return p.first == l; });
    if (it == counts.end())
      counts.emplace_back(l, 1);
    else
      ++it->second;
  }
  if (counts.size() != 2)
    throw LabelError(path.string() + ": expected exactly 2 distinct labels, found " +
                     std::to_string(counts.size()));

  std::string minority;
  if (positive_label) {
    if (counts[0].first != *positive_label && counts[1].first != *positive_label)
      throw LabelError(path.string() + ": positive label '" + *positive_label +
                       "' not present in data");
    minority = *positive_label;
  } else if (counts[0].second == counts[1].second) {
    throw LabelError(path.string() + ": class counts tie (" + counts[0].first + ", " +
                     counts[1].first + "); pass an explicit positive label");
  } else {
    minority = counts[0].second < counts[1].second ? counts[0].first : counts[1].first;
  }
  ds.minority_label = minority;
  ds.majority_label = counts[0].first == minority ? counts[1].first : counts[0].first;

  ds.labels.reserve(n);
  for (const auto& l : raw_labels)
    ds.labels.push_back(l == minority ? Label::minority : Label::majority);

  ds.check(/*strict_ratio=*/true);
  return ds;
}

/// Writes the dataset as CSV: feature columns (17 significant digits), the
/// label column last, and optionally a trailing integer mgru_index column.
inline void write_csv(std::ostream& out, const Dataset& ds,
                      const std::vector<int>* mgru_index = nullptr) {
  if (mgru_index && static_cast<Eigen::Index>(mgru_index->size()) != ds.size())
    throw DimensionError("mgru_index length does not match row count");
  for (const auto& name : ds.feature_names) out << name << ',';
  out << ds.label_name;
  if (mgru_index) out << ",mgru_index";
  out << '\n';
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    for (Eigen::Index j = 0; j < ds.dim(); ++j)
      out << detail::format_g17(ds.features(i, j)) << ',';
    out << ds.label_text(i);
    if (mgru_index) out << ',' << (*mgru_index)[static_cast<std::size_t>(i)];
    out << '\n';
  }
}

inline void write_csv(const std::filesystem::path& path, const Dataset& ds,
                      const std::vector<int>* mgru_index = nullptr) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path.string() + " for writing");
  write_csv(out, ds, mgru_index);
}

/// FNV-1a over the formatted content; stable across runs and platforms.
inline std::string dataset_fingerprint(const Dataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0x1f;
    h *= 0x100000001b3ULL;
  };
  feed(std::to_string(ds.size()));
  feed(std::to_string(ds.dim()));
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    for (Eigen::Index j = 0; j < ds.dim(); ++j) feed(detail::format_g17(ds.features(i, j)));
    feed(ds.label_text(i));
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 16);
}

}  // namespace overlapctl
