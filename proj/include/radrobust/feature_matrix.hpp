#pragma once

// Patients x features table. Column names carry their provenance:
//   <site_scope>.<aggregation>.<region>.<family>.<feature>
// e.g. omentum.merged.full.glcm.Contrast. CSV form: first column patient_id.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "radrobust/error.hpp"
#include "radrobust/text.hpp"

namespace radrobust {

enum class SiteScope { all, omentum, pelvis };
enum class Aggregation { largest, merged };
enum class Region { full, rim };

inline std::string to_string(SiteScope s) {
  switch (s) {
    case SiteScope::all: return "all";
    case SiteScope::omentum: return "omentum";
    case SiteScope::pelvis: return "pelvis";
  }
  return "all";
}
inline std::string to_string(Aggregation a) { return a == Aggregation::largest ? "largest" : "merged"; }
inline std::string to_string(Region r) { return r == Region::full ? "full" : "rim"; }

inline std::optional<SiteScope> parse_site_scope(std::string_view s) {
  if (s == "all") return SiteScope::all;
  if (s == "omentum") return SiteScope::omentum;
  if (s == "pelvis") return SiteScope::pelvis;
  return std::nullopt;
}
inline std::optional<Aggregation> parse_aggregation(std::string_view s) {
  if (s == "largest") return Aggregation::largest;
  if (s == "merged") return Aggregation::merged;
  return std::nullopt;
}
inline std::optional<Region> parse_region(std::string_view s) {
  if (s == "full") return Region::full;
  if (s == "rim") return Region::rim;
  return std::nullopt;
}

struct ColumnMeta {
  SiteScope site_scope = SiteScope::all;
  Aggregation aggregation = Aggregation::merged;
  Region region = Region::full;
  std::string family;
  std::string feature;

  std::string group() const { return to_string(site_scope) + "." + to_string(aggregation) + "." + to_string(region); }
  std::string name() const { return group() + "." + family + "." + feature; }
  /// "<family>.<feature>", the catalog key.
  std::string catalog_name() const { return family + "." + feature; }

  friend bool operator==(const ColumnMeta&, const ColumnMeta&) = default;
};

inline ColumnMeta parse_column_name(std::string_view name) {
  const auto parts = text::split(name, '.');
  if (parts.size() != 5) {
    throw schema_error("column '" + std::string(name) +
                       "' is not <site_scope>.<aggregation>.<region>.<family>.<feature>");
  }
  ColumnMeta m;
  auto scope = parse_site_scope(parts[0]);
  auto agg = parse_aggregation(parts[1]);
  auto reg = parse_region(parts[2]);
  if (!scope || !agg || !reg || parts[3].empty() || parts[4].empty()) {
    throw schema_error("column '" + std::string(name) + "' has an unknown provenance prefix");
  }
  m.site_scope = *scope;
  m.aggregation = *agg;
  m.region = *reg;
  m.family = std::string(parts[3]);
  m.feature = std::string(parts[4]);
  return m;
}

struct FeatureMatrix {
  std::vector<std::string> feature_names;
  std::vector<std::string> patient_ids;
  Eigen::MatrixXd values;  // patients x features

  std::size_t rows() const { return patient_ids.size(); }
  std::size_t cols() const { return feature_names.size(); }

  std::vector<ColumnMeta> meta() const {
    std::vector<ColumnMeta> out;
    out.reserve(feature_names.size());
    for (const auto& n : feature_names) out.push_back(parse_column_name(n));
    return out;
  }

  std::optional<std::size_t> column(const std::string& name) const {
    for (std::size_t j = 0; j < feature_names.size(); ++j) {
      if (feature_names[j] == name) return j;
    }
    return std::nullopt;
  }

  std::optional<std::size_t> row(const std::string& patient) const {
    for (std::size_t i = 0; i < patient_ids.size(); ++i) {
      if (patient_ids[i] == patient) return i;
    }
    return std::nullopt;
  }

  bool has_nan() const { return values.hasNaN(); }

  /// Enforces unique names, parseable provenance, matching shapes and at most
  /// 102 columns per (site_scope, aggregation, region) group.
  void validate() const {
    if (static_cast<std::size_t>(values.rows()) != patient_ids.size() ||
        static_cast<std::size_t>(values.cols()) != feature_names.size()) {
      throw schema_error("feature matrix shape does not match its labels");
    }
    std::set<std::string> names;
    std::map<std::string, int> per_group;
    for (const auto& n : feature_names) {
      if (!names.insert(n).second) throw schema_error("duplicate feature column '" + n + "'");
      const auto m = parse_column_name(n);
      if (++per_group[m.group()] > 102) throw schema_error("more than 102 columns in group " + m.group());
    }
    std::set<std::string> pats;
    for (const auto& p : patient_ids) {
      if (!pats.insert(p).second) throw schema_error("duplicate patient row '" + p + "'");
    }
  }

  FeatureMatrix select_columns(const std::vector<std::size_t>& cols) const {
    FeatureMatrix out;
    out.patient_ids = patient_ids;
    out.values.resize(values.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
      out.feature_names.push_back(feature_names[cols[k]]);
      out.values.col(static_cast<Eigen::Index>(k)) = values.col(static_cast<Eigen::Index>(cols[k]));
    }
    return out;
  }

  FeatureMatrix select_rows(const std::vector<std::size_t>& rws) const {
    FeatureMatrix out;
    out.feature_names = feature_names;
    out.values.resize(static_cast<Eigen::Index>(rws.size()), values.cols());
    for (std::size_t k = 0; k < rws.size(); ++k) {
      out.patient_ids.push_back(patient_ids[rws[k]]);
      out.values.row(static_cast<Eigen::Index>(k)) = values.row(static_cast<Eigen::Index>(rws[k]));
    }
    return out;
  }

  /// Columns whose provenance group equals `group` ("all.merged.full").
  FeatureMatrix group(const std::string& grp) const {
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < feature_names.size(); ++j) {
      if (parse_column_name(feature_names[j]).group() == grp) cols.push_back(j);
    }
    return select_columns(cols);
  }
};

inline void write_feature_matrix(const FeatureMatrix& m, std::ostream& out) {
  m.validate();
  out << "patient_id";
  for (const auto& n : m.feature_names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out << m.patient_ids[i];
    for (std::size_t j = 0; j < m.cols(); ++j) {
      out << ',' << text::format_double(m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    out << '\n';
  }
}

inline void write_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("io", "cannot write " + path.string());
  write_feature_matrix(m, out);
}

inline FeatureMatrix read_feature_matrix(std::istream& in, const std::string& name = "<features>") {
  std::string line;
  if (!std::getline(in, line)) throw format_error(name + ": empty feature file");
  const auto header = text::split(text::trim(line), ',');
  if (header.empty() || text::trim(header[0]) != "patient_id") {
    throw schema_error(name + ": first column must be patient_id");
  }
  FeatureMatrix m;
  for (std::size_t j = 1; j < header.size(); ++j) m.feature_names.emplace_back(text::trim(header[j]));
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty()) continue;
    const auto cells = text::split(t, ',');
    if (cells.size() != header.size()) {
      throw format_error(name + ": line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                         " cells");
    }
    m.patient_ids.emplace_back(text::trim(cells[0]));
    std::vector<double> r;
    r.reserve(cells.size() - 1);
    for (std::size_t j = 1; j < cells.size(); ++j) {
      const auto c = text::trim(cells[j]);
      if (c.empty()) {
        r.push_back(std::nan(""));
        continue;
      }
      auto v = text::parse_double(c);
      if (!v) throw format_error(name + ": line " + std::to_string(lineno) + ": bad number '" + std::string(c) + "'");
      r.push_back(*v);
    }
    rows.push_back(std::move(r));
  }
  m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.feature_names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  m.validate();
  return m;
}

inline FeatureMatrix read_feature_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("io", "cannot open " + path.string());
  return read_feature_matrix(in, path.string());
}

/// Replaces NaN cells with the column median over `reference_rows` (the
/// training fold). Columns that are entirely NaN there become 0.
inline Eigen::VectorXd column_medians(const Eigen::MatrixXd& x, const std::vector<std::size_t>& reference_rows) {
  Eigen::VectorXd med(x.cols());
  std::vector<double> buf;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    buf.clear();
    for (auto i : reference_rows) {
      const double v = x(static_cast<Eigen::Index>(i), j);
      if (!std::isnan(v)) buf.push_back(v);
    }
    if (buf.empty()) {
      med[j] = 0.0;
      continue;
    }
    std::sort(buf.begin(), buf.end());
    const std::size_t n = buf.size();
    med[j] = n % 2 ? buf[n / 2] : 0.5 * (buf[n / 2 - 1] + buf[n / 2]);
  }
  return med;
}

inline void impute_nan(Eigen::MatrixXd& x, const Eigen::VectorXd& fill) {
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (std::isnan(x(i, j))) x(i, j) = fill[j];
    }
  }
}

}  // namespace radrobust
