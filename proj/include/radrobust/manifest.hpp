#pragma once

// Cohort manifest CSV. Header, exactly:
//   patient_id,timepoint,volume_path,mask_path,crs,recist,sld_mm
// Empty optional cells mean "absent". Relative paths resolve against the
// manifest's directory.

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

enum class Timepoint { pre, post };
enum class Recist { CR, PR, SD, PD };

inline std::string to_string(Timepoint t) { return t == Timepoint::pre ? "pre" : "post"; }

inline std::string to_string(Recist r) {
  switch (r) {
    case Recist::CR: return "CR";
    case Recist::PR: return "PR";
    case Recist::SD: return "SD";
    case Recist::PD: return "PD";
  }
  return "SD";
}

inline std::optional<Recist> parse_recist(std::string_view s) {
  if (s == "CR") return Recist::CR;
  if (s == "PR") return Recist::PR;
  if (s == "SD") return Recist::SD;
  if (s == "PD") return Recist::PD;
  return std::nullopt;
}

struct ManifestRow {
  std::string patient_id;
  Timepoint timepoint = Timepoint::pre;
  std::filesystem::path volume_path;
  std::filesystem::path mask_path;
  std::optional<int> crs;
  std::optional<Recist> recist;
  std::optional<double> sld_mm;
};

struct CohortManifest {
  std::vector<ManifestRow> rows;

  static constexpr std::string_view header = "patient_id,timepoint,volume_path,mask_path,crs,recist,sld_mm";

  /// Patient ids in first-appearance order.
  std::vector<std::string> patients() const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& r : rows) {
      if (seen.insert(r.patient_id).second) out.push_back(r.patient_id);
    }
    return out;
  }

  const ManifestRow* find(const std::string& patient, Timepoint t) const {
    for (const auto& r : rows) {
      if (r.patient_id == patient && r.timepoint == t) return &r;
    }
    return nullptr;
  }

  /// Patient-level label: the first non-empty value across the patient's rows.
  std::optional<int> crs(const std::string& patient) const {
    for (const auto& r : rows) {
      if (r.patient_id == patient && r.crs) return r.crs;
    }
    return std::nullopt;
  }
  std::optional<Recist> recist(const std::string& patient) const {
    for (const auto& r : rows) {
      if (r.patient_id == patient && r.recist) return r.recist;
    }
    return std::nullopt;
  }
  std::optional<double> sld(const std::string& patient, Timepoint t) const {
    const auto* r = find(patient, t);
    return r ? r->sld_mm : std::nullopt;
  }
};

inline CohortManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir,
                                     bool check_paths, const std::string& name = "<manifest>") {
  std::string line;
  if (!std::getline(in, line)) throw format_error(name + ": empty manifest");
  if (text::trim(line) != CohortManifest::header) {
    throw format_error(name + ": line 1: header must be exactly '" + std::string(CohortManifest::header) + "'");
  }
  CohortManifest m;
  std::set<std::pair<std::string, Timepoint>> keys;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    const auto cells = text::split(trimmed, ',');
    const std::string where = name + ": line " + std::to_string(lineno) + ": ";
    if (cells.size() != 7) throw format_error(where + "expected 7 cells, got " + std::to_string(cells.size()));
    ManifestRow row;
    row.patient_id = std::string(text::trim(cells[0]));
    if (row.patient_id.empty()) throw format_error(where + "empty patient_id");
    const auto tp = text::trim(cells[1]);
    if (tp == "pre") {
      row.timepoint = Timepoint::pre;
    } else if (tp == "post") {
      row.timepoint = Timepoint::post;
    } else {
      throw format_error(where + "timepoint must be pre or post");
    }
    row.volume_path = std::filesystem::path(std::string(text::trim(cells[2])));
    row.mask_path = std::filesystem::path(std::string(text::trim(cells[3])));
    if (row.volume_path.is_relative()) row.volume_path = base_dir / row.volume_path;
    if (row.mask_path.is_relative()) row.mask_path = base_dir / row.mask_path;
    if (const auto c = text::trim(cells[4]); !c.empty()) {
      auto v = text::parse_int<int>(c);
      if (!v) throw format_error(where + "crs is not an integer");
      if (*v < 1 || *v > 3) throw range_error(where + "crs " + std::to_string(*v) + " outside 1..3");
      row.crs = *v;
    }
    if (const auto c = text::trim(cells[5]); !c.empty()) {
      row.recist = parse_recist(c);
      if (!row.recist) throw range_error(where + "recist must be one of CR, PR, SD, PD");
    }
    if (const auto c = text::trim(cells[6]); !c.empty()) {
      auto v = text::parse_double(c);
      if (!v) throw format_error(where + "sld_mm is not a number");
      if (!(*v > 0.0)) throw range_error(where + "sld_mm must be positive");
      row.sld_mm = *v;
    }
    if (!keys.insert({row.patient_id, row.timepoint}).second) {
      throw duplicate_key_error(where + "duplicate (patient_id, timepoint) = (" + row.patient_id + "," +
                                to_string(row.timepoint) + ")");
    }
    if (check_paths) {
      for (const auto& p : {row.volume_path, row.mask_path}) {
        if (!std::filesystem::exists(p)) throw DataError("missing-file", where + "no such file " + p.string());
      }
    }
    m.rows.push_back(std::move(row));
  }
  // Patient-level labels must agree across a patient's rows.
  std::map<std::string, std::pair<std::optional<int>, std::optional<Recist>>> labels;
  for (const auto& r : m.rows) {
    auto& [crs, rec] = labels[r.patient_id];
    if (r.crs) {
      if (crs && *crs != *r.crs) throw DataError("conflict", name + ": conflicting crs for " + r.patient_id);
      crs = r.crs;
    }
    if (r.recist) {
      if (rec && *rec != *r.recist) throw DataError("conflict", name + ": conflicting recist for " + r.patient_id);
      rec = r.recist;
    }
  }
  return m;
}

inline CohortManifest load_manifest(const std::filesystem::path& path, bool check_paths = true) {
  std::ifstream in(path);
  if (!in) throw DataError("io", "cannot open " + path.string());
  return parse_manifest(in, path.parent_path(), check_paths, path.string());
}

/// Paths are written relative to `base_dir` when they live beneath it.
inline void write_manifest(const CohortManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("io", "cannot write " + path.string());
  const auto base = path.parent_path();
  auto rel = [&](const std::filesystem::path& p) {
    if (base.empty()) return p.generic_string();
    const auto r = p.lexically_relative(base);
    return (r.empty() || *r.begin() == "..") ? p.generic_string() : r.generic_string();
  };
  out << CohortManifest::header << "\n";
  for (const auto& r : m.rows) {
    out << r.patient_id << ',' << to_string(r.timepoint) << ',' << rel(r.volume_path) << ',' << rel(r.mask_path)
        << ',' << (r.crs ? std::to_string(*r.crs) : "") << ',' << (r.recist ? to_string(*r.recist) : "") << ','
        << (r.sld_mm ? text::format_double(*r.sld_mm) : "") << "\n";
  }
}

}  // namespace radrobust
