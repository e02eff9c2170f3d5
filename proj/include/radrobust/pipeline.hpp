#pragma once

// Stage orchestration behind the command-line tool. Every stage reads its
// inputs from files under the output directory and writes its outputs there,
// so stages can run one at a time and a full run sees exactly what the
// single-stage commands would. Each stage records a key built from the bytes
// of its inputs and the config fields it uses; a stage whose outputs exist
// under a matching key is skipped.
//
// Layout of <out>:
//   features/{train,test}.original.csv, features/train.rep<NN>.csv
//   labels/{train,test}.csv          patient_id,metric,label,trace
//   profile/robustness.csv
//   selection/selections.csv, selection/traces/*.csv
//   evaluate/<metric>.<scope>.<aggregation>.<region>.csv
//   report.csv
//   cache/<stage>.key

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "radrobust/cohort_features.hpp"
#include "radrobust/run_config.hpp"

namespace radrobust::pipeline {

namespace fs = std::filesystem;

/// A required artifact is missing; the message names the producing command.
inline DataError dependency_error(const fs::path& missing, const std::string& producer) {
  return DataError("dependency", "missing " + missing.string() + "; run `radrobust " + producer + "` first");
}

// ---------------------------------------------------------------------------
// Content keys

/// Streaming 64-bit FNV-1a over strings and file contents.
class Fingerprint {
public:
  Fingerprint& add(std::string_view s) {
    for (unsigned char c : s) mix(c);
    mix(0xff);  // field separator
    return *this;
  }

  Fingerprint& add_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("io", "cannot read " + p.string());
    char buf[1 << 16];
    while (in) {
      in.read(buf, sizeof buf);
      for (std::streamsize i = 0; i < in.gcount(); ++i) mix(static_cast<unsigned char>(buf[i]));
    }
    mix(0xfe);
    return *this;
  }

  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h_));
    return buf;
  }

private:
  void mix(unsigned char c) {
    h_ ^= c;
    h_ *= 0x100000001b3ULL;
  }
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

/// Hash of a manifest and every file it references, in manifest order.
inline void add_cohort(Fingerprint& fp, const fs::path& manifest_path) {
  const auto m = load_manifest(manifest_path);
  fp.add_file(manifest_path);
  for (const auto& r : m.rows) {
    fp.add_file(r.volume_path);
    fp.add_file(r.mask_path);
  }
}

struct Layout {
  fs::path out;

  fs::path features(const std::string& cohort, const std::string& which) const {
    return out / "features" / (cohort + "." + which + ".csv");
  }
  fs::path train_original() const { return features("train", "original"); }
  fs::path test_original() const { return features("test", "original"); }
  fs::path replicate(int r) const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "rep%02d", r + 1);
    return features("train", buf);
  }
  fs::path labels(const std::string& cohort) const { return out / "labels" / (cohort + ".csv"); }
  fs::path robustness() const { return out / "profile" / "robustness.csv"; }
  fs::path selections() const { return out / "selection" / "selections.csv"; }
  fs::path traces() const { return out / "selection" / "traces"; }
  fs::path evaluation(const ConfigKey& k) const {
    return out / "evaluate" / (to_string(k.metric) + "." + k.group.str() + ".csv");
  }
  fs::path report() const { return out / "report.csv"; }
  fs::path key_file(const std::string& stage) const { return out / "cache" / (stage + ".key"); }
};

/// Writes through a temporary file so readers never see a partial artifact.
inline void write_atomically(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("io", "cannot write " + tmp.string());
    out << content;
    if (!out) throw DataError("io", "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline bool cache_fresh(const Layout& l, const std::string& stage, const std::string& key,
                        const std::vector<fs::path>& outputs) {
  std::ifstream in(l.key_file(stage));
  std::string stored;
  if (!in || !std::getline(in, stored) || stored != key) return false;
  for (const auto& p : outputs) {
    if (!fs::exists(p)) return false;
  }
  log::info(stage + ": up to date (key " + key + ")");
  return true;
}

inline void cache_store(const Layout& l, const std::string& stage, const std::string& key) {
  write_atomically(l.key_file(stage), key + "\n");
}

inline void require(const fs::path& p, const std::string& producer) {
  if (!fs::exists(p)) throw dependency_error(p, producer);
}

// ---------------------------------------------------------------------------
// Config subsets that feed each stage's key

inline nlohmann::json groups_json(const std::vector<GroupKey>& groups) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& g : groups) a.push_back(g.str());
  return a;
}

inline std::string extract_subset(const RunConfig& c) {
  const auto p = c.perturbation_for_run();
  nlohmann::json j{{"groups", groups_json(c.groups())},
                   {"bin_width", c.discretization.bin_width},
                   {"rim", {c.rim.inner_mm, c.rim.outer_mm}},
                   {"perturbation",
                    {p.n_replicates, p.max_displacement_mm, p.correlation_length_mm, p.dice_floor, p.seed}}};
  return j.dump();
}

inline std::string plan_subset(const RunConfig& c) {
  const auto p = c.eval_plan();
  nlohmann::json algs = nlohmann::json::array(), regs = nlohmann::json::array(), mods = nlohmann::json::array();
  for (auto a : p.algorithms) algs.push_back(to_string(a));
  for (auto r : p.regimes) regs.push_back(to_string(r));
  for (auto m : p.models) mods.push_back(to_string(m));
  const auto& s = p.selection;
  nlohmann::json j{{"algorithms", algs},
                   {"regimes", regs},
                   {"models", mods},
                   {"selection",
                    {s.w, s.icc_threshold, s.pool_fraction, s.target_k ? *s.target_k : -1, s.max_features,
                     s.inner_folds, s.ufs, s.ufs_corr_cutoff, s.ufs_p_cutoff, s.seed}},
                   {"lr", {p.lr.ridge, p.lr.max_iter, p.lr.tolerance}},
                   {"lda", {p.lda.shrinkage}},
                   {"outer_folds", p.outer_folds},
                   {"seed", p.seed}};
  return j.dump();
}

// ---------------------------------------------------------------------------
// Labels

struct LabelRecord {
  std::string patient;
  ResponseMetric metric;
  int label;
  std::string trace;
};

/// Every label derivable from a cohort's manifest and post-treatment masks.
/// Labels that cannot be derived are left out (the patient is then excluded
/// from configurations with that metric).
inline std::vector<LabelRecord> derive_cohort_labels(const CohortManifest& m) {
  std::vector<LabelRecord> out;
  auto add = [&](const std::string& pid, ResponseMetric metric, auto&& derive) {
    try {
      const ResponseLabel l = derive();
      out.push_back({pid, metric, l.positive() ? 1 : 0, l.trace});
    } catch (const DataError& e) {
      log::info("patient " + pid + ": no " + to_string(metric) + " label (" + e.what() + ")");
    }
  };
  for (const auto& pid : m.patients()) {
    add(pid, ResponseMetric::CRS, [&] {
      const auto crs = m.crs(pid);
      if (!crs) throw DataError("label-unavailable", "no CRS in manifest");
      return derive_crs(*crs);
    });
    add(pid, ResponseMetric::RECIST, [&] {
      const auto r = m.recist(pid);
      if (!r) throw DataError("label-unavailable", "no RECIST in manifest");
      return derive_recist(*r);
    });
    add(pid, ResponseMetric::VolR, [&] {
      const auto* pre = m.find(pid, Timepoint::pre);
      const auto* post = m.find(pid, Timepoint::post);
      if (!pre || !post) throw DataError("label-unavailable", "VolR needs masks at both timepoints");
      auto total = [](const LesionSet& s) {
        double v = 0.0;
        for (const auto& l : s.lesions) v += l.mask.physical_volume();
        return v;
      };
      return derive_volr(total(load_lesions(pre->mask_path)), total(load_lesions(post->mask_path)));
    });
    add(pid, ResponseMetric::DiaR,
        [&] { return derive_diar(m.sld(pid, Timepoint::pre), m.sld(pid, Timepoint::post)); });
  }
  return out;
}

inline std::string labels_csv(const std::vector<LabelRecord>& labels) {
  std::ostringstream out;
  out << "patient_id,metric,label,trace\n";
  for (const auto& l : labels) {
    out << l.patient << ',' << to_string(l.metric) << ',' << l.label << ',' << ::radrobust::detail::csv_quote(l.trace) << '\n';
  }
  return out.str();
}

inline std::map<ResponseMetric, std::map<std::string, int>> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("io", "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (text::trim(line) != "patient_id,metric,label,trace") throw format_error(path.string() + ": bad label header");
  std::map<ResponseMetric, std::map<std::string, int>> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto cells = text::split(line, ',');
    const auto metric = cells.size() >= 3 ? parse_metric(cells[1]) : std::nullopt;
    if (!metric || (cells[2] != "0" && cells[2] != "1")) {
      throw format_error(path.string() + ": line " + std::to_string(lineno) + ": malformed label row");
    }
    out[*metric][std::string(cells[0])] = cells[2] == "1" ? 1 : 0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stages

/// Writes the synthetic train and test cohorts into the directories of the
/// configured manifests.
inline void gen_synth(const RunConfig& c) {
  c.validate();
  if (!c.synth) throw ConfigError("gen-synth needs a \"synth\" section in the config");
  const Layout l{c.out_dir};
  nlohmann::json j{{"train", c.train_manifest.string()}, {"test", c.test_manifest.string()}};
  for (bool train : {true, false}) {
    const auto s = c.synth->cohort(train, c.seed);
    j[train ? "train_cfg" : "test_cfg"] = {s.n_patients,
                                           s.seed,
                                           s.positive_fraction,
                                           s.lesions_min,
                                           s.lesions_max,
                                           s.radius_min_mm,
                                           s.radius_max_mm,
                                           s.axis_jitter,
                                           s.site_probability,
                                           s.spacing,
                                           s.margin_mm,
                                           s.background_hu,
                                           s.background_sd_hu,
                                           s.lesion_hu,
                                           s.lesion_hu_jitter,
                                           s.texture_sd_hu,
                                           s.grain_sigma_negative,
                                           s.grain_sigma_positive,
                                           s.grain_jitter,
                                           s.shell_mm,
                                           s.shell_speckle_positive,
                                           s.shell_speckle_negative,
                                           s.halo_mm,
                                           s.halo_speckle,
                                           s.speckle_hu,
                                           s.speckle_sd_hu,
                                           s.shell_speckle_hu_jitter};
  }
  const std::string key = Fingerprint().add("gen-synth").add(j.dump()).hex();
  if (cache_fresh(l, "gen-synth", key, {c.train_manifest, c.test_manifest})) return;
  for (bool train : {true, false}) {
    const auto& manifest = train ? c.train_manifest : c.test_manifest;
    if (manifest.filename() != "manifest.csv") {
      throw ConfigError("gen-synth writes <dir>/manifest.csv; the " + std::string(train ? "train" : "test") +
                        " path must end in manifest.csv");
    }
    const auto cohort = generate_cohort(c.synth->cohort(train, c.seed));
    write_cohort(cohort, manifest.parent_path());
    log::info("gen-synth: wrote " + std::to_string(cohort.patients.size()) + " patients to " +
              manifest.parent_path().string());
  }
  cache_store(l, "gen-synth", key);
}

namespace detail {

inline CohortManifest load_cohort(const fs::path& manifest, const char* which) {
  if (!fs::exists(manifest)) {
    throw DataError("dependency", "missing " + manifest.string() + "; run `radrobust gen-synth` first or point \"" +
                                      which + "\" at an existing cohort manifest");
  }
  return load_manifest(manifest);
}

/// Feature rows of every patient with a pre-treatment scan: original contours
/// plus, when `replicates` > 0, the perturbed ones.
inline std::vector<FeatureMatrix> extract_cohort(const CohortManifest& m, const ExtractionPlan& plan,
                                                 const PerturbConfig& perturb, int replicates, int jobs) {
  std::vector<const ManifestRow*> rows;
  for (const auto& pid : m.patients()) {
    const auto* r = m.find(pid, Timepoint::pre);
    if (!r) {
      log::warn("patient " + pid + " has no pre-treatment scan, excluded");
      continue;
    }
    rows.push_back(r);
  }
  const auto names = column_names(plan.groups);
  std::vector<std::vector<std::vector<double>>> values(rows.size());
  parallel_for(rows.size(), jobs, [&](std::size_t i) {
    const auto& row = *rows[i];
    const auto [vol, set] = load_pair(row.volume_path, row.mask_path);
    auto& out = values[i];
    out.push_back(patient_features(vol, set, plan, row.patient_id));
    if (replicates > 0) {
      for (const auto& rep : perturbed_lesions_all(set, perturb, row.patient_id)) {
        out.push_back(patient_features(vol, rep, plan, row.patient_id));
      }
    }
  });
  std::vector<FeatureMatrix> mats(static_cast<std::size_t>(1 + replicates));
  for (auto& fm : mats) {
    fm.feature_names = names;
    fm.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
    for (const auto* r : rows) fm.patient_ids.push_back(r->patient_id);
  }
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < mats.size(); ++k)
      for (std::size_t j = 0; j < names.size(); ++j) {
        mats[k].values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i][k][j];
      }
  return mats;
}

inline std::string matrix_csv(const FeatureMatrix& m) {
  std::ostringstream out;
  write_feature_matrix(m, out);
  return out.str();
}

}  // namespace detail

/// Features of both cohorts (training also on every perturbation replicate)
/// and the labels derivable from each manifest.
inline void extract(const RunConfig& c, int jobs = 1) {
  c.validate();
  const Layout l{c.out_dir};
  const auto train_m = detail::load_cohort(c.train_manifest, "train");
  const auto test_m = detail::load_cohort(c.test_manifest, "test");
  Fingerprint fp;
  fp.add("extract").add(extract_subset(c));
  add_cohort(fp, c.train_manifest);
  add_cohort(fp, c.test_manifest);
  const std::string key = fp.hex();
  const auto perturb = c.perturbation_for_run();
  std::vector<fs::path> outputs{l.train_original(), l.test_original(), l.labels("train"), l.labels("test")};
  for (int r = 0; r < perturb.n_replicates; ++r) outputs.push_back(l.replicate(r));
  if (cache_fresh(l, "extract", key, outputs)) return;

  const auto plan = c.extraction_plan();
  const auto train = detail::extract_cohort(train_m, plan, perturb, perturb.n_replicates, jobs);
  const auto test = detail::extract_cohort(test_m, plan, perturb, 0, jobs);
  write_atomically(l.train_original(), detail::matrix_csv(train[0]));
  for (int r = 0; r < perturb.n_replicates; ++r) {
    write_atomically(l.replicate(r), detail::matrix_csv(train[static_cast<std::size_t>(r) + 1]));
  }
  write_atomically(l.test_original(), detail::matrix_csv(test[0]));
  write_atomically(l.labels("train"), labels_csv(derive_cohort_labels(train_m)));
  write_atomically(l.labels("test"), labels_csv(derive_cohort_labels(test_m)));
  cache_store(l, "extract", key);
}

/// Replicate feature files present under <out>, in order.
inline std::vector<fs::path> replicate_files(const Layout& l) {
  std::vector<fs::path> out;
  for (int r = 0; fs::exists(l.replicate(r)); ++r) out.push_back(l.replicate(r));
  return out;
}

/// Per-feature ICC over the training original and its replicates.
inline void profile(const RunConfig& c) {
  c.validate();
  const Layout l{c.out_dir};
  require(l.train_original(), "extract");
  const auto reps = replicate_files(l);
  if (reps.empty()) throw dependency_error(l.replicate(0), "extract");
  Fingerprint fp;
  fp.add("profile").add(::radrobust::detail::icc_form_name(c.icc_form)).add_file(l.train_original());
  for (const auto& p : reps) fp.add_file(p);
  const std::string key = fp.hex();
  if (cache_fresh(l, "profile", key, {l.robustness()})) return;
  const auto original = read_feature_matrix(l.train_original());
  std::vector<FeatureMatrix> replicates;
  for (const auto& p : reps) replicates.push_back(read_feature_matrix(p));
  const auto prof = profile_features(original, replicates, c.icc_form);
  std::ostringstream out;
  write_robustness_report(prof, out);
  write_atomically(l.robustness(), out.str());
  cache_store(l, "profile", key);
}

/// Inputs of the selection and evaluation stages, read from disk.
struct EvalInputs {
  CohortData train;
  CohortData test;
  RobustnessProfile profile;
  std::string key;  // content hash of the files below
};

inline EvalInputs load_eval_inputs(const Layout& l) {
  require(l.train_original(), "extract");
  require(l.test_original(), "extract");
  require(l.labels("train"), "extract");
  require(l.labels("test"), "extract");
  require(l.robustness(), "profile");
  EvalInputs in;
  in.train.features = read_feature_matrix(l.train_original());
  in.test.features = read_feature_matrix(l.test_original());
  in.train.labels = read_labels(l.labels("train"));
  in.test.labels = read_labels(l.labels("test"));
  in.profile = read_robustness_report(l.robustness());
  in.key = Fingerprint()
               .add_file(l.train_original())
               .add_file(l.test_original())
               .add_file(l.labels("train"))
               .add_file(l.labels("test"))
               .add_file(l.robustness())
               .hex();
  return in;
}

struct SelectionRow {
  ConfigKey key;
  Regime regime = Regime::predictive;
  Algorithm algorithm = Algorithm::sfs;
  ModelKind model = ModelKind::LR;
  std::string status = "ok";
  SelectionResult result;
  double min_icc = std::nan("");
};

/// Selection on the full training cohort of one configuration.
inline SelectionRow select_one(const EvalInputs& in, const ConfigKey& k, Regime regime, Algorithm a, ModelKind mk,
                               const EvalPlan& plan) {
  SelectionRow row;
  row.key = k;
  row.regime = regime;
  row.algorithm = a;
  row.model = mk;
  try {
    const auto cols = group_columns(in.train.features, k.group);
    if (cols.empty()) throw alignment_error("training features lack group " + k.group.str());
    std::vector<std::string> names;
    std::vector<double> icc;
    for (auto j : cols) {
      names.push_back(in.train.features.feature_names[j]);
      icc.push_back(in.profile.icc(names.back()));
    }
    const auto tr = prepare_split(in.train, cols, k.metric, "train");
    stats::require_both_classes(tr.y, "training cohort");
    SelectionConfig sc = plan.selection;
    sc.algorithm = a;
    sc.regime = regime;
    row.result = select_features(impute_with(tr.x, tr.x), tr.y, names, icc, sc, plan.spec(mk));
    for (auto j : row.result.selected_columns) {
      if (std::isnan(row.min_icc) || icc[j] < row.min_icc) row.min_icc = icc[j];
    }
  } catch (const Error& e) {
    row.status = "error: " + e.kind() + ": " + e.what();
  }
  return row;
}

/// Selected features for every configuration x regime x algorithm x model on
/// the whole training cohort, with per-run traces. `only` restricts regimes.
inline std::vector<SelectionRow> select(const RunConfig& c, int jobs = 1, const std::vector<Regime>& only = {}) {
  c.validate();
  const Layout l{c.out_dir};
  const auto in = load_eval_inputs(l);
  const auto plan = c.eval_plan();
  const auto regimes = only.empty() ? plan.regimes : only;
  struct Task {
    ConfigKey k;
    Regime r;
    Algorithm a;
    ModelKind m;
  };
  std::vector<Task> tasks;
  for (const auto& k : c.configurations())
    for (auto r : regimes)
      for (auto a : plan.algorithms)
        for (auto m : plan.models) tasks.push_back({k, r, a, m});
  std::vector<SelectionRow> rows(tasks.size());
  parallel_for(tasks.size(), jobs, [&](std::size_t i) {
    rows[i] = select_one(in, tasks[i].k, tasks[i].r, tasks[i].a, tasks[i].m, plan);
  });

  std::ostringstream out;
  out << "metric,site_scope,aggregation,region,regime,algorithm,model,nf,min_icc,avg_icc,sd_icc,status,selected\n";
  fs::create_directories(l.traces());
  for (const auto& r : rows) {
    const bool ok = r.status == "ok";
    std::string sel;
    for (const auto& s : r.result.selected) sel += (sel.empty() ? "" : ";") + s;
    out << to_string(r.key.metric) << ',' << to_string(r.key.group.scope) << ','
        << to_string(r.key.group.aggregation) << ',' << to_string(r.key.group.region) << ','
        << to_string(r.regime) << ',' << to_string(r.algorithm) << ',' << to_string(r.model) << ','
        << (ok ? std::to_string(r.result.nf()) : "") << ',' << (ok ? ::radrobust::detail::cell(r.min_icc, 6) : "") << ','
        << (ok ? ::radrobust::detail::cell(r.result.avg_icc, 6) : "") << ',' << (ok ? ::radrobust::detail::cell(r.result.sd_icc, 6) : "")
        << ',' << ::radrobust::detail::csv_quote(r.status) << ',' << ::radrobust::detail::csv_quote(sel) << '\n';
    if (ok) {
      std::ostringstream t;
      write_trace_csv(r.result.trace, t);
      write_atomically(l.traces() / (to_string(r.key.metric) + "." + r.key.group.str() + "." + to_string(r.regime) +
                                     "." + to_string(r.algorithm) + "." + to_string(r.model) + ".csv"),
                       t.str());
    }
  }
  write_atomically(l.selections(), out.str());
  return rows;
}

/// Rows of one configuration; a failure becomes one error row per expected
/// report row so the report keeps its shape.
inline std::vector<EvalRow> evaluate_or_error(const CohortData& train, const CohortData& test, const ConfigKey& k,
                                              const RobustnessProfile& prof, const EvalPlan& plan) {
  try {
    return evaluate_configuration(train, test, k, prof, plan);
  } catch (const Error& e) {
    const std::string why = "error: " + e.kind() + ": " + e.what();
    log::warn(to_string(k.metric) + "." + k.group.str() + ": " + why);
    std::vector<EvalRow> rows(1 + plan.regimes.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      rows[i].key = k;
      rows[i].status = why;
      if (i > 0) rows[i].regime = to_string(plan.regimes[i - 1]);
    }
    return rows;
  }
}

inline std::string rows_csv(const std::vector<EvalRow>& rows) {
  std::ostringstream out;
  out << kReportHeader << '\n';
  for (const auto& r : rows) write_report_row(r, out);
  return out.str();
}

/// Train/test evaluation of every configuration, up to `jobs` at a time.
inline void evaluate(const RunConfig& c, int jobs = 1) {
  c.validate();
  const Layout l{c.out_dir};
  const auto in = load_eval_inputs(l);
  const auto plan = c.eval_plan();
  const std::string plan_key = plan_subset(c);
  const auto configs = c.configurations();
  std::vector<std::size_t> todo;
  std::vector<std::string> keys(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    keys[i] = Fingerprint().add("evaluate").add(in.key).add(plan_key).add(to_string(configs[i].metric)).add(
        configs[i].group.str()).hex();
    const std::string stage = "evaluate." + to_string(configs[i].metric) + "." + configs[i].group.str();
    if (!cache_fresh(l, stage, keys[i], {l.evaluation(configs[i])})) todo.push_back(i);
  }
  parallel_for(todo.size(), jobs, [&](std::size_t t) {
    const auto& k = configs[todo[t]];
    const auto rows = evaluate_or_error(in.train, in.test, k, in.profile, plan);
    write_atomically(l.evaluation(k), rows_csv(rows));
    cache_store(l, "evaluate." + to_string(k.metric) + "." + k.group.str(), keys[todo[t]]);
  });
}

/// Concatenates the per-configuration rows in configuration order.
inline fs::path report(const RunConfig& c) {
  c.validate();
  const Layout l{c.out_dir};
  std::ostringstream out;
  out << kReportHeader << '\n';
  for (const auto& k : c.configurations()) {
    const auto p = l.evaluation(k);
    require(p, "evaluate");
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    if (line != kReportHeader) throw format_error(p.string() + ": unexpected header");
    while (std::getline(in, line)) {
      if (!line.empty()) out << line << '\n';
    }
  }
  write_atomically(l.report(), out.str());
  return l.report();
}

/// Every stage in order; gen-synth runs first when the config asks for
/// synthetic cohorts.
inline fs::path run(const RunConfig& c, int jobs = 1) {
  if (c.synth) gen_synth(c);
  extract(c, jobs);
  profile(c);
  evaluate(c, jobs);
  return report(c);
}

}  // namespace radrobust::pipeline
