#pragma once

// Run configuration: one JSON document describing cohorts, the analysis grid
// and every tunable of the stages. Relative paths resolve against the
// directory of the config file. Unknown keys are rejected so that a typo
// cannot silently fall back to a default.

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "radrobust/cohort_features.hpp"
#include "radrobust/evaluate.hpp"
#include "radrobust/synth.hpp"

namespace radrobust {

/// Synthetic cohorts written by `gen-synth` next to the configured manifests.
struct SynthSection {
  int n_train = 120;
  int n_test = 60;
  std::optional<std::uint64_t> seed;  // defaults to the run seed
  SynthConfig base;                   // n_patients, seed and id_prefix are set per cohort

  SynthConfig cohort(bool train, std::uint64_t run_seed) const {
    SynthConfig c = base;
    c.n_patients = train ? n_train : n_test;
    c.id_prefix = train ? "TR" : "TE";
    c.seed = derive_seed(seed.value_or(run_seed), std::string(train ? "train" : "test"));
    return c;
  }
};

struct RunConfig {
  std::filesystem::path train_manifest;
  std::filesystem::path test_manifest;
  std::filesystem::path out_dir = "radrobust-out";

  std::vector<SiteScope> site_scopes{SiteScope::all, SiteScope::omentum, SiteScope::pelvis};
  std::vector<Aggregation> aggregations{Aggregation::largest, Aggregation::merged};
  std::vector<Region> regions{Region::full};
  std::vector<ResponseMetric> metrics{ResponseMetric::CRS, ResponseMetric::RECIST, ResponseMetric::VolR,
                                      ResponseMetric::DiaR};
  bool rim_all_metrics = false;  // lift the CRS-only restriction on rim features

  std::vector<Algorithm> algorithms{Algorithm::sfs};
  std::vector<Regime> regimes{Regime::predictive, Regime::fully_robust, Regime::semi_robust, Regime::weighted};
  std::vector<ModelKind> models{ModelKind::LR, ModelKind::LDA};

  PerturbConfig perturbation;
  radiomics::DiscretizationConfig discretization;
  RimConfig rim;
  SelectionConfig selection;
  ModelSpec lr{ModelKind::LR};
  ModelSpec lda{ModelKind::LDA};
  IccForm icc_form = IccForm::agreement_random;
  int outer_folds = 5;
  std::uint64_t seed = 1;

  std::optional<SynthSection> synth;

  void validate() const {
    auto nonempty = [](bool empty, const char* what) {
      if (empty) throw ConfigError(std::string(what) + " must not be empty");
    };
    nonempty(train_manifest.empty(), "train");
    nonempty(test_manifest.empty(), "test");
    nonempty(site_scopes.empty(), "site_scopes");
    nonempty(aggregations.empty(), "aggregations");
    nonempty(regions.empty(), "regions");
    nonempty(metrics.empty(), "metrics");
    nonempty(algorithms.empty(), "algorithms");
    nonempty(regimes.empty(), "regimes");
    nonempty(models.empty(), "models");
    auto has = [](const auto& v, auto x) { return std::find(v.begin(), v.end(), x) != v.end(); };
    if (has(regions, Region::rim)) {
      if (!has(aggregations, Aggregation::largest)) {
        throw ConfigError("the rim region is computed for the largest lesion only; add \"largest\" to aggregations");
      }
      if (!rim_all_metrics && !has(metrics, ResponseMetric::CRS)) {
        throw ConfigError("rim features are used for CRS only; add CRS to metrics or set rim_all_metrics");
      }
    }
    perturbation.validate();
    discretization.validate();
    if (!(rim.inner_mm >= 0.0 && rim.outer_mm >= 0.0 && rim.inner_mm + rim.outer_mm > 0.0)) {
      throw ConfigError("rim widths must be nonnegative with a positive total");
    }
    selection.validate();
    lr.validate();
    lda.validate();
    if (outer_folds < 2) throw ConfigError("outer_folds must be >= 2");
    if (synth) {
      synth->cohort(true, seed).validate();
      synth->cohort(false, seed).validate();
    }
  }

  /// Feature groups to extract. Rim groups exist only for the largest lesion.
  std::vector<GroupKey> groups() const {
    std::vector<GroupKey> out;
    for (auto s : site_scopes)
      for (auto a : aggregations)
        for (auto r : regions) {
          if (r == Region::rim && a != Aggregation::largest) continue;
          out.push_back({s, a, r});
        }
    return out;
  }

  /// Evaluated (metric, group) pairs in report order.
  std::vector<ConfigKey> configurations() const {
    std::vector<ConfigKey> out;
    for (auto m : metrics)
      for (const auto& g : groups()) {
        if (g.region == Region::rim && m != ResponseMetric::CRS && !rim_all_metrics) continue;
        out.push_back({m, g});
      }
    return out;
  }

  ExtractionPlan extraction_plan() const { return {groups(), discretization, rim}; }

  PerturbConfig perturbation_for_run() const {
    PerturbConfig p = perturbation;
    p.seed = derive_seed(seed, std::string("perturbation"));
    return p;
  }

  EvalPlan eval_plan() const {
    EvalPlan p;
    p.algorithms = algorithms;
    p.regimes = regimes;
    p.models = models;
    p.selection = selection;
    p.selection.seed = derive_seed(seed, std::string("selection"));
    p.lr = lr;
    p.lda = lda;
    p.outer_folds = outer_folds;
    p.seed = seed;
    return p;
  }
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.contains(k)) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

template <class T>
void read_field(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

template <class E, class Parse>
std::vector<E> read_enum_list(const json& j, const char* key, std::vector<E> fallback, Parse parse) {
  if (!j.contains(key)) return fallback;
  const auto& arr = j.at(key);
  if (!arr.is_array()) throw ConfigError(std::string(key) + " must be an array of strings");
  std::vector<E> out;
  for (const auto& v : arr) {
    if (!v.is_string()) throw ConfigError(std::string(key) + " must be an array of strings");
    const auto s = v.get<std::string>();
    const std::optional<E> e = parse(s);
    if (!e) throw ConfigError(std::string(key) + ": unknown value '" + s + "'");
    if (std::find(out.begin(), out.end(), *e) != out.end()) throw ConfigError(std::string(key) + ": duplicate '" + s + "'");
    out.push_back(*e);
  }
  return out;
}

inline std::optional<IccForm> parse_icc_form(std::string_view s) {
  if (s == "ICC(2,1)") return IccForm::agreement_random;
  if (s == "ICC(3,1)") return IccForm::consistency_mixed;
  return std::nullopt;
}

inline std::string icc_form_name(IccForm f) { return f == IccForm::agreement_random ? "ICC(2,1)" : "ICC(3,1)"; }

inline SynthSection parse_synth(const json& j) {
  const std::string w = "synth";
  check_keys(j,
             {"n_train", "n_test", "seed", "positive_fraction", "lesions_min", "lesions_max", "radius_min_mm",
              "radius_max_mm", "axis_jitter", "site_probability", "spacing", "margin_mm", "background_hu",
              "background_sd_hu", "lesion_hu", "lesion_hu_jitter", "texture_sd_hu", "grain_sigma_negative",
              "grain_sigma_positive", "grain_jitter", "shell_mm", "shell_speckle_positive", "shell_speckle_negative",
              "halo_mm", "halo_speckle", "speckle_hu", "speckle_sd_hu", "shell_speckle_hu_jitter"},
             w);
  SynthSection s;
  read_field(j, "n_train", s.n_train, w);
  read_field(j, "n_test", s.n_test, w);
  if (j.contains("seed")) {
    std::uint64_t v = 0;
    read_field(j, "seed", v, w);
    s.seed = v;
  }
  auto& b = s.base;
  read_field(j, "positive_fraction", b.positive_fraction, w);
  read_field(j, "lesions_min", b.lesions_min, w);
  read_field(j, "lesions_max", b.lesions_max, w);
  read_field(j, "radius_min_mm", b.radius_min_mm, w);
  read_field(j, "radius_max_mm", b.radius_max_mm, w);
  read_field(j, "axis_jitter", b.axis_jitter, w);
  read_field(j, "site_probability", b.site_probability, w);
  read_field(j, "spacing", b.spacing, w);
  read_field(j, "margin_mm", b.margin_mm, w);
  read_field(j, "background_hu", b.background_hu, w);
  read_field(j, "background_sd_hu", b.background_sd_hu, w);
  read_field(j, "lesion_hu", b.lesion_hu, w);
  read_field(j, "lesion_hu_jitter", b.lesion_hu_jitter, w);
  read_field(j, "texture_sd_hu", b.texture_sd_hu, w);
  read_field(j, "grain_sigma_negative", b.grain_sigma_negative, w);
  read_field(j, "grain_sigma_positive", b.grain_sigma_positive, w);
  read_field(j, "grain_jitter", b.grain_jitter, w);
  read_field(j, "shell_mm", b.shell_mm, w);
  read_field(j, "shell_speckle_positive", b.shell_speckle_positive, w);
  read_field(j, "shell_speckle_negative", b.shell_speckle_negative, w);
  read_field(j, "halo_mm", b.halo_mm, w);
  read_field(j, "halo_speckle", b.halo_speckle, w);
  read_field(j, "speckle_hu", b.speckle_hu, w);
  read_field(j, "speckle_sd_hu", b.speckle_sd_hu, w);
  read_field(j, "shell_speckle_hu_jitter", b.shell_speckle_hu_jitter, w);
  return s;
}

}  // namespace detail

/// Parses a config document; `base_dir` anchors relative paths.
inline RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  using detail::read_field;
  detail::check_keys(j,
                     {"train", "test", "out", "seed", "site_scopes", "aggregations", "regions", "metrics",
                      "rim_all_metrics", "algorithms", "regimes", "models", "perturbation", "discretization", "rim",
                      "selection", "lr", "lda", "icc_form", "outer_folds", "synth"},
                     "config");
  RunConfig c;
  auto path_field = [&](const char* key, std::filesystem::path& out) {
    if (!j.contains(key)) return;
    std::string s;
    read_field(j, key, s, "config");
    const std::filesystem::path p(s);
    out = p.is_absolute() ? p : base_dir / p;
  };
  path_field("train", c.train_manifest);
  path_field("test", c.test_manifest);
  path_field("out", c.out_dir);
  if (!j.contains("out")) c.out_dir = base_dir / c.out_dir;
  read_field(j, "seed", c.seed, "config");
  read_field(j, "rim_all_metrics", c.rim_all_metrics, "config");
  read_field(j, "outer_folds", c.outer_folds, "config");
  c.site_scopes = detail::read_enum_list(j, "site_scopes", c.site_scopes, parse_site_scope);
  c.aggregations = detail::read_enum_list(j, "aggregations", c.aggregations, parse_aggregation);
  c.regions = detail::read_enum_list(j, "regions", c.regions, parse_region);
  c.metrics = detail::read_enum_list(j, "metrics", c.metrics, parse_metric);
  c.algorithms = detail::read_enum_list(j, "algorithms", c.algorithms, parse_algorithm);
  c.regimes = detail::read_enum_list(j, "regimes", c.regimes, parse_regime);
  c.models = detail::read_enum_list(j, "models", c.models, parse_model_kind);
  if (j.contains("icc_form")) {
    std::string s;
    read_field(j, "icc_form", s, "config");
    const auto f = detail::parse_icc_form(s);
    if (!f) throw ConfigError("icc_form must be \"ICC(2,1)\" or \"ICC(3,1)\"");
    c.icc_form = *f;
  }
  if (j.contains("perturbation")) {
    const auto& p = j.at("perturbation");
    detail::check_keys(p, {"n_replicates", "max_displacement_mm", "correlation_length_mm", "dice_floor"},
                       "perturbation");
    read_field(p, "n_replicates", c.perturbation.n_replicates, "perturbation");
    read_field(p, "max_displacement_mm", c.perturbation.max_displacement_mm, "perturbation");
    read_field(p, "correlation_length_mm", c.perturbation.correlation_length_mm, "perturbation");
    read_field(p, "dice_floor", c.perturbation.dice_floor, "perturbation");
  }
  if (j.contains("discretization")) {
    const auto& d = j.at("discretization");
    detail::check_keys(d, {"bin_width"}, "discretization");
    read_field(d, "bin_width", c.discretization.bin_width, "discretization");
  }
  if (j.contains("rim")) {
    const auto& r = j.at("rim");
    detail::check_keys(r, {"inner_mm", "outer_mm"}, "rim");
    read_field(r, "inner_mm", c.rim.inner_mm, "rim");
    read_field(r, "outer_mm", c.rim.outer_mm, "rim");
  }
  if (j.contains("selection")) {
    const auto& s = j.at("selection");
    const std::string w = "selection";
    detail::check_keys(s,
                       {"w", "icc_threshold", "pool_fraction", "target_k", "max_features", "inner_folds", "ufs",
                        "ufs_corr_cutoff", "ufs_p_cutoff"},
                       w);
    auto& sc = c.selection;
    read_field(s, "w", sc.w, w);
    read_field(s, "icc_threshold", sc.icc_threshold, w);
    read_field(s, "pool_fraction", sc.pool_fraction, w);
    if (s.contains("target_k") && !s.at("target_k").is_null()) {
      int k = 0;
      read_field(s, "target_k", k, w);
      sc.target_k = k;
    }
    read_field(s, "max_features", sc.max_features, w);
    read_field(s, "inner_folds", sc.inner_folds, w);
    read_field(s, "ufs", sc.ufs, w);
    read_field(s, "ufs_corr_cutoff", sc.ufs_corr_cutoff, w);
    read_field(s, "ufs_p_cutoff", sc.ufs_p_cutoff, w);
  }
  if (j.contains("lr")) {
    const auto& m = j.at("lr");
    detail::check_keys(m, {"ridge", "max_iter", "tolerance"}, "lr");
    read_field(m, "ridge", c.lr.ridge, "lr");
    read_field(m, "max_iter", c.lr.max_iter, "lr");
    read_field(m, "tolerance", c.lr.tolerance, "lr");
  }
  if (j.contains("lda")) {
    const auto& m = j.at("lda");
    detail::check_keys(m, {"shrinkage"}, "lda");
    read_field(m, "shrinkage", c.lda.shrinkage, "lda");
  }
  if (j.contains("synth")) c.synth = detail::parse_synth(j.at("synth"));
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

}  // namespace radrobust
