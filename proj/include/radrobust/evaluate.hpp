#pragma once

// Train/test evaluation of one (metric, site scope, aggregation, region)
// configuration: a no-selection baseline plus, for every robustness regime,
// the (algorithm, model) pair with the best outer cross-validated AUC on the
// training cohort, refit on all training rows and scored once on the test
// cohort.

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "radrobust/error.hpp"
#include "radrobust/feature_matrix.hpp"
#include "radrobust/featsel.hpp"
#include "radrobust/labels.hpp"
#include "radrobust/log.hpp"
#include "radrobust/models.hpp"
#include "radrobust/robustness.hpp"
#include "radrobust/stats.hpp"
#include "radrobust/text.hpp"

namespace radrobust {

struct GroupKey {
  SiteScope scope = SiteScope::all;
  Aggregation aggregation = Aggregation::merged;
  Region region = Region::full;

  std::string str() const { return to_string(scope) + "." + to_string(aggregation) + "." + to_string(region); }
  auto operator<=>(const GroupKey&) const = default;
};

struct ConfigKey {
  ResponseMetric metric = ResponseMetric::VolR;
  GroupKey group;
  auto operator<=>(const ConfigKey&) const = default;
};

/// Features and labels of one cohort.
struct CohortData {
  FeatureMatrix features;                                    // every group's columns
  std::map<ResponseMetric, std::map<std::string, int>> labels;  // metric -> patient -> 0/1
};

struct EvalPlan {
  std::vector<Algorithm> algorithms{Algorithm::sfs};
  std::vector<Regime> regimes{Regime::predictive, Regime::fully_robust, Regime::semi_robust, Regime::weighted};
  std::vector<ModelKind> models{ModelKind::LR, ModelKind::LDA};
  SelectionConfig selection;  // algorithm and regime are overwritten per candidate
  ModelSpec lr{ModelKind::LR};
  ModelSpec lda{ModelKind::LDA};
  int outer_folds = 5;
  std::uint64_t seed = 0;

  const ModelSpec& spec(ModelKind k) const { return k == ModelKind::LR ? lr : lda; }
};

struct Metrics {
  double auc = std::nan("");
  double se = std::nan("");  // percent
  double sp = std::nan("");  // percent
  double gmean() const { return std::sqrt(se * sp); }
};

struct Change {
  double auc = std::nan("");
  double gmean = std::nan("");
  double se = std::nan("");
  double sp = std::nan("");
};

struct EvalRow {
  ConfigKey key;
  std::string regime = "none";  // "none" marks the no-selection baseline
  std::string algorithm = "none";
  std::string model;
  Metrics train;  // outer cross-validation means
  Metrics test;
  std::optional<Change> change;  // percent change of test metrics vs baseline
  std::size_t nf = 0;
  double avg_icc = std::nan("");
  double sd_icc = std::nan("");
  std::string status = "ok";
  std::vector<std::string> selected;
  FittedPipeline fitted;  // final model, kept for audits
  double threshold = 0.0;
};

/// Column indices of the group in catalog order.
inline std::vector<std::size_t> group_columns(const FeatureMatrix& m, const GroupKey& g) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    const auto meta = parse_column_name(m.feature_names[j]);
    if (meta.site_scope == g.scope && meta.aggregation == g.aggregation && meta.region == g.region) out.push_back(j);
  }
  return out;
}

struct PreparedSplit {
  Eigen::MatrixXd x;
  stats::Labels y;
  std::vector<std::string> patients;
};

/// Rows with a label and at least one non-NaN feature in the group.
inline PreparedSplit prepare_split(const CohortData& c, const std::vector<std::size_t>& cols, ResponseMetric metric,
                                   const std::string& what) {
  PreparedSplit out;
  const auto lab_it = c.labels.find(metric);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < c.features.rows(); ++i) {
    const auto& pid = c.features.patient_ids[i];
    if (lab_it == c.labels.end() || !lab_it->second.contains(pid)) {
      log::info(what + ": patient " + pid + " has no " + to_string(metric) + " label, excluded");
      continue;
    }
    bool any = false;
    for (auto j : cols) any = any || !std::isnan(c.features.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    if (!any) {
      log::info(what + ": patient " + pid + " has no lesion in this scope, excluded");
      continue;
    }
    rows.push_back(i);
    out.y.push_back(lab_it->second.at(pid));
    out.patients.push_back(pid);
  }
  out.x = stats::take_cols(stats::take_rows(c.features.values, rows), cols);
  return out;
}

/// Median-impute NaNs of `x` using medians of `ref` rows (train statistics).
inline Eigen::MatrixXd impute_with(const Eigen::MatrixXd& ref, Eigen::MatrixXd x) {
  std::vector<std::size_t> all(static_cast<std::size_t>(ref.rows()));
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  impute_nan(x, column_medians(ref, all));
  return x;
}

namespace detail {

/// Fit (select + model) on training rows; returns the pipeline and the
/// training-score threshold maximizing G-Mean.
struct TrainedModel {
  SelectionResult selection;
  FittedPipeline pipeline;
  double threshold = 0.0;
};

inline TrainedModel train_candidate(const Eigen::MatrixXd& x_raw, const stats::Labels& y,
                                    const std::vector<std::string>& names, const std::vector<double>& icc,
                                    const std::optional<SelectionConfig>& sel, const ModelSpec& model) {
  TrainedModel t;
  const Eigen::MatrixXd x = impute_with(x_raw, x_raw);
  std::vector<std::size_t> cols;
  if (sel) {
    t.selection = select_features(x, y, names, icc, *sel, model);
    cols = t.selection.selected_columns;
  } else {
    for (std::size_t j = 0; j < names.size(); ++j) cols.push_back(j);
    t.selection.selected_columns = cols;
    t.selection.selected = names;
  }
  t.pipeline = fit_pipeline(model, x, y, cols);
  const Eigen::VectorXd s = t.pipeline.score(x);
  t.threshold = stats::gmean_threshold({s.data(), s.data() + s.size()}, y);
  return t;
}

inline Metrics score_candidate(const TrainedModel& t, const Eigen::MatrixXd& x_train_raw, const Eigen::MatrixXd& x_raw,
                               const stats::Labels& y) {
  const Eigen::MatrixXd x = impute_with(x_train_raw, x_raw);
  const Eigen::VectorXd s = t.pipeline.score(x);
  const std::vector<double> sv(s.data(), s.data() + s.size());
  const auto bm = stats::confusion_metrics(sv, y, t.threshold);
  return {stats::auc(sv, y), 100.0 * bm.se, 100.0 * bm.sp};
}

inline Metrics cross_validate(const PreparedSplit& tr, const std::vector<std::string>& names,
                              const std::vector<double>& icc, const std::optional<SelectionConfig>& sel,
                              const ModelSpec& model, int folds, std::uint64_t seed) {
  const auto fs = stats::stratified_kfold(tr.y, folds, seed);
  Metrics m{0.0, 0.0, 0.0};
  for (const auto& f : fs) {
    const Eigen::MatrixXd xtr = stats::take_rows(tr.x, f.train);
    const auto t = train_candidate(xtr, stats::take(tr.y, f.train), names, icc, sel, model);
    const auto r = score_candidate(t, xtr, stats::take_rows(tr.x, f.test), stats::take(tr.y, f.test));
    m.auc += r.auc;
    m.se += r.se;
    m.sp += r.sp;
  }
  const double k = static_cast<double>(fs.size());
  return {m.auc / k, m.se / k, m.sp / k};
}

inline double percent_change(double with, double without) {
  if (std::isnan(with) || std::isnan(without) || without == 0.0) return std::nan("");
  return 100.0 * (with - without) / without;
}

}  // namespace detail

/// Evaluate one configuration. Test labels are touched only when computing
/// test metrics.
inline std::vector<EvalRow> evaluate_configuration(const CohortData& train, const CohortData& test, const ConfigKey& key,
                                                   const RobustnessProfile& profile, const EvalPlan& plan) {
  const auto cols_tr = group_columns(train.features, key.group);
  const auto cols_te = group_columns(test.features, key.group);
  if (cols_tr.empty()) throw alignment_error("training features lack group " + key.group.str());
  std::vector<std::string> names;
  for (auto j : cols_tr) names.push_back(train.features.feature_names[j]);
  {
    std::vector<std::string> tn;
    for (auto j : cols_te) tn.push_back(test.features.feature_names[j]);
    if (tn != names) throw alignment_error("train and test feature columns differ for " + key.group.str());
  }
  std::vector<double> icc;
  for (const auto& n : names) icc.push_back(profile.icc(n));

  const auto tr = prepare_split(train, cols_tr, key.metric, "train");
  const auto te = prepare_split(test, cols_te, key.metric, "test");
  stats::require_both_classes(tr.y, "training cohort");
  stats::require_both_classes(te.y, "test cohort");

  const std::uint64_t cv_seed = derive_seed(plan.seed, std::string("outer-folds"));
  std::vector<EvalRow> rows;

  auto finish = [&](EvalRow& row, const std::optional<SelectionConfig>& sel, const ModelSpec& model) {
    const auto t = detail::train_candidate(tr.x, tr.y, names, icc, sel, model);
    row.test = detail::score_candidate(t, tr.x, te.x, te.y);
    row.selected = t.selection.selected;
    row.nf = row.selected.size();
    row.fitted = t.pipeline;
    row.threshold = t.threshold;
    if (sel) {
      row.avg_icc = t.selection.avg_icc;
      row.sd_icc = t.selection.sd_icc;
    } else {
      double s = 0.0, ss = 0.0;
      for (double v : icc) s += v;
      row.avg_icc = s / static_cast<double>(icc.size());
      for (double v : icc) ss += (v - row.avg_icc) * (v - row.avg_icc);
      row.sd_icc = icc.size() > 1 ? std::sqrt(ss / static_cast<double>(icc.size() - 1)) : 0.0;
    }
  };

  // Baseline: every feature, model picked by outer CV AUC.
  EvalRow base;
  base.key = key;
  {
    std::optional<std::pair<ModelKind, Metrics>> best;
    std::string last_error;
    for (auto mk : plan.models) {
      try {
        const auto m = detail::cross_validate(tr, names, icc, std::nullopt, plan.spec(mk), plan.outer_folds, cv_seed);
        if (!best || m.auc > best->second.auc) best = {{mk, m}};
      } catch (const Error& e) {
        last_error = e.kind() + ": " + e.what();
      }
    }
    if (best) {
      base.model = to_string(best->first);
      base.train = best->second;
      try {
        finish(base, std::nullopt, plan.spec(best->first));
      } catch (const Error& e) {
        base.status = "error: " + e.kind() + ": " + e.what();
      }
    } else {
      base.status = "error: " + last_error;
    }
  }
  rows.push_back(base);

  for (auto regime : plan.regimes) {
    EvalRow row;
    row.key = key;
    row.regime = to_string(regime);
    struct Best {
      Algorithm a;
      ModelKind m;
      Metrics cv;
    };
    std::optional<Best> best;
    std::string last_error;
    for (auto a : plan.algorithms) {
      for (auto mk : plan.models) {
        SelectionConfig sc = plan.selection;
        sc.algorithm = a;
        sc.regime = regime;
        try {
          const auto m = detail::cross_validate(tr, names, icc, sc, plan.spec(mk), plan.outer_folds, cv_seed);
          if (!best || m.auc > best->cv.auc) best = Best{a, mk, m};
        } catch (const Error& e) {
          last_error = to_string(a) + "/" + to_string(mk) + ": " + e.kind() + ": " + e.what();
        }
      }
    }
    if (!best) {
      row.status = "error: " + last_error;
      rows.push_back(row);
      continue;
    }
    row.algorithm = to_string(best->a);
    row.model = to_string(best->m);
    row.train = best->cv;
    SelectionConfig sc = plan.selection;
    sc.algorithm = best->a;
    sc.regime = regime;
    try {
      finish(row, sc, plan.spec(best->m));
      if (base.status == "ok") {
        row.change = Change{detail::percent_change(row.test.auc, base.test.auc),
                            detail::percent_change(row.test.gmean(), base.test.gmean()),
                            detail::percent_change(row.test.se, base.test.se),
                            detail::percent_change(row.test.sp, base.test.sp)};
      }
    } catch (const Error& e) {
      row.status = "error: " + e.kind() + ": " + e.what();
    }
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Report output

inline constexpr std::string_view kReportHeader =
    "metric,site_scope,aggregation,region,regime,algorithm,model,"
    "train_auc,train_gmean,train_se,train_sp,test_auc,test_gmean,test_se,test_sp,"
    "change_auc,change_gmean,change_se,change_sp,nf,avg_icc,sd_icc,status,selected";

namespace detail {

inline std::string cell(double v, int digits) { return std::isnan(v) ? "" : text::format_fixed(v, digits); }

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline void write_report_row(const EvalRow& r, std::ostream& out) {
  using detail::cell;
  const bool ok = r.status == "ok";
  out << to_string(r.key.metric) << ',' << to_string(r.key.group.scope) << ',' << to_string(r.key.group.aggregation)
      << ',' << to_string(r.key.group.region) << ',' << r.regime << ',' << r.algorithm << ',' << r.model << ',';
  auto metrics = [&](const Metrics& m) {
    out << cell(m.auc, 4) << ',' << cell(m.gmean(), 2) << ',' << cell(m.se, 2) << ',' << cell(m.sp, 2) << ',';
  };
  metrics(r.train);
  if (ok) metrics(r.test);
  else out << ",,,,";
  if (r.change && ok) {
    out << cell(r.change->auc, 2) << ',' << cell(r.change->gmean, 2) << ',' << cell(r.change->se, 2) << ','
        << cell(r.change->sp, 2) << ',';
  } else {
    out << ",,,,";
  }
  out << (ok ? std::to_string(r.nf) : "") << ',' << (ok ? cell(r.avg_icc, 4) : "") << ','
      << (ok ? cell(r.sd_icc, 4) : "") << ',' << detail::csv_quote(r.status) << ',';
  std::string sel;
  for (const auto& s : r.selected) sel += (sel.empty() ? "" : ";") + s;
  out << detail::csv_quote(sel) << '\n';
}

}  // namespace radrobust
