#pragma once

// Segmentation robustness of features: intraclass correlation between the
// feature measured on the original VOI (rater 0) and on its perturbed
// replicates (raters 1..k-1).

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "radrobust/error.hpp"
#include "radrobust/feature_matrix.hpp"
#include "radrobust/log.hpp"
#include "radrobust/text.hpp"

namespace radrobust {

/// ICC threshold used by the fully-robust and semi-robust selection rules.
inline constexpr double kRobustIcc = 0.8;
/// Reporting categories.
inline constexpr double kExcellentIcc = 0.9;
inline constexpr double kMediumIcc = 0.7;

enum class IccForm {
  agreement_random,     // ICC(2,1): two-way random effects, absolute agreement, single rater
  consistency_mixed,    // ICC(3,1): two-way mixed effects, consistency, single rater
};

enum class IccCategory { excellent, medium, poor };

inline std::string to_string(IccCategory c) {
  switch (c) {
    case IccCategory::excellent: return "excellent";
    case IccCategory::medium: return "medium";
    case IccCategory::poor: return "poor";
  }
  return "poor";
}

inline IccCategory categorize_icc(double icc) {
  if (icc >= kExcellentIcc) return IccCategory::excellent;
  if (icc >= kMediumIcc) return IccCategory::medium;
  return IccCategory::poor;
}

/// Negative or undefined ICC maps to 0 when used as a robustness score.
inline double clamp_icc(double icc) {
  if (std::isnan(icc)) return 0.0;
  return std::clamp(icc, 0.0, 1.0);
}

struct AnovaTable {
  int n = 0;  // subjects
  int k = 0;  // raters
  double ms_rows = 0.0;
  double ms_cols = 0.0;
  double ms_error = 0.0;
  double ss_total = 0.0;
};

inline AnovaTable two_way_anova(const Eigen::MatrixXd& x) {
  AnovaTable t;
  t.n = static_cast<int>(x.rows());
  t.k = static_cast<int>(x.cols());
  const double gm = x.mean();
  const Eigen::VectorXd rm = x.rowwise().mean();
  const Eigen::RowVectorXd cm = x.colwise().mean();
  const double ssr = t.k * (rm.array() - gm).square().sum();
  const double ssc = t.n * (cm.array() - gm).square().sum();
  t.ss_total = (x.array() - gm).square().sum();
  const double sse = std::max(t.ss_total - ssr - ssc, 0.0);
  t.ms_rows = ssr / (t.n - 1);
  t.ms_cols = ssc / (t.k - 1);
  t.ms_error = sse / ((t.n - 1) * (t.k - 1));
  return t;
}

struct IccResult {
  double icc = 1.0;
  double ci_lo = 1.0;
  double ci_hi = 1.0;
};

/// ICC of a subjects x raters matrix with a 95% confidence interval from the
/// F distribution. Identical values everywhere give ICC 1 with a degenerate
/// [1,1] interval.
inline IccResult compute_icc(const Eigen::MatrixXd& x, IccForm form = IccForm::agreement_random, double alpha = 0.05) {
  if (x.rows() < 2 || x.cols() < 2) throw ComputeError("icc", "ICC needs at least 2 subjects and 2 raters");
  if (x.hasNaN()) throw ComputeError("icc", "ICC input contains NaN");
  const AnovaTable t = two_way_anova(x);
  const double scale = x.cwiseAbs().maxCoeff();
  if (t.ss_total <= 1e-24 * scale * scale * static_cast<double>(x.size())) return {1.0, 1.0, 1.0};
  // Raters that agree exactly: the ANOVA would leave a rounding-level MSE.
  bool identical = true;
  for (Eigen::Index j = 1; j < x.cols() && identical; ++j) identical = x.col(j) == x.col(0);
  if (identical) return {1.0, 1.0, 1.0};

  const double n = t.n, k = t.k;
  const double msr = t.ms_rows, msc = t.ms_cols, mse = t.ms_error;
  IccResult r;
  if (form == IccForm::agreement_random) {
    r.icc = (msr - mse) / (msr + (k - 1.0) * mse + k / n * (msc - mse));
  } else {
    r.icc = (msr - mse) / (msr + (k - 1.0) * mse);
  }
  if (mse <= 0.0 || r.icc >= 1.0) {
    r.ci_lo = r.ci_hi = r.icc;
    return r;
  }
  using boost::math::fisher_f_distribution;
  using boost::math::quantile;
  double lo = -1.0, hi = 1.0;
  try {
    if (form == IccForm::agreement_random) {
      const double a = k * r.icc / (n * (1.0 - r.icc));
      const double b = 1.0 + k * r.icc * (n - 1.0) / (n * (1.0 - r.icc));
      const double num = (a * msc + b * mse) * (a * msc + b * mse);
      const double den = (a * msc) * (a * msc) / (k - 1.0) + (b * mse) * (b * mse) / ((n - 1.0) * (k - 1.0));
      const double v = num / den;
      if (std::isfinite(v) && v > 0.0) {
        const double f1 = quantile(fisher_f_distribution<double>(n - 1.0, v), 1.0 - alpha / 2.0);
        const double f2 = quantile(fisher_f_distribution<double>(v, n - 1.0), 1.0 - alpha / 2.0);
        lo = n * (msr - f1 * mse) / (f1 * (k * msc + (k * n - k - n) * mse) + n * msr);
        hi = n * (f2 * msr - mse) / (k * msc + (k * n - k - n) * mse + n * f2 * msr);
      }
    } else {
      const double f = msr / mse;
      const double df2 = (n - 1.0) * (k - 1.0);
      const double fl = f / quantile(fisher_f_distribution<double>(n - 1.0, df2), 1.0 - alpha / 2.0);
      const double fu = f * quantile(fisher_f_distribution<double>(df2, n - 1.0), 1.0 - alpha / 2.0);
      lo = (fl - 1.0) / (fl + k - 1.0);
      hi = (fu - 1.0) / (fu + k - 1.0);
    }
  } catch (const std::exception&) {
    lo = -1.0;
    hi = 1.0;
  }
  if (!std::isfinite(lo)) lo = -1.0;
  if (!std::isfinite(hi)) hi = 1.0;
  r.ci_lo = std::min(lo, r.icc);
  r.ci_hi = std::max(hi, r.icc);
  return r;
}

struct FeatureRobustness {
  std::string feature;
  double icc = 1.0;
  double ci_lo = 1.0;
  double ci_hi = 1.0;
  IccCategory category = IccCategory::excellent;
};

struct RobustnessProfile {
  std::vector<FeatureRobustness> features;

  const FeatureRobustness* find(const std::string& name) const {
    for (const auto& f : features) {
      if (f.feature == name) return &f;
    }
    return nullptr;
  }

  double icc(const std::string& name) const {
    const auto* f = find(name);
    if (f == nullptr) throw alignment_error("robustness profile has no feature '" + name + "'");
    return f->icc;
  }

  std::map<IccCategory, int> category_counts() const {
    std::map<IccCategory, int> out{{IccCategory::excellent, 0}, {IccCategory::medium, 0}, {IccCategory::poor, 0}};
    for (const auto& f : features) ++out[f.category];
    return out;
  }
};

/// Per-feature ICC over the subjects x (1 + replicates) matrix. All matrices
/// must share feature names and patient order. Subjects with a NaN for a
/// feature are left out of that feature's ICC.
inline RobustnessProfile profile_features(const FeatureMatrix& original, const std::vector<FeatureMatrix>& replicates,
                                          IccForm form = IccForm::agreement_random) {
  if (replicates.empty()) throw alignment_error("no perturbation replicates");
  for (const auto& r : replicates) {
    if (r.feature_names != original.feature_names) throw alignment_error("replicate feature catalog differs");
    if (r.patient_ids != original.patient_ids) throw alignment_error("replicate patient order differs");
  }
  const auto n = static_cast<Eigen::Index>(original.rows());
  const auto k = static_cast<Eigen::Index>(replicates.size() + 1);
  RobustnessProfile prof;
  prof.features.reserve(original.cols());
  for (std::size_t j = 0; j < original.cols(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < n; ++i) {
      bool ok = !std::isnan(original.values(i, col));
      for (const auto& r : replicates) ok = ok && !std::isnan(r.values(i, col));
      if (ok) keep.push_back(i);
    }
    FeatureRobustness fr{original.feature_names[j]};
    if (keep.size() < 2) {
      log::warn("feature " + fr.feature + ": fewer than 2 complete subjects, ICC undefined");
      fr.icc = fr.ci_lo = fr.ci_hi = std::nan("");
      fr.category = IccCategory::poor;
      prof.features.push_back(fr);
      continue;
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(keep.size()), k);
    for (std::size_t a = 0; a < keep.size(); ++a) {
      x(static_cast<Eigen::Index>(a), 0) = original.values(keep[a], col);
      for (std::size_t r = 0; r < replicates.size(); ++r) {
        x(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(r + 1)) = replicates[r].values(keep[a], col);
      }
    }
    const auto res = compute_icc(x, form);
    fr.icc = res.icc;
    fr.ci_lo = res.ci_lo;
    fr.ci_hi = res.ci_hi;
    fr.category = categorize_icc(res.icc);
    prof.features.push_back(fr);
  }
  return prof;
}

inline void write_robustness_report(const RobustnessProfile& p, std::ostream& out) {
  out << "feature,icc,ci_lo,ci_hi,category\n";
  for (const auto& f : p.features) {
    out << f.feature << ',' << text::format_double(f.icc) << ',' << text::format_double(f.ci_lo) << ','
        << text::format_double(f.ci_hi) << ',' << to_string(f.category) << '\n';
  }
}

inline void write_robustness_report(const RobustnessProfile& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("io", "cannot write " + path.string());
  write_robustness_report(p, out);
}

inline RobustnessProfile read_robustness_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("io", "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (text::trim(line) != "feature,icc,ci_lo,ci_hi,category") throw schema_error(path.string() + ": bad robustness header");
  RobustnessProfile p;
  while (std::getline(in, line)) {
    const auto t = text::trim(line);
    if (t.empty()) continue;
    const auto c = text::split(t, ',');
    if (c.size() != 5) throw format_error(path.string() + ": expected 5 cells");
    FeatureRobustness f{std::string(c[0])};
    auto icc = text::parse_double(c[1]);
    auto lo = text::parse_double(c[2]);
    auto hi = text::parse_double(c[3]);
    if (!icc || !lo || !hi) throw format_error(path.string() + ": bad number in row " + f.feature);
    f.icc = *icc;
    f.ci_lo = *lo;
    f.ci_hi = *hi;
    f.category = categorize_icc(f.icc);
    p.features.push_back(f);
  }
  return p;
}

}  // namespace radrobust
