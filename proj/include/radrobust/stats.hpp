#pragma once

// Small statistics toolkit shared by selection and evaluation: ranks, AUC,
// operating thresholds, ANOVA F test, Pearson correlation, stratified folds.

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "radrobust/error.hpp"
#include "radrobust/rng.hpp"

namespace radrobust::stats {

using Labels = std::vector<int>;  // 1 = response (positive), 0 = non-response

inline std::size_t count_positive(const Labels& y) {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
}

inline void require_both_classes(const Labels& y, const char* what) {
  const auto pos = count_positive(y);
  if (pos == 0 || pos == y.size()) throw ComputeError("undefined-metric", std::string(what) + " needs both classes");
}

/// Average ranks (1-based), ties share the mean rank.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
    i = j + 1;
  }
  return r;
}

/// Mann-Whitney AUC; tied positive/negative pairs count one half.
inline double auc(const std::vector<double>& scores, const Labels& y) {
  require_both_classes(y, "AUC");
  const auto r = average_ranks(scores);
  double sum_pos = 0.0;
  const double n1 = static_cast<double>(count_positive(y));
  const double n0 = static_cast<double>(y.size()) - n1;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 1) sum_pos += r[i];
  }
  return (sum_pos - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
}

inline double auc(const Eigen::VectorXd& scores, const Labels& y) {
  return auc(std::vector<double>(scores.data(), scores.data() + scores.size()), y);
}

struct BinaryMetrics {
  double se = 0.0;  // sensitivity, fraction in [0,1]
  double sp = 0.0;  // specificity
  double gmean() const { return std::sqrt(se * sp); }
};

/// Scores >= threshold are called positive.
inline BinaryMetrics confusion_metrics(const std::vector<double>& scores, const Labels& y, double threshold) {
  require_both_classes(y, "sensitivity/specificity");
  double tp = 0, fn = 0, tn = 0, fp = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool call = scores[i] >= threshold;
    if (y[i] == 1) (call ? tp : fn) += 1;
    else (call ? fp : tn) += 1;
  }
  return {tp / (tp + fn), tn / (tn + fp)};
}

/// Threshold maximizing G-Mean on the given (training) scores. Candidates are
/// midpoints between consecutive distinct scores plus the two extremes; ties
/// in G-Mean keep the lowest threshold.
inline double gmean_threshold(const std::vector<double>& scores, const Labels& y) {
  require_both_classes(y, "G-Mean threshold");
  std::vector<double> s = scores;
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  std::vector<double> cand;
  cand.push_back(s.front());
  for (std::size_t i = 0; i + 1 < s.size(); ++i) cand.push_back(0.5 * (s[i] + s[i + 1]));
  cand.push_back(std::nextafter(s.back(), std::numeric_limits<double>::infinity()));
  double best_t = cand.front(), best = -1.0;
  for (double t : cand) {
    const double g = confusion_metrics(scores, y, t).gmean();
    if (g > best) {
      best = g;
      best_t = t;
    }
  }
  return best_t;
}

inline double mean(const Eigen::VectorXd& v) { return v.mean(); }

/// Pearson correlation; 0 when either side is constant.
inline double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  const double saa = (da * da).sum(), sbb = (db * db).sum();
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return (da * db).sum() / std::sqrt(saa * sbb);
}

struct FTest {
  double f = 0.0;
  double p = 1.0;
};

/// One-way ANOVA F test of a feature across the two label groups. Constant
/// features give F = 0, p = 1; zero within-group variance with separated
/// means gives F = inf, p = 0.
inline FTest anova_f(const Eigen::VectorXd& x, const Labels& y) {
  require_both_classes(y, "ANOVA");
  double s[2] = {0, 0}, n[2] = {0, 0};
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    s[y[static_cast<std::size_t>(i)]] += x[i];
    n[y[static_cast<std::size_t>(i)]] += 1;
  }
  const double m[2] = {s[0] / n[0], s[1] / n[1]};
  const double gm = x.mean();
  double ssb = n[0] * (m[0] - gm) * (m[0] - gm) + n[1] * (m[1] - gm) * (m[1] - gm);
  double ssw = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double d = x[i] - m[y[static_cast<std::size_t>(i)]];
    ssw += d * d;
  }
  const double df_w = static_cast<double>(x.size()) - 2.0;
  const double scale = std::max(x.cwiseAbs().maxCoeff(), 1e-300);
  if (ssb <= 1e-24 * scale * scale * x.size()) return {0.0, 1.0};
  if (ssw <= 0.0) return {std::numeric_limits<double>::infinity(), 0.0};
  FTest t;
  t.f = ssb / (ssw / df_w);
  t.p = boost::math::cdf(boost::math::complement(boost::math::fisher_f_distribution<double>(1.0, df_w), t.f));
  return t;
}

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified k-fold split: each class is shuffled with the seed and dealt
/// round-robin into folds. Throws if any class has fewer than k members.
inline std::vector<Fold> stratified_kfold(const Labels& y, int k, std::uint64_t seed) {
  std::vector<std::size_t> cls[2];
  for (std::size_t i = 0; i < y.size(); ++i) cls[y[i] == 1 ? 1 : 0].push_back(i);
  for (const auto& c : cls) {
    if (static_cast<int>(c.size()) < k) {
      throw ComputeError("stratification", "a class has " + std::to_string(c.size()) + " samples, fewer than " +
                                               std::to_string(k) + " folds");
    }
  }
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> test(static_cast<std::size_t>(k));
  int slot = 0;
  for (auto& c : cls) {
    rng.shuffle(c);
    for (std::size_t idx : c) {
      test[static_cast<std::size_t>(slot)].push_back(idx);
      slot = (slot + 1) % k;
    }
  }
  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    auto& fold = folds[static_cast<std::size_t>(f)];
    fold.test = test[static_cast<std::size_t>(f)];
    std::sort(fold.test.begin(), fold.test.end());
    std::vector<char> in_test(y.size(), 0);
    for (auto i : fold.test) in_test[i] = 1;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (!in_test[i]) fold.train.push_back(i);
    }
  }
  return folds;
}

/// Folds for small inner loops: k is reduced to the minority class size (at
/// least 2) so tiny training folds can still be cross-validated.
inline std::vector<Fold> inner_folds(const Labels& y, int k, std::uint64_t seed) {
  const auto pos = static_cast<int>(count_positive(y));
  const int minority = std::min(pos, static_cast<int>(y.size()) - pos);
  return stratified_kfold(y, std::max(2, std::min(k, minority)), seed);
}

inline Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

inline Eigen::MatrixXd take_cols(const Eigen::MatrixXd& x, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(cols[j]));
  return out;
}

inline Labels take(const Labels& y, const std::vector<std::size_t>& rows) {
  Labels out;
  out.reserve(rows.size());
  for (auto i : rows) out.push_back(y[i]);
  return out;
}

/// Column standardizer fitted on training rows; constant columns get sd 1.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd sd;

  static Standardizer fit(const Eigen::MatrixXd& x) {
    Standardizer s;
    s.mean = x.colwise().mean();
    s.sd = ((x.rowwise() - s.mean).array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt();
    for (Eigen::Index j = 0; j < s.sd.size(); ++j) {
      if (!(s.sd[j] > 1e-12 * std::max(1.0, std::abs(s.mean[j])))) s.sd[j] = 1.0;
    }
    return s;
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    return ((x.rowwise() - mean).array().rowwise() / sd.array()).matrix();
  }
};

}  // namespace radrobust::stats
