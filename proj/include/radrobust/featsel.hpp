#pragma once

// Feature selection under robustness regimes.
//
// Every selector sees a training matrix, binary labels and one ICC per column.
// Relevance scores s are min-max normalized to [0,1] and blended with the mean
// clamped ICC of the candidate set, c̄, as s_combined = (1-w)s + w c̄. The
// predictive regime runs the same code with w = 0, so the weighted regime at
// w = 0 reproduces it bit for bit.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "radrobust/error.hpp"
#include "radrobust/log.hpp"
#include "radrobust/models.hpp"
#include "radrobust/rng.hpp"
#include "radrobust/robustness.hpp"
#include "radrobust/stats.hpp"
#include "radrobust/text.hpp"

namespace radrobust {

enum class Algorithm { fscore, ulr, relief, mi, gini, lasso, ga, sbs, sfs, rfe };
enum class Regime { predictive, fully_robust, semi_robust, weighted };

inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::fscore, Algorithm::ulr,  Algorithm::relief, Algorithm::mi,
                                               Algorithm::gini,   Algorithm::lasso, Algorithm::ga,    Algorithm::sbs,
                                               Algorithm::sfs,    Algorithm::rfe};
inline constexpr Regime kAllRegimes[] = {Regime::predictive, Regime::fully_robust, Regime::semi_robust,
                                         Regime::weighted};

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::fscore: return "fscore";
    case Algorithm::ulr: return "ulr";
    case Algorithm::relief: return "relief";
    case Algorithm::mi: return "mi";
    case Algorithm::gini: return "gini";
    case Algorithm::lasso: return "lasso";
    case Algorithm::ga: return "ga";
    case Algorithm::sbs: return "sbs";
    case Algorithm::sfs: return "sfs";
    case Algorithm::rfe: return "rfe";
  }
  return "?";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view s) {
  for (auto a : kAllAlgorithms) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::predictive: return "predictive";
    case Regime::fully_robust: return "fully_robust";
    case Regime::semi_robust: return "semi_robust";
    case Regime::weighted: return "weighted";
  }
  return "?";
}

inline std::optional<Regime> parse_regime(std::string_view s) {
  for (auto r : kAllRegimes) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

inline bool is_filter(Algorithm a) {
  return a == Algorithm::fscore || a == Algorithm::ulr || a == Algorithm::relief || a == Algorithm::mi ||
         a == Algorithm::gini;
}

struct SelectionConfig {
  Algorithm algorithm = Algorithm::sfs;
  Regime regime = Regime::predictive;
  double w = 0.5;
  double icc_threshold = kRobustIcc;
  double pool_fraction = 0.8;
  std::optional<int> target_k;
  int max_features = 30;
  int inner_folds = 5;
  bool ufs = true;
  double ufs_corr_cutoff = 0.9;
  double ufs_p_cutoff = 0.5;
  std::uint64_t seed = 0;

  /// Blend weight actually applied: w for the weighted regime, 0 otherwise.
  double effective_w() const { return regime == Regime::weighted ? w : 0.0; }

  void validate() const {
    if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("selection weight w must lie in [0,1]");
    if (!(pool_fraction > 0.0 && pool_fraction <= 1.0)) throw ConfigError("pool_fraction must lie in (0,1]");
    if (max_features < 1) throw ConfigError("max_features must be >= 1");
    if (inner_folds < 2) throw ConfigError("inner_folds must be >= 2");
    if (target_k && *target_k < 1) throw ConfigError("target_k must be >= 1");
  }
};

struct TraceRow {
  int iteration = 0;
  std::string set_hash;
  double s = 0.0;
  double c_bar = 0.0;
  double s_combined = 0.0;
  std::string action;
  std::vector<std::string> members;
};

struct SelectionResult {
  std::vector<std::string> selected;         // in selection order
  std::vector<std::size_t> selected_columns; // indices into the input matrix
  std::vector<std::string> ranking;          // filters: full greedy order
  std::map<std::string, double> scores;      // filters: normalized relevance s
  std::vector<std::string> ufs_kept;
  std::vector<TraceRow> trace;
  double avg_icc = std::nan("");
  double sd_icc = std::nan("");

  std::size_t nf() const { return selected.size(); }
};

/// 16-hex-digit FNV-1a hash of the sorted member names.
inline std::string candidate_set_hash(std::vector<std::string> names) {
  std::sort(names.begin(), names.end());
  std::string joined;
  for (const auto& n : names) {
    joined += n;
    joined += '\n';
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(joined)));
  return buf;
}

inline void write_trace_csv(const std::vector<TraceRow>& trace, std::ostream& out) {
  out << "iteration,candidate_set_hash,s,c_bar,s_combined,action\n";
  for (const auto& r : trace) {
    out << r.iteration << ',' << r.set_hash << ',' << text::format_double(r.s) << ',' << text::format_double(r.c_bar)
        << ',' << text::format_double(r.s_combined) << ',' << r.action << '\n';
  }
}

/// Min-max normalization to [0,1]; a constant vector maps to all zeros.
inline std::vector<double> min_max_normalize(const std::vector<double>& v) {
  if (v.empty()) return {};
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double a = *lo, b = *hi;
  std::vector<double> out(v.size(), 0.0);
  if (!(b > a)) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - a) / (b - a);
  return out;
}

// ---------------------------------------------------------------------------
// UFS pre-filter

/// Correlation then significance screen. Features are visited by descending
/// F statistic (ties by name) and kept when |r| <= cutoff against every kept
/// feature; survivors with ANOVA p > p_cutoff are dropped. Returns kept
/// column indices in their original order.
inline std::vector<std::size_t> ufs_prefilter(const Eigen::MatrixXd& x, const stats::Labels& y,
                                              const std::vector<std::string>& names,
                                              const std::vector<std::size_t>& pool, double corr_cutoff = 0.9,
                                              double p_cutoff = 0.5) {
  const auto pos = stats::count_positive(y);
  if (pos < 2 || y.size() - pos < 2) throw ComputeError("stratification", "UFS needs >= 2 samples per class");
  std::vector<stats::FTest> ft(static_cast<std::size_t>(x.cols()));
  for (auto j : pool) ft[j] = stats::anova_f(x.col(static_cast<Eigen::Index>(j)), y);
  std::vector<std::size_t> order = pool;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (ft[a].f != ft[b].f) return ft[a].f > ft[b].f;
    return names[a] < names[b];
  });
  std::vector<std::size_t> kept;
  for (auto j : order) {
    bool ok = true;
    for (auto k : kept) {
      if (std::abs(stats::pearson(x.col(static_cast<Eigen::Index>(j)), x.col(static_cast<Eigen::Index>(k)))) >
          corr_cutoff) {
        ok = false;
        break;
      }
    }
    if (ok) kept.push_back(j);
  }
  std::vector<std::size_t> out;
  for (auto j : kept) {
    if (ft[j].p <= p_cutoff) out.push_back(j);
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw ComputeError("empty-pool", "UFS removed every feature");
  return out;
}

// ---------------------------------------------------------------------------
// Filter relevance statistics (raw, before normalization)

/// Fisher score (m1 - m0)^2 / (v1 + v0) with population variances. Constant
/// columns score 0; zero within-class variance with distinct means scores the
/// largest finite double.
inline std::vector<double> fisher_scores(const Eigen::MatrixXd& x, const stats::Labels& y) {
  std::vector<double> out(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    double s[2] = {0, 0}, ss[2] = {0, 0}, n[2] = {0, 0};
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const int c = y[static_cast<std::size_t>(i)];
      s[c] += x(i, j);
      n[c] += 1;
    }
    const double m0 = s[0] / n[0], m1 = s[1] / n[1];
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const int c = y[static_cast<std::size_t>(i)];
      const double d = x(i, j) - (c ? m1 : m0);
      ss[c] += d * d;
    }
    const double num = (m1 - m0) * (m1 - m0);
    const double den = ss[0] / n[0] + ss[1] / n[1];
    double v = 0.0;
    if (den > 0.0) v = num / den;
    else if (num > 0.0) v = std::numeric_limits<double>::max();
    out[static_cast<std::size_t>(j)] = v;
  }
  return out;
}

/// |coefficient| of a univariate logistic regression on the standardized column.
inline std::vector<double> ulr_scores(const Eigen::MatrixXd& x, const stats::Labels& y) {
  std::vector<double> out(static_cast<std::size_t>(x.cols()), 0.0);
  ModelSpec spec;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const Eigen::MatrixXd col = x.col(j);
    const auto sc = stats::Standardizer::fit(col);
    const Eigen::MatrixXd z = sc.apply(col);
    if (z.cwiseAbs().maxCoeff() == 0.0) continue;
    out[static_cast<std::size_t>(j)] = std::abs(fit_lr(z, y, spec).coef[0]);
  }
  return out;
}

/// ReliefF for two classes: k nearest hits and misses under the Manhattan
/// distance on range-normalized features.
inline std::vector<double> relief_scores(const Eigen::MatrixXd& x, const stats::Labels& y, int k = 10) {
  const Eigen::Index n = x.rows(), p = x.cols();
  Eigen::MatrixXd z = x;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double lo = x.col(j).minCoeff(), hi = x.col(j).maxCoeff();
    if (hi > lo) z.col(j) = ((x.col(j).array() - lo) / (hi - lo)).matrix();
    else z.col(j).setZero();
  }
  const auto pos = static_cast<int>(stats::count_positive(y));
  const int k_hit = std::max(1, std::min(k, std::min(pos, static_cast<int>(n) - pos) - 1));
  Eigen::VectorXd wgt = Eigen::VectorXd::Zero(p);
  std::vector<std::pair<double, Eigen::Index>> dist;
  for (Eigen::Index i = 0; i < n; ++i) {
    dist.clear();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (t != i) dist.emplace_back((z.row(i) - z.row(t)).cwiseAbs().sum(), t);
    }
    std::sort(dist.begin(), dist.end());
    int hits = 0, misses = 0;
    for (const auto& [d, t] : dist) {
      const bool same = y[static_cast<std::size_t>(t)] == y[static_cast<std::size_t>(i)];
      if (same && hits < k_hit) {
        wgt -= (z.row(i) - z.row(t)).cwiseAbs().transpose() / static_cast<double>(k_hit);
        ++hits;
      } else if (!same && misses < k_hit) {
        wgt += (z.row(i) - z.row(t)).cwiseAbs().transpose() / static_cast<double>(k_hit);
        ++misses;
      }
      if (hits == k_hit && misses == k_hit) break;
    }
  }
  wgt /= static_cast<double>(n);
  return {wgt.data(), wgt.data() + p};
}

/// Mutual information (nats) between the label and the feature discretized
/// into `bins` equal-frequency bins (tied values share a bin).
inline std::vector<double> mi_scores(const Eigen::MatrixXd& x, const stats::Labels& y, int bins = 10) {
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<double> out(static_cast<std::size_t>(x.cols()), 0.0);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const std::vector<double> col(x.col(j).data(), x.col(j).data() + n);
    const auto r = stats::average_ranks(col);
    std::vector<std::array<double, 2>> joint(static_cast<std::size_t>(bins), {0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) {
      auto b = static_cast<int>(std::floor((r[i] - 1.0) * bins / static_cast<double>(n)));
      b = std::clamp(b, 0, bins - 1);
      joint[static_cast<std::size_t>(b)][static_cast<std::size_t>(y[i])] += 1.0;
    }
    const double py1 = static_cast<double>(stats::count_positive(y)) / static_cast<double>(n);
    const double py[2] = {1.0 - py1, py1};
    double mi = 0.0;
    for (const auto& cell : joint) {
      const double pb = (cell[0] + cell[1]) / static_cast<double>(n);
      for (int c = 0; c < 2; ++c) {
        const double pj = cell[static_cast<std::size_t>(c)] / static_cast<double>(n);
        if (pj > 0.0) mi += pj * std::log(pj / (pb * py[c]));
      }
    }
    out[static_cast<std::size_t>(j)] = std::max(mi, 0.0);
  }
  return out;
}

namespace detail {

struct GiniForest {
  const Eigen::MatrixXd& x;
  const stats::Labels& y;
  int max_depth;
  Rng& rng;
  std::vector<double>& imp;  // per-tree importance accumulator
  double n_boot = 0.0;

  static double gini(double pos, double n) {
    if (n <= 0.0) return 0.0;
    const double p = pos / n;
    return 2.0 * p * (1.0 - p);
  }

  void grow(std::vector<Eigen::Index>& rows, int depth) {
    const double n = static_cast<double>(rows.size());
    double pos = 0.0;
    for (auto r : rows) pos += y[static_cast<std::size_t>(r)];
    const double g = gini(pos, n);
    if (depth >= max_depth || rows.size() < 2 || g == 0.0) return;
    const auto p = static_cast<std::size_t>(x.cols());
    const std::size_t m = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(p))));
    std::vector<std::size_t> feats(p);
    std::iota(feats.begin(), feats.end(), 0);
    for (std::size_t i = 0; i < m; ++i) std::swap(feats[i], feats[i + rng.index(p - i)]);
    double best_gain = 0.0, best_thr = 0.0;
    std::size_t best_f = p;
    std::vector<std::pair<double, int>> v(rows.size());
    for (std::size_t fi = 0; fi < m; ++fi) {
      const auto f = static_cast<Eigen::Index>(feats[fi]);
      for (std::size_t i = 0; i < rows.size(); ++i) v[i] = {x(rows[i], f), y[static_cast<std::size_t>(rows[i])]};
      std::sort(v.begin(), v.end());
      double lpos = 0.0;
      for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        lpos += v[i].second;
        if (v[i].first == v[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1), nr = n - nl;
        const double child = (nl * gini(lpos, nl) + nr * gini(pos - lpos, nr)) / n;
        const double gain = g - child;
        if (gain > best_gain) {
          best_gain = gain;
          best_f = feats[fi];
          best_thr = 0.5 * (v[i].first + v[i + 1].first);
        }
      }
    }
    if (best_f == p) return;
    imp[best_f] += n / n_boot * best_gain;
    std::vector<Eigen::Index> left, right;
    for (auto r : rows) (x(r, static_cast<Eigen::Index>(best_f)) <= best_thr ? left : right).push_back(r);
    grow(left, depth + 1);
    grow(right, depth + 1);
  }
};

}  // namespace detail

/// Mean decrease in Gini impurity over a bootstrap random forest (each tree's
/// importances normalized to sum 1 before averaging).
inline std::vector<double> gini_scores(const Eigen::MatrixXd& x, const stats::Labels& y, std::uint64_t seed,
                                       int n_trees = 200, int max_depth = 4) {
  const auto p = static_cast<std::size_t>(x.cols());
  std::vector<double> total(p, 0.0), tree(p);
  Rng rng(seed);
  for (int t = 0; t < n_trees; ++t) {
    std::fill(tree.begin(), tree.end(), 0.0);
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(x.rows()));
    for (auto& r : rows) r = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(x.rows())));
    detail::GiniForest gf{x, y, max_depth, rng, tree, static_cast<double>(rows.size())};
    gf.grow(rows, 0);
    const double sum = std::accumulate(tree.begin(), tree.end(), 0.0);
    if (sum > 0.0) {
      for (std::size_t j = 0; j < p; ++j) total[j] += tree[j] / sum;
    }
  }
  for (auto& v : total) v /= n_trees;
  return total;
}

/// Raw filter statistic for every column of x.
inline std::vector<double> filter_scores_raw(Algorithm a, const Eigen::MatrixXd& x, const stats::Labels& y,
                                             std::uint64_t seed) {
  switch (a) {
    case Algorithm::fscore: return fisher_scores(x, y);
    case Algorithm::ulr: return ulr_scores(x, y);
    case Algorithm::relief: return relief_scores(x, y);
    case Algorithm::mi: return mi_scores(x, y);
    case Algorithm::gini: return gini_scores(x, y, seed);
    default: throw ConfigError(to_string(a) + " is not a filter algorithm");
  }
}

// ---------------------------------------------------------------------------
// L1 logistic regression path

struct LassoFit {
  Eigen::VectorXd coef;
  double intercept = 0.0;
};

/// Coordinate-descent L1 logistic regression (quadratic approximation outer
/// loop, warm started along the decreasing lambda grid). x is expected to be
/// standardized; penalty factors scale each coefficient's lambda.
inline std::vector<LassoFit> lasso_path(const Eigen::MatrixXd& x, const stats::Labels& y,
                                        const Eigen::VectorXd& penalty, const std::vector<double>& lambdas) {
  const Eigen::Index n = x.rows(), p = x.cols();
  const double dn = static_cast<double>(n);
  Eigen::VectorXd yy(n);
  for (Eigen::Index i = 0; i < n; ++i) yy[i] = y[static_cast<std::size_t>(i)];
  const double ybar = yy.mean();
  LassoFit cur{Eigen::VectorXd::Zero(p), std::log(ybar / (1.0 - ybar))};
  std::vector<LassoFit> out;
  Eigen::VectorXd eta(n), w(n), z(n), r(n);
  for (double lambda : lambdas) {
    for (int outer = 0; outer < 100; ++outer) {
      eta = (x * cur.coef).array() + cur.intercept;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double pr = detail::sigmoid(eta[i]);
        w[i] = std::max(pr * (1.0 - pr), 1e-5);
        z[i] = eta[i] + (yy[i] - pr) / w[i];
      }
      const Eigen::VectorXd prev = cur.coef;
      const double prev_b = cur.intercept;
      r = z - eta;
      for (int sweep = 0; sweep < 500; ++sweep) {
        double max_delta = 0.0;
        const double db = r.dot(w) / w.sum();
        cur.intercept += db;
        r.array() -= db;
        for (Eigen::Index j = 0; j < p; ++j) {
          const double old = cur.coef[j];
          double num = 0.0, den = 0.0;
          for (Eigen::Index i = 0; i < n; ++i) {
            const double wx = w[i] * x(i, j);
            num += wx * (r[i] + x(i, j) * old);
            den += wx * x(i, j);
          }
          num /= dn;
          den /= dn;
          if (den <= 0.0) continue;
          const double thr = lambda * penalty[j];
          const double nv = (num > thr ? num - thr : (num < -thr ? num + thr : 0.0)) / den;
          if (nv != old) {
            r -= x.col(j) * (nv - old);
            cur.coef[j] = nv;
            max_delta = std::max(max_delta, std::abs(nv - old));
          }
        }
        if (max_delta < 1e-8) break;
      }
      if ((cur.coef - prev).cwiseAbs().maxCoeff() < 1e-7 && std::abs(cur.intercept - prev_b) < 1e-7) break;
    }
    out.push_back(cur);
  }
  return out;
}

inline std::vector<double> lasso_lambda_grid(const Eigen::MatrixXd& x, const stats::Labels& y,
                                             const Eigen::VectorXd& penalty, int points = 50, double ratio = 1e-3) {
  Eigen::VectorXd yy(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) yy[i] = y[static_cast<std::size_t>(i)];
  const Eigen::VectorXd g = x.transpose() * (yy.array() - yy.mean()).matrix() / static_cast<double>(x.rows());
  double lmax = 0.0;
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    if (penalty[j] > 0.0) lmax = std::max(lmax, std::abs(g[j]) / penalty[j]);
  }
  if (!(lmax > 0.0)) lmax = 1.0;
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int t = 0; t < points; ++t) grid[static_cast<std::size_t>(t)] = lmax * std::pow(ratio, t / (points - 1.0));
  return grid;
}

// ---------------------------------------------------------------------------
// Selection engine

namespace detail {

class Selector {
public:
  Selector(const Eigen::MatrixXd& x, const stats::Labels& y, const std::vector<std::string>& names,
           const std::vector<double>& icc, const SelectionConfig& cfg, const ModelSpec& model)
      : x_(x), y_(y), names_(names), cfg_(cfg), model_(model), w_(cfg.effective_w()) {
    clamped_.resize(icc.size());
    robust_.resize(icc.size());
    for (std::size_t j = 0; j < icc.size(); ++j) {
      clamped_[j] = clamp_icc(icc[j]);
      robust_[j] = !std::isnan(icc[j]) && icc[j] > cfg.icc_threshold;
    }
    folds_ = stats::inner_folds(y, cfg.inner_folds, derive_seed(cfg.seed, std::string("inner-folds")));
  }

  std::vector<TraceRow> trace;

  double cbar(const std::vector<std::size_t>& set) const {
    if (set.empty()) return 0.0;
    double s = 0.0;
    for (auto j : set) s += clamped_[j];
    return s / static_cast<double>(set.size());
  }

  bool legal(const std::vector<std::size_t>& set) const {
    if (cfg_.regime != Regime::semi_robust || set.empty()) return true;
    std::size_t r = 0;
    for (auto j : set) r += robust_[j] ? 1 : 0;
    return static_cast<double>(r) >= cfg_.pool_fraction * static_cast<double>(set.size()) - 1e-12;
  }

  bool robust(std::size_t j) const { return robust_[j]; }

  double combine(double s, double c) const { return (1.0 - w_) * s + w_ * c; }

  double subset_auc(std::vector<std::size_t> set) {
    std::sort(set.begin(), set.end());
    std::string key;
    for (auto j : set) key += std::to_string(j) + ',';
    auto it = auc_cache_.find(key);
    if (it != auc_cache_.end()) return it->second;
    double a = 0.5;
    try {
      a = cv_auc(model_, x_, y_, set, folds_);
    } catch (const ComputeError& e) {
      log::debug(std::string("subset evaluation failed: ") + e.what());
    }
    auc_cache_.emplace(key, a);
    return a;
  }

  /// J(S) = (1-w) AUC(S) + w c̄(S), the objective wrappers stop on and keep.
  double objective(const std::vector<std::size_t>& set) { return combine(subset_auc(set), cbar(set)); }

  std::vector<std::string> names_of(const std::vector<std::size_t>& set) const {
    std::vector<std::string> out;
    out.reserve(set.size());
    for (auto j : set) out.push_back(names_[j]);
    return out;
  }

  void log_row(int it, const std::vector<std::size_t>& set, double s, double sc, std::string action) {
    auto members = names_of(set);
    trace.push_back({it, candidate_set_hash(members), s, cbar(set), sc, std::move(action), std::move(members)});
  }

  /// Index of the best score; ties go to the lexicographically smaller name.
  std::size_t argmax(const std::vector<double>& score, const std::vector<std::size_t>& feat) const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < score.size(); ++i) {
      if (score[i] > score[best] || (score[i] == score[best] && names_[feat[i]] < names_[feat[best]])) best = i;
    }
    return best;
  }

  // -- filters ------------------------------------------------------------

  SelectionResult filter(const std::vector<std::size_t>& pool, const Eigen::MatrixXd& xs) {
    const auto raw = filter_scores_raw(cfg_.algorithm, stats::take_cols(xs, pool), y_,
                                       derive_seed(cfg_.seed, std::string("forest")));
    const auto s = min_max_normalize(raw);
    SelectionResult res;
    std::map<std::size_t, double> s_of;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      s_of[pool[i]] = s[i];
      res.scores[names_[pool[i]]] = s[i];
    }
    const std::size_t limit = std::min<std::size_t>(static_cast<std::size_t>(cfg_.max_features), pool.size());
    std::vector<std::size_t> order, remaining = pool;
    while (order.size() < limit && !remaining.empty()) {
      std::vector<std::size_t> cand;
      std::vector<double> sc;
      for (auto f : remaining) {
        auto next = order;
        next.push_back(f);
        if (!legal(next)) continue;
        cand.push_back(f);
        sc.push_back(combine(s_of[f], cbar(next)));
      }
      if (cand.empty()) break;
      const auto b = argmax(sc, cand);
      order.push_back(cand[b]);
      remaining.erase(std::find(remaining.begin(), remaining.end(), cand[b]));
      log_row(static_cast<int>(order.size()), order, s_of[cand[b]], sc[b], "add " + names_[cand[b]]);
    }
    if (order.empty()) throw ComputeError("empty-pool", "no feature satisfies the semi-robust pool rule");
    res.ranking = names_of(order);
    std::size_t k = 1;
    if (cfg_.target_k) {
      k = std::min<std::size_t>(static_cast<std::size_t>(*cfg_.target_k), order.size());
    } else {
      double best = -1.0;
      for (std::size_t kk = 1; kk <= order.size(); ++kk) {
        const double a = subset_auc({order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk)});
        if (a > best) {
          best = a;
          k = kk;
        }
      }
    }
    std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    const double a = subset_auc(chosen);
    log_row(static_cast<int>(order.size()) + 1, chosen, a, combine(a, cbar(chosen)), "select k=" + std::to_string(k));
    res.selected_columns = chosen;
    return res;
  }

  // -- lasso ----------------------------------------------------------------

  SelectionResult lasso(const std::vector<std::size_t>& pool) {
    auto run = [&](const std::vector<std::size_t>& cols) -> std::optional<std::vector<std::size_t>> {
      const Eigen::MatrixXd xp = stats::take_cols(x_, cols);
      Eigen::VectorXd pf(static_cast<Eigen::Index>(cols.size()));
      for (std::size_t i = 0; i < cols.size(); ++i) pf[static_cast<Eigen::Index>(i)] = 1.0 - w_ * clamped_[cols[i]];
      const auto full_scaler = stats::Standardizer::fit(xp);
      const Eigen::MatrixXd xs = full_scaler.apply(xp);
      const auto grid = lasso_lambda_grid(xs, y_, pf);
      const auto full = lasso_path(xs, y_, pf, grid);
      std::vector<double> cv(grid.size(), 0.0);
      for (const auto& f : folds_) {
        const Eigen::MatrixXd tr = stats::take_rows(xp, f.train);
        const auto sc = stats::Standardizer::fit(tr);
        const auto path = lasso_path(sc.apply(tr), stats::take(y_, f.train), pf, grid);
        const Eigen::MatrixXd te = sc.apply(stats::take_rows(xp, f.test));
        const auto yt = stats::take(y_, f.test);
        for (std::size_t l = 0; l < grid.size(); ++l) cv[l] += stats::auc(te * path[l].coef, yt);
      }
      std::optional<std::size_t> best;
      std::vector<std::vector<std::size_t>> supports(grid.size());
      for (std::size_t l = 0; l < grid.size(); ++l) {
        cv[l] /= static_cast<double>(folds_.size());
        std::vector<std::pair<double, std::size_t>> nz;
        for (std::size_t i = 0; i < cols.size(); ++i) {
          const double c = std::abs(full[l].coef[static_cast<Eigen::Index>(i)]);
          if (c > 0.0) nz.emplace_back(c, cols[i]);
        }
        std::sort(nz.begin(), nz.end(), [&](const auto& a, const auto& b) {
          if (a.first != b.first) return a.first > b.first;
          return names_[a.second] < names_[b.second];
        });
        for (const auto& e : nz) supports[l].push_back(e.second);
        if (supports[l].empty() || !legal(supports[l])) continue;
        log_row(static_cast<int>(l) + 1, supports[l], cv[l], combine(cv[l], cbar(supports[l])),
                "lambda=" + text::format_double(grid[l]));
        if (!best || cv[l] > cv[*best]) best = l;
      }
      if (!best) return std::nullopt;
      return supports[*best];
    };
    auto sel = run(pool);
    if (!sel && cfg_.regime == Regime::semi_robust) {
      std::vector<std::size_t> robust_pool;
      for (auto j : pool) {
        if (robust_[j]) robust_pool.push_back(j);
      }
      if (!robust_pool.empty()) sel = run(robust_pool);
    }
    if (!sel) throw ComputeError("empty-selection", "LASSO selected no feature at any lambda");
    SelectionResult res;
    res.selected_columns = *sel;
    return res;
  }

  // -- wrappers -------------------------------------------------------------

  /// Start pool for backward methods: the whole pool, or for semi-robust the
  /// robust members plus as many non-robust members (highest univariate AUC
  /// distance from 0.5 first) as the pool rule admits.
  std::vector<std::size_t> backward_start(const std::vector<std::size_t>& pool) const {
    if (cfg_.regime != Regime::semi_robust) return pool;
    std::vector<std::size_t> out, fragile;
    for (auto j : pool) (robust_[j] ? out : fragile).push_back(j);
    if (out.empty()) throw ComputeError("empty-pool", "semi-robust regime: no feature has ICC above threshold");
    std::vector<double> strength(fragile.size());
    for (std::size_t i = 0; i < fragile.size(); ++i) {
      strength[i] = std::abs(stats::auc(x_.col(static_cast<Eigen::Index>(fragile[i])), y_) - 0.5);
    }
    std::vector<std::size_t> idx(fragile.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      if (strength[a] != strength[b]) return strength[a] > strength[b];
      return names_[fragile[a]] < names_[fragile[b]];
    });
    for (auto i : idx) {
      auto next = out;
      next.push_back(fragile[i]);
      if (!legal(next)) break;
      out = std::move(next);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  SelectionResult sfs(const std::vector<std::size_t>& pool) {
    std::vector<std::size_t> cur;
    double j_cur = objective(cur);
    const std::size_t limit = std::min<std::size_t>(
        cfg_.target_k ? static_cast<std::size_t>(*cfg_.target_k) : static_cast<std::size_t>(cfg_.max_features),
        pool.size());
    int it = 0;
    while (cur.size() < limit) {
      std::vector<std::size_t> cand;
      std::vector<double> auc;
      for (auto f : pool) {
        if (std::find(cur.begin(), cur.end(), f) != cur.end()) continue;
        auto next = cur;
        next.push_back(f);
        if (!legal(next)) continue;
        cand.push_back(f);
        auc.push_back(subset_auc(next));
      }
      if (cand.empty()) break;
      const auto s = min_max_normalize(auc);
      std::vector<double> sc(cand.size());
      for (std::size_t i = 0; i < cand.size(); ++i) {
        auto next = cur;
        next.push_back(cand[i]);
        sc[i] = combine(s[i], cbar(next));
      }
      const auto b = argmax(sc, cand);
      auto next = cur;
      next.push_back(cand[b]);
      const double j_new = objective(next);
      if (!cfg_.target_k && !cur.empty() && j_new - j_cur <= 1e-4) {
        log_row(++it, cur, subset_auc(cur), j_cur, "stop");
        break;
      }
      cur = std::move(next);
      j_cur = j_new;
      log_row(++it, cur, auc[b], sc[b], "add " + names_[cand[b]]);
    }
    SelectionResult res;
    res.selected_columns = cur;
    return res;
  }

  /// Bookkeeping for backward paths. With target_k the path stops at that
  /// size; otherwise the best J within the size cap is kept, ties going to
  /// the later (smaller) set. Returns true when the path should stop.
  bool keep_backward(const std::vector<std::size_t>& cur, double j, std::vector<std::size_t>& best,
                     double& j_best) const {
    if (cfg_.target_k) {
      if (cur.size() <= static_cast<std::size_t>(*cfg_.target_k)) {
        best = cur;
        return true;
      }
      return false;
    }
    const auto cap = static_cast<std::size_t>(cfg_.max_features);
    if (cur.size() <= cap && (best.size() > cap || j >= j_best)) {
      j_best = j;
      best = cur;
    }
    return false;
  }

  SelectionResult sbs(const std::vector<std::size_t>& pool) {
    std::vector<std::size_t> cur = backward_start(pool);
    std::vector<std::size_t> best = cur;
    double j_best = objective(cur);
    int it = 0;
    log_row(it, cur, subset_auc(cur), j_best, "start");
    while (cur.size() > 1) {
      std::vector<std::size_t> cand;
      std::vector<double> auc;
      for (auto f : cur) {
        std::vector<std::size_t> next;
        for (auto g : cur) {
          if (g != f) next.push_back(g);
        }
        if (!legal(next)) continue;
        cand.push_back(f);
        auc.push_back(subset_auc(next));
      }
      if (cand.empty()) break;
      const auto s = min_max_normalize(auc);
      std::vector<double> sc(cand.size());
      for (std::size_t i = 0; i < cand.size(); ++i) {
        std::vector<std::size_t> next;
        for (auto g : cur) {
          if (g != cand[i]) next.push_back(g);
        }
        sc[i] = combine(s[i], cbar(next));
      }
      const auto b = argmax(sc, cand);
      cur.erase(std::find(cur.begin(), cur.end(), cand[b]));
      const double j = objective(cur);
      log_row(++it, cur, auc[b], sc[b], "remove " + names_[cand[b]]);
      if (keep_backward(cur, j, best, j_best)) break;
    }
    SelectionResult res;
    res.selected_columns = best;
    return res;
  }

  SelectionResult rfe(const std::vector<std::size_t>& pool) {
    std::vector<std::size_t> cur = backward_start(pool);
    std::vector<std::size_t> best = cur;
    double j_best = objective(cur);
    int it = 0;
    log_row(it, cur, subset_auc(cur), j_best, "start");
    while (cur.size() > 1) {
      const auto fp = fit_pipeline(model_, x_, y_, cur);
      std::vector<double> mag(cur.size());
      for (std::size_t i = 0; i < cur.size(); ++i) mag[i] = std::abs(fp.model.coef[static_cast<Eigen::Index>(i)]);
      const auto s = min_max_normalize(mag);
      std::map<std::size_t, double> s_of;
      for (std::size_t i = 0; i < cur.size(); ++i) s_of[cur[i]] = s[i];
      const std::size_t drop = std::max<std::size_t>(1, cur.size() / 10);
      std::string dropped;
      for (std::size_t d = 0; d < drop && cur.size() > 1; ++d) {
        std::vector<std::size_t> cand;
        std::vector<double> sc;
        for (auto f : cur) {
          std::vector<std::size_t> next;
          for (auto g : cur) {
            if (g != f) next.push_back(g);
          }
          if (!legal(next)) continue;
          cand.push_back(f);
          sc.push_back(combine(1.0 - s_of[f], cbar(next)));
        }
        if (cand.empty()) break;
        const auto b = argmax(sc, cand);
        cur.erase(std::find(cur.begin(), cur.end(), cand[b]));
        dropped += (dropped.empty() ? "" : " ") + names_[cand[b]];
      }
      if (dropped.empty()) break;
      const double a = subset_auc(cur);
      const double j = combine(a, cbar(cur));
      log_row(++it, cur, a, j, "remove " + dropped);
      if (keep_backward(cur, j, best, j_best)) break;
    }
    SelectionResult res;
    res.selected_columns = best;
    return res;
  }

  SelectionResult ga(const std::vector<std::size_t>& pool) {
    constexpr int kPop = 40, kGenerations = 60, kElite = 2;
    constexpr double kCrossover = 0.8, kMutation = 0.02;
    const std::size_t p = pool.size();
    Rng rng(derive_seed(cfg_.seed, std::string("ga")));
    using Genome = std::vector<char>;
    auto members = [&](const Genome& g) {
      std::vector<std::size_t> s;
      for (std::size_t i = 0; i < p; ++i) {
        if (g[i]) s.push_back(pool[i]);
      }
      return s;
    };
    auto repair = [&](Genome& g) {
      auto on = [&](bool want_robust) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < p; ++i) {
          if (g[i] && (!want_robust || !robust_[pool[i]])) idx.push_back(i);
        }
        return idx;
      };
      // size cap
      for (auto idx = on(false); idx.size() > static_cast<std::size_t>(cfg_.max_features); idx = on(false)) {
        g[idx[rng.index(idx.size())]] = 0;
      }
      // semi-robust pool rule: switch off random non-robust members
      while (!legal(members(g))) {
        const auto idx = on(true);
        g[idx[rng.index(idx.size())]] = 0;
      }
      if (members(g).empty()) {
        std::vector<std::size_t> ok;
        for (std::size_t i = 0; i < p; ++i) {
          if (cfg_.regime != Regime::semi_robust || robust_[pool[i]]) ok.push_back(i);
        }
        if (ok.empty()) throw ComputeError("empty-pool", "no feature satisfies the semi-robust pool rule");
        g[ok[rng.index(ok.size())]] = 1;
      }
    };
    const double init_on = std::min(0.5, 5.0 / static_cast<double>(p));
    std::vector<Genome> popn(kPop, Genome(p, 0));
    for (auto& g : popn) {
      for (std::size_t i = 0; i < p; ++i) g[i] = rng.bernoulli(init_on) ? 1 : 0;
      repair(g);
    }
    std::vector<std::size_t> best_set;
    double best_j = -1.0;
    auto consider = [&](const std::vector<std::size_t>& s) {
      const double j = objective(s);
      if (j > best_j || (j == best_j && (s.size() < best_set.size() ||
                                         (s.size() == best_set.size() && names_of(s) < names_of(best_set))))) {
        best_j = j;
        best_set = s;
      }
    };
    for (int gen = 0; gen < kGenerations; ++gen) {
      std::vector<double> auc(kPop);
      for (int i = 0; i < kPop; ++i) auc[static_cast<std::size_t>(i)] = subset_auc(members(popn[static_cast<std::size_t>(i)]));
      const auto s = min_max_normalize(auc);
      std::vector<double> fit(kPop);
      for (int i = 0; i < kPop; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        fit[ui] = combine(s[ui], cbar(members(popn[ui])));
        consider(members(popn[ui]));
      }
      std::vector<int> rank(kPop);
      std::iota(rank.begin(), rank.end(), 0);
      std::stable_sort(rank.begin(), rank.end(), [&](int a, int b) {
        return fit[static_cast<std::size_t>(a)] > fit[static_cast<std::size_t>(b)];
      });
      const auto& top = popn[static_cast<std::size_t>(rank[0])];
      log_row(gen, members(top), auc[static_cast<std::size_t>(rank[0])], objective(members(top)), "generation");
      if (gen + 1 == kGenerations) break;
      auto tournament = [&]() -> const Genome& {
        const std::size_t a = rng.index(kPop), b = rng.index(kPop);
        return fit[a] > fit[b] || (fit[a] == fit[b] && a < b) ? popn[a] : popn[b];
      };
      std::vector<Genome> next;
      for (int e = 0; e < kElite; ++e) next.push_back(popn[static_cast<std::size_t>(rank[static_cast<std::size_t>(e)])]);
      while (static_cast<int>(next.size()) < kPop) {
        Genome c1 = tournament(), c2 = tournament();
        if (rng.bernoulli(kCrossover)) {
          for (std::size_t i = 0; i < p; ++i) {
            if (rng.bernoulli(0.5)) std::swap(c1[i], c2[i]);
          }
        }
        for (auto* c : {&c1, &c2}) {
          for (std::size_t i = 0; i < p; ++i) {
            if (rng.bernoulli(kMutation)) (*c)[i] = static_cast<char>(!(*c)[i]);
          }
          repair(*c);
          if (static_cast<int>(next.size()) < kPop) next.push_back(*c);
        }
      }
      popn = std::move(next);
    }
    SelectionResult res;
    res.selected_columns = best_set;
    return res;
  }

private:
  const Eigen::MatrixXd& x_;
  const stats::Labels& y_;
  const std::vector<std::string>& names_;
  const SelectionConfig& cfg_;
  const ModelSpec& model_;
  double w_;
  std::vector<double> clamped_;
  std::vector<bool> robust_;
  std::vector<stats::Fold> folds_;
  std::map<std::string, double> auc_cache_;
};

inline std::string icc_histogram(const std::vector<double>& icc) {
  int bins[11] = {};
  for (double v : icc) {
    const double c = clamp_icc(v);
    bins[std::min(10, static_cast<int>(std::floor(c * 10.0)))]++;
  }
  std::string out = "ICC histogram:";
  for (int b = 0; b < 10; ++b) {
    out += " [" + text::format_fixed(b / 10.0, 1) + "," + text::format_fixed((b + 1) / 10.0, 1) + (b == 9 ? "]" : ")") +
           "=" + std::to_string(bins[b] + (b == 9 ? bins[10] : 0));
  }
  return out;
}

}  // namespace detail

/// Full selection run on one training matrix: regime pre-filter, UFS, the
/// configured algorithm, and the summary statistics of the selected set.
inline SelectionResult select_features(const Eigen::MatrixXd& x, const stats::Labels& y,
                                       const std::vector<std::string>& names, const std::vector<double>& icc,
                                       const SelectionConfig& cfg, const ModelSpec& model) {
  cfg.validate();
  if (static_cast<std::size_t>(x.cols()) != names.size() || icc.size() != names.size()) {
    throw alignment_error("feature names, ICC values and matrix columns differ in count");
  }
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw alignment_error("label count differs from row count");
  if (x.hasNaN()) throw DataError("nan", "selection input contains NaN; impute first");
  if (cfg.target_k && static_cast<std::size_t>(*cfg.target_k) > names.size()) {
    throw ConfigError("target_k exceeds the number of features");
  }
  std::vector<std::size_t> pool;
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (cfg.regime != Regime::fully_robust || (!std::isnan(icc[j]) && icc[j] > cfg.icc_threshold)) pool.push_back(j);
  }
  if (pool.empty()) {
    throw ComputeError("empty-pool", "fully robust regime: no feature has ICC > " +
                                         text::format_double(cfg.icc_threshold) + "; " + detail::icc_histogram(icc));
  }
  if (cfg.ufs) pool = ufs_prefilter(x, y, names, pool, cfg.ufs_corr_cutoff, cfg.ufs_p_cutoff);

  detail::Selector sel(x, y, names, icc, cfg, model);
  SelectionResult res;
  switch (cfg.algorithm) {
    case Algorithm::fscore:
    case Algorithm::ulr:
    case Algorithm::relief:
    case Algorithm::mi:
    case Algorithm::gini: {
      const auto xs = stats::Standardizer::fit(x).apply(x);
      res = sel.filter(pool, xs);
      break;
    }
    case Algorithm::lasso: res = sel.lasso(pool); break;
    case Algorithm::sfs: res = sel.sfs(pool); break;
    case Algorithm::sbs: res = sel.sbs(pool); break;
    case Algorithm::rfe: res = sel.rfe(pool); break;
    case Algorithm::ga: res = sel.ga(pool); break;
  }
  res.trace = std::move(sel.trace);
  for (auto j : pool) res.ufs_kept.push_back(names[j]);
  for (auto j : res.selected_columns) res.selected.push_back(names[j]);
  if (!res.selected.empty()) {
    double s = 0.0;
    for (auto j : res.selected_columns) s += icc[j];
    res.avg_icc = s / static_cast<double>(res.selected.size());
    double ss = 0.0;
    for (auto j : res.selected_columns) ss += (icc[j] - res.avg_icc) * (icc[j] - res.avg_icc);
    res.sd_icc = res.selected.size() > 1 ? std::sqrt(ss / static_cast<double>(res.selected.size() - 1)) : 0.0;
  }
  return res;
}

}  // namespace radrobust
