#pragma once

// Linear classifiers used by evaluation and by wrapper selection: ridge
// logistic regression and shrinkage LDA. Both expect standardized inputs and
// return scores that increase with evidence for class 1.

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "radrobust/error.hpp"
#include "radrobust/stats.hpp"

namespace radrobust {

enum class ModelKind { LR, LDA };

inline std::string to_string(ModelKind k) { return k == ModelKind::LR ? "LR" : "LDA"; }

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
  if (s == "LR") return ModelKind::LR;
  if (s == "LDA") return ModelKind::LDA;
  return std::nullopt;
}

struct ModelSpec {
  ModelKind kind = ModelKind::LR;
  double ridge = 1e-4;       // LR: L2 strength on coefficients (intercept free)
  int max_iter = 200;        // LR: Newton iterations
  double tolerance = 1e-8;   // LR: gradient-norm stop
  double shrinkage = 0.1;    // LDA: gamma in (1-gamma) S + gamma diag(S)

  void validate() const {
    if (ridge < 0.0) throw ConfigError("LR ridge strength must be >= 0");
    if (shrinkage < 0.0 || shrinkage > 1.0) throw ConfigError("LDA shrinkage must lie in [0,1]");
    if (max_iter < 1) throw ConfigError("LR max_iter must be >= 1");
  }
};

struct LinearModel {
  ModelKind kind = ModelKind::LR;
  Eigen::VectorXd coef;
  double intercept = 0.0;
  int iterations = 0;

  Eigen::VectorXd score(const Eigen::MatrixXd& x) const {
    return (x * coef).array() + intercept;
  }
};

namespace detail {

inline double sigmoid(double t) {
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

/// Penalized negative log-likelihood, averaged over samples.
inline double lr_objective(const Eigen::MatrixXd& x, const stats::Labels& y, const Eigen::VectorXd& w, double b,
                           double ridge) {
  const Eigen::VectorXd eta = (x * w).array() + b;
  double nll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double t = eta[i];
    // log(1 + exp(t)) - y t, computed stably
    const double softplus = t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
    nll += softplus - y[static_cast<std::size_t>(i)] * t;
  }
  return nll / static_cast<double>(eta.size()) + 0.5 * ridge * w.squaredNorm();
}

}  // namespace detail

/// Gradient of the averaged penalized objective; last entry is the intercept.
inline Eigen::VectorXd lr_gradient(const Eigen::MatrixXd& x, const stats::Labels& y, const Eigen::VectorXd& w, double b,
                                   double ridge) {
  const Eigen::Index n = x.rows(), p = x.cols();
  Eigen::VectorXd r(n);
  const Eigen::VectorXd eta = (x * w).array() + b;
  for (Eigen::Index i = 0; i < n; ++i) r[i] = detail::sigmoid(eta[i]) - y[static_cast<std::size_t>(i)];
  Eigen::VectorXd g(p + 1);
  g.head(p) = x.transpose() * r / static_cast<double>(n) + ridge * w;
  g[p] = r.sum() / static_cast<double>(n);
  return g;
}

inline double lr_objective(const Eigen::MatrixXd& x, const stats::Labels& y, const Eigen::VectorXd& w, double b,
                           double ridge) {
  return detail::lr_objective(x, y, w, b, ridge);
}

inline LinearModel fit_lr(const Eigen::MatrixXd& x, const stats::Labels& y, const ModelSpec& spec) {
  const Eigen::Index n = x.rows(), p = x.cols();
  LinearModel m{ModelKind::LR, Eigen::VectorXd::Zero(p), 0.0, 0};
  // Start the intercept at the log-odds of the prevalence.
  const double pos = static_cast<double>(stats::count_positive(y));
  m.intercept = std::log(pos / (static_cast<double>(n) - pos));
  Eigen::MatrixXd xa(n, p + 1);
  xa.leftCols(p) = x;
  xa.col(p).setOnes();
  double obj = detail::lr_objective(x, y, m.coef, m.intercept, spec.ridge);
  for (int it = 0; it < spec.max_iter; ++it) {
    m.iterations = it + 1;
    const Eigen::VectorXd g = lr_gradient(x, y, m.coef, m.intercept, spec.ridge);
    if (g.norm() < spec.tolerance) break;
    const Eigen::VectorXd eta = (x * m.coef).array() + m.intercept;
    Eigen::VectorXd wts(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = detail::sigmoid(eta[i]);
      wts[i] = s * (1.0 - s);
    }
    Eigen::MatrixXd h = xa.transpose() * wts.asDiagonal() * xa / static_cast<double>(n);
    for (Eigen::Index j = 0; j < p; ++j) h(j, j) += spec.ridge;
    // Tiny Levenberg term keeps the system solvable on separable data.
    h.diagonal().array() += 1e-12;
    const Eigen::VectorXd step = h.ldlt().solve(g);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 50; ++ls) {
      const Eigen::VectorXd w_new = m.coef - t * step.head(p);
      const double b_new = m.intercept - t * step[p];
      const double o = detail::lr_objective(x, y, w_new, b_new, spec.ridge);
      if (std::isfinite(o) && o <= obj - 1e-4 * t * g.dot(step)) {
        m.coef = w_new;
        m.intercept = b_new;
        obj = o;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  return m;
}

inline LinearModel fit_lda(const Eigen::MatrixXd& x, const stats::Labels& y, const ModelSpec& spec) {
  const Eigen::Index p = x.cols();
  Eigen::VectorXd mu[2] = {Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(p)};
  double n[2] = {0, 0};
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int c = y[static_cast<std::size_t>(i)];
    mu[c] += x.row(i).transpose();
    n[c] += 1;
  }
  mu[0] /= n[0];
  mu[1] /= n[1];
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::VectorXd d = x.row(i).transpose() - mu[y[static_cast<std::size_t>(i)]];
    s += d * d.transpose();
  }
  s /= std::max(1.0, n[0] + n[1] - 2.0);
  Eigen::MatrixXd sg = (1.0 - spec.shrinkage) * s;
  sg.diagonal() += spec.shrinkage * s.diagonal();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(sg);
  const double scale = std::max(sg.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  const auto dv = ldlt.vectorD();
  const bool singular = ldlt.info() != Eigen::Success || dv.size() == 0 ||
                        dv.cwiseAbs().minCoeff() <= 1e-12 * scale;
  if (singular) {
    if (spec.shrinkage == 0.0) {
      throw ComputeError("singular-covariance", "pooled covariance is singular; use LDA shrinkage > 0");
    }
    // Shrinkage > 0 can only be singular through zero-variance columns; a
    // small ridge keeps those directions at zero weight.
    sg.diagonal().array() += 1e-9 * scale + 1e-12;
    ldlt.compute(sg);
  }
  LinearModel m{ModelKind::LDA, ldlt.solve(mu[1] - mu[0]), 0.0, 0};
  const double prior = std::log(n[1] / n[0]);
  m.intercept = -0.5 * m.coef.dot(mu[0] + mu[1]) + prior;
  return m;
}

inline LinearModel fit_model(const ModelSpec& spec, const Eigen::MatrixXd& x, const stats::Labels& y) {
  spec.validate();
  if (static_cast<Eigen::Index>(y.size()) != x.rows()) throw alignment_error("label count differs from row count");
  const auto pos = stats::count_positive(y);
  if (pos < 2 || y.size() - pos < 2) throw ComputeError("stratification", "model fit needs >= 2 samples per class");
  return spec.kind == ModelKind::LR ? fit_lr(x, y, spec) : fit_lda(x, y, spec);
}

/// Standardize-then-fit pipeline on a chosen column subset.
struct FittedPipeline {
  std::vector<std::size_t> columns;
  stats::Standardizer scaler;
  LinearModel model;

  Eigen::VectorXd score(const Eigen::MatrixXd& x_full) const {
    if (columns.empty()) return Eigen::VectorXd::Zero(x_full.rows());
    return model.score(scaler.apply(stats::take_cols(x_full, columns)));
  }
};

inline FittedPipeline fit_pipeline(const ModelSpec& spec, const Eigen::MatrixXd& x_full, const stats::Labels& y,
                                   const std::vector<std::size_t>& columns) {
  FittedPipeline fp;
  fp.columns = columns;
  if (columns.empty()) return fp;
  const Eigen::MatrixXd xs = stats::take_cols(x_full, columns);
  fp.scaler = stats::Standardizer::fit(xs);
  fp.model = fit_model(spec, fp.scaler.apply(xs), y);
  return fp;
}

/// Mean AUC over the given folds for a fixed column subset. Empty subsets
/// score 0.5 (uninformative).
inline double cv_auc(const ModelSpec& spec, const Eigen::MatrixXd& x, const stats::Labels& y,
                     const std::vector<std::size_t>& columns, const std::vector<stats::Fold>& folds) {
  if (columns.empty()) return 0.5;
  double total = 0.0;
  for (const auto& f : folds) {
    const auto fp = fit_pipeline(spec, stats::take_rows(x, f.train), stats::take(y, f.train), columns);
    total += stats::auc(fp.score(stats::take_rows(x, f.test)), stats::take(y, f.test));
  }
  return total / static_cast<double>(folds.size());
}

}  // namespace radrobust
