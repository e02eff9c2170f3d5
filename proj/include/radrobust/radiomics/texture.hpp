#pragma once

// Texture matrices (GLCM, GLRLM, GLSZM, GLDM) and their features.
//
// Conventions: gray levels are the actual level values 1..N_g (N_g = highest
// level), matrices only carry rows for levels present in the VOI. GLCM and
// GLRLM use the 13 unique 3D directions at distance 1; features are computed
// per direction and averaged over directions that produced any entry. GLSZM
// zones and GLDM dependence use the 26-neighbourhood; GLDM counts neighbours
// at exactly the same level (alpha = 0) and dependence j = 1 + that count.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "radrobust/radiomics/discretize.hpp"

namespace radrobust::radiomics {

inline constexpr std::array<Index3, 13> kDirections = {{{1, 0, 0},
                                                        {0, 1, 0},
                                                        {0, 0, 1},
                                                        {1, 1, 0},
                                                        {1, -1, 0},
                                                        {1, 0, 1},
                                                        {1, 0, -1},
                                                        {0, 1, 1},
                                                        {0, 1, -1},
                                                        {1, 1, 1},
                                                        {1, 1, -1},
                                                        {1, -1, 1},
                                                        {1, -1, -1}}};


/// Count matrix indexed by (present gray level index, column), with the
/// gray-level values carried alongside.
struct LevelMatrix {
  std::vector<int> levels;  // gray value of each row
  Eigen::MatrixXd counts;   // rows: levels; cols: second level (GLCM) or size/length/dependence - 1
  std::vector<int> column_values;  // when set, the size/length/dependence of each column

  double column_value(Eigen::Index c) const {
    return column_values.empty() ? static_cast<double>(c + 1) : column_values[static_cast<std::size_t>(c)];
  }
};

namespace detail {

inline std::vector<int> level_index(const RoiImage& roi) {
  std::vector<int> idx(static_cast<std::size_t>(roi.n_levels) + 1, -1);
  for (std::size_t k = 0; k < roi.present_levels.size(); ++k) idx[static_cast<std::size_t>(roi.present_levels[k])] = static_cast<int>(k);
  return idx;
}

inline double entropy2(double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; }

// Gray levels on the ROI crop grown by one voxel on every side, 0 outside the
// VOI, so neighbour lookups need no bounds checks.
struct PaddedLevels {
  std::array<std::ptrdiff_t, 3> dims{};
  std::array<std::ptrdiff_t, 3> stride{};
  std::vector<int> level;
  std::vector<std::size_t> voxels;  // padded indices of VOI voxels, scan order

  explicit PaddedLevels(const RoiImage& roi) {
    const Grid& g = roi.grid;
    for (int a = 0; a < 3; ++a) dims[static_cast<std::size_t>(a)] = g.dims[a] + 2;
    stride = {1, dims[0], dims[0] * dims[1]};
    level.assign(static_cast<std::size_t>(dims[0] * dims[1] * dims[2]), 0);
    voxels.reserve(roi.voxel_count());
    for (int z = 0; z < g.dims[2]; ++z)
      for (int y = 0; y < g.dims[1]; ++y)
        for (int x = 0; x < g.dims[0]; ++x) {
          const std::size_t p = g.index(x, y, z);
          if (!roi.inside[p]) continue;
          const auto q = static_cast<std::size_t>((x + 1) + (y + 1) * stride[1] + (z + 1) * stride[2]);
          level[q] = roi.level[p];
          voxels.push_back(q);
        }
  }

  std::ptrdiff_t offset(const Index3& d) const { return d[0] * stride[0] + d[1] * stride[1] + d[2] * stride[2]; }

  std::array<std::ptrdiff_t, 26> neighbours() const {
    std::array<std::ptrdiff_t, 26> out{};
    std::size_t k = 0;
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx || dy || dz) out[k++] = offset({dx, dy, dz});
        }
    return out;
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// GLCM

/// Symmetric co-occurrence counts for one offset (P + P^T, unnormalized).
inline LevelMatrix glcm_matrix(const RoiImage& roi, const detail::PaddedLevels& pl, const Index3& d) {
  const auto idx = detail::level_index(roi);
  const int g = static_cast<int>(roi.present_levels.size());
  LevelMatrix m{roi.present_levels, Eigen::MatrixXd::Zero(g, g), {}};
  const std::ptrdiff_t off = pl.offset(d);
  for (const std::size_t p : pl.voxels) {
    const int lq = pl.level[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + off)];
    if (lq == 0) continue;
    const int a = idx[static_cast<std::size_t>(pl.level[p])];
    const int b = idx[static_cast<std::size_t>(lq)];
    m.counts(a, b) += 1.0;
    m.counts(b, a) += 1.0;
  }
  return m;
}

inline LevelMatrix glcm_matrix(const RoiImage& roi, const Index3& d) {
  return glcm_matrix(roi, detail::PaddedLevels(roi), d);
}

/// The 24 GLCM features of one normalized symmetric matrix, kGlcmNames order.
inline std::array<double, 24> glcm_features_single(const LevelMatrix& m, int n_levels) {
  const int g = static_cast<int>(m.levels.size());
  const Eigen::MatrixXd p = m.counts / m.counts.sum();
  const Eigen::VectorXd px = p.rowwise().sum();
  const Eigen::VectorXd py = p.colwise().sum().transpose();
  auto lv = [&](int k) { return static_cast<double>(m.levels[static_cast<std::size_t>(k)]); };
  const int max_level = m.levels.back();
  std::vector<double> psum(static_cast<std::size_t>(2 * max_level) + 1, 0.0);
  std::vector<double> pdiff(static_cast<std::size_t>(max_level), 0.0);

  double ux = 0.0, uy = 0.0;
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      const double v = p(i, j);
      ux += lv(i) * v;
      uy += lv(j) * v;
      psum[static_cast<std::size_t>(m.levels[static_cast<std::size_t>(i)] + m.levels[static_cast<std::size_t>(j)])] += v;
      pdiff[static_cast<std::size_t>(std::abs(m.levels[static_cast<std::size_t>(i)] - m.levels[static_cast<std::size_t>(j)]))] += v;
    }
  }
  double sx2 = 0.0, sy2 = 0.0, hx = 0.0, hy = 0.0;
  for (int i = 0; i < g; ++i) {
    sx2 += (lv(i) - ux) * (lv(i) - ux) * px[i];
    sy2 += (lv(i) - uy) * (lv(i) - uy) * py[i];
    hx += detail::entropy2(px[i]);
    hy += detail::entropy2(py[i]);
  }
  std::vector<double> lpx(static_cast<std::size_t>(g)), lpy(static_cast<std::size_t>(g));
  for (int i = 0; i < g; ++i) {
    lpx[static_cast<std::size_t>(i)] = px[i] > 0.0 ? std::log2(px[i]) : 0.0;
    lpy[static_cast<std::size_t>(i)] = py[i] > 0.0 ? std::log2(py[i]) : 0.0;
  }
  double autocorr = 0.0, prom = 0.0, shade = 0.0, tend = 0.0, contrast = 0.0, energy = 0.0, hxy = 0.0;
  double hxy1 = 0.0, hxy2 = 0.0, maxp = 0.0, sumsq = 0.0;
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      const double v = p(i, j);
      const double s = lv(i) + lv(j) - ux - uy;
      const double diff = lv(i) - lv(j);
      autocorr += v * lv(i) * lv(j);
      prom += s * s * s * s * v;
      shade += s * s * s * v;
      tend += s * s * v;
      contrast += diff * diff * v;
      energy += v * v;
      hxy += detail::entropy2(v);
      const double pxy = px[i] * py[j];
      if (pxy > 0.0) {
        const double lp = lpx[static_cast<std::size_t>(i)] + lpy[static_cast<std::size_t>(j)];
        hxy1 -= v * lp;
        hxy2 -= pxy * lp;
      }
      maxp = std::max(maxp, v);
      sumsq += (lv(i) - ux) * (lv(i) - ux) * v;
    }
  }
  const double sigma = std::sqrt(sx2) * std::sqrt(sy2);
  const double correlation = sigma > 0.0 ? (autocorr - ux * uy) / sigma : 1.0;

  double da = 0.0, dent = 0.0, idm = 0.0, idmn = 0.0, id = 0.0, idn = 0.0, iv = 0.0;
  const double ng = static_cast<double>(n_levels);
  for (std::size_t k = 0; k < pdiff.size(); ++k) {
    const double v = pdiff[k];
    const double kd = static_cast<double>(k);
    da += kd * v;
    dent += detail::entropy2(v);
    idm += v / (1.0 + kd * kd);
    idmn += v / (1.0 + kd * kd / (ng * ng));
    id += v / (1.0 + kd);
    idn += v / (1.0 + kd / ng);
    if (k > 0) iv += v / (kd * kd);
  }
  double dvar = 0.0;
  for (std::size_t k = 0; k < pdiff.size(); ++k) dvar += (static_cast<double>(k) - da) * (static_cast<double>(k) - da) * pdiff[k];
  double savg = 0.0, sent = 0.0;
  for (std::size_t k = 0; k < psum.size(); ++k) {
    savg += static_cast<double>(k) * psum[k];
    sent += detail::entropy2(psum[k]);
  }
  const double hmax = std::max(hx, hy);
  const double imc1 = hmax > 0.0 ? (hxy - hxy1) / hmax : 0.0;
  const double imc2 = hxy2 > hxy ? std::sqrt(1.0 - std::exp(-2.0 * (hxy2 - hxy))) : 0.0;

  // MCC: Q = D^-1 P D^-1 P^T is similar to S^2 with S = D^-1/2 P D^-1/2
  // (P symmetric), restricted to levels with nonzero marginal.
  double mcc = 1.0;
  std::vector<int> live;
  for (int i = 0; i < g; ++i) {
    if (px[i] > 0.0) live.push_back(i);
  }
  if (live.size() > 1) {
    const auto l = static_cast<Eigen::Index>(live.size());
    Eigen::MatrixXd s(l, l);
    for (Eigen::Index a = 0; a < l; ++a)
      for (Eigen::Index b = 0; b < l; ++b)
        s(a, b) = p(live[static_cast<std::size_t>(a)], live[static_cast<std::size_t>(b)]) /
                  std::sqrt(px[live[static_cast<std::size_t>(a)]] * px[live[static_cast<std::size_t>(b)]]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s, Eigen::EigenvaluesOnly);
    std::vector<double> q(static_cast<std::size_t>(l));
    for (Eigen::Index a = 0; a < l; ++a) q[static_cast<std::size_t>(a)] = eig.eigenvalues()[a] * eig.eigenvalues()[a];
    std::sort(q.begin(), q.end(), std::greater<>());
    mcc = std::sqrt(std::max(q[1], 0.0));
  }

  return {autocorr, ux,   prom,  shade, tend, contrast, correlation, da,   dent, dvar, energy, hxy,
          imc1,     imc2, idm,   mcc,   idmn, id,       idn,         iv,   maxp, savg, sent,   sumsq};
}

/// Direction-averaged GLCM features. NaN when no direction has a pair.
inline std::array<double, 24> glcm_features(const RoiImage& roi) {
  std::array<double, 24> acc{};
  int used = 0;
  const detail::PaddedLevels pl(roi);
  for (const auto& d : kDirections) {
    const auto m = glcm_matrix(roi, pl, d);
    if (m.counts.sum() == 0.0) continue;
    const auto f = glcm_features_single(m, roi.n_levels);
    for (std::size_t k = 0; k < f.size(); ++k) acc[k] += f[k];
    ++used;
  }
  for (auto& v : acc) v = used > 0 ? v / used : std::nan("");
  return acc;
}

// ---------------------------------------------------------------------------
// Shared emphasis-family features for GLRLM / GLSZM / GLDM. Column c of the
// count matrix stands for size/length/dependence j = c + 1 unless the matrix
// lists its column values (GLSZM keeps only the zone sizes that occur).

/// Returns the 16 run/zone-style features:
/// SE, LE, GLN, GLNN, SN, SNN, Percentage, GLV, SV, Entropy, LGLE, HGLE,
/// SLGLE, SHGLE, LLGLE, LHGLE.
inline std::array<double, 16> emphasis_features(const LevelMatrix& m, double n_voxels) {
  const Eigen::MatrixXd& pm = m.counts;
  const double nz = pm.sum();
  const Eigen::VectorXd pg = pm.rowwise().sum();
  const Eigen::VectorXd ps = pm.colwise().sum().transpose();
  std::array<double, 16> f{};
  double mu_i = 0.0, mu_j = 0.0;
  for (Eigen::Index i = 0; i < pm.rows(); ++i) {
    const double lv = m.levels[static_cast<std::size_t>(i)];
    for (Eigen::Index c = 0; c < pm.cols(); ++c) {
      const double v = pm(i, c);
      if (v == 0.0) continue;
      const double j = m.column_value(c);
      const double i2 = lv * lv, j2 = j * j;
      f[0] += v / j2;
      f[1] += v * j2;
      f[10] += v / i2;
      f[11] += v * i2;
      f[12] += v / (i2 * j2);
      f[13] += v * i2 / j2;
      f[14] += v * j2 / i2;
      f[15] += v * i2 * j2;
      const double p = v / nz;
      mu_i += p * lv;
      mu_j += p * j;
      f[9] += detail::entropy2(p);
    }
  }
  for (Eigen::Index i = 0; i < pg.size(); ++i) {
    f[2] += pg[i] * pg[i];
  }
  for (Eigen::Index c = 0; c < ps.size(); ++c) {
    f[4] += ps[c] * ps[c];
  }
  double glv = 0.0, sv = 0.0;
  for (Eigen::Index i = 0; i < pm.rows(); ++i) {
    const double lv = m.levels[static_cast<std::size_t>(i)];
    for (Eigen::Index c = 0; c < pm.cols(); ++c) {
      const double v = pm(i, c);
      if (v == 0.0) continue;
      const double p = v / nz;
      glv += p * (lv - mu_i) * (lv - mu_i);
      sv += p * (m.column_value(c) - mu_j) * (m.column_value(c) - mu_j);
    }
  }
  for (int k : {0, 1, 10, 11, 12, 13, 14, 15}) f[static_cast<std::size_t>(k)] /= nz;
  f[3] = f[2] / (nz * nz);
  f[2] /= nz;
  f[5] = f[4] / (nz * nz);
  f[4] /= nz;
  f[6] = nz / n_voxels;
  f[7] = glv;
  f[8] = sv;
  return f;
}

// ---------------------------------------------------------------------------
// GLRLM

inline LevelMatrix glrlm_matrix(const RoiImage& roi, const detail::PaddedLevels& pl, const Index3& d) {
  const auto idx = detail::level_index(roi);
  const Grid& gr = roi.grid;
  const int max_len = std::max({gr.dims[0], gr.dims[1], gr.dims[2]});
  LevelMatrix m{roi.present_levels, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(roi.present_levels.size()), max_len), {}};
  const std::ptrdiff_t off = pl.offset(d);
  for (const std::size_t p : pl.voxels) {
    const int lv = pl.level[p];
    auto at = [&](std::ptrdiff_t q) { return pl.level[static_cast<std::size_t>(q)]; };
    const auto ip = static_cast<std::ptrdiff_t>(p);
    if (at(ip - off) == lv) continue;  // not a run start
    int len = 1;
    for (std::ptrdiff_t q = ip + off; at(q) == lv; q += off) ++len;
    m.counts(idx[static_cast<std::size_t>(lv)], len - 1) += 1.0;
  }
  return m;
}

inline LevelMatrix glrlm_matrix(const RoiImage& roi, const Index3& d) {
  return glrlm_matrix(roi, detail::PaddedLevels(roi), d);
}

inline std::array<double, 16> glrlm_features(const RoiImage& roi) {
  std::array<double, 16> acc{};
  const double np = static_cast<double>(roi.voxel_count());
  const detail::PaddedLevels pl(roi);
  for (const auto& d : kDirections) {
    const auto f = emphasis_features(glrlm_matrix(roi, pl, d), np);
    for (std::size_t k = 0; k < f.size(); ++k) acc[k] += f[k];
  }
  for (auto& v : acc) v /= static_cast<double>(kDirections.size());
  return acc;
}

// ---------------------------------------------------------------------------
// GLSZM

inline LevelMatrix glszm_matrix(const RoiImage& roi) {
  const auto idx = detail::level_index(roi);
  const detail::PaddedLevels pl(roi);
  const auto nb = pl.neighbours();
  std::vector<std::uint8_t> visited(pl.level.size(), 0);
  std::vector<std::pair<int, int>> zones;  // (level, size)
  std::vector<std::size_t> stack;
  for (const std::size_t s : pl.voxels) {
    if (visited[s]) continue;
    const int lv = pl.level[s];
    int size = 0;
    stack.push_back(s);
    visited[s] = 1;
    while (!stack.empty()) {
      const auto p = static_cast<std::ptrdiff_t>(stack.back());
      stack.pop_back();
      ++size;
      for (const auto o : nb) {
        const auto q = static_cast<std::size_t>(p + o);
        if (visited[q] || pl.level[q] != lv) continue;
        visited[q] = 1;
        stack.push_back(q);
      }
    }
    zones.emplace_back(lv, size);
  }
  std::vector<int> sizes;
  for (const auto& z : zones) sizes.push_back(z.second);
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  LevelMatrix m{roi.present_levels,
                Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(roi.present_levels.size()),
                                      static_cast<Eigen::Index>(sizes.size())),
                sizes};
  for (const auto& [lv, size] : zones) {
    const auto c = std::lower_bound(sizes.begin(), sizes.end(), size) - sizes.begin();
    m.counts(idx[static_cast<std::size_t>(lv)], c) += 1.0;
  }
  return m;
}

inline std::array<double, 16> glszm_features(const RoiImage& roi) {
  return emphasis_features(glszm_matrix(roi), static_cast<double>(roi.voxel_count()));
}

// ---------------------------------------------------------------------------
// GLDM

inline LevelMatrix gldm_matrix(const RoiImage& roi) {
  const auto idx = detail::level_index(roi);
  const detail::PaddedLevels pl(roi);
  const auto nb = pl.neighbours();
  LevelMatrix m{roi.present_levels, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(roi.present_levels.size()), 27), {}};
  for (const std::size_t p : pl.voxels) {
    const int lv = pl.level[p];
    int dep = 0;
    for (const auto o : nb) dep += pl.level[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + o)] == lv;
    m.counts(idx[static_cast<std::size_t>(lv)], dep) += 1.0;
  }
  return m;
}

/// The 14 GLDM features, kGldmNames order.
inline std::array<double, 14> gldm_features(const RoiImage& roi) {
  const auto e = emphasis_features(gldm_matrix(roi), static_cast<double>(roi.voxel_count()));
  // emphasis layout -> GLDM catalog (no GLNN, no percentage)
  return {e[0], e[1], e[2], e[4], e[5], e[7], e[8], e[9], e[10], e[11], e[12], e[13], e[14], e[15]};
}

}  // namespace radrobust::radiomics
