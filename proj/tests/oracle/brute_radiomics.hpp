#pragma once

// Slow reference implementation of the 102-feature catalog for tiny volumes.
// Works on the uncropped grid with explicit bounds checks, enumerates voxel
// pairs, runs, zones and neighbourhoods directly, keeps matrices as maps keyed
// by gray value, and accumulates in long double. Shares no code with the
// library beyond the catalog order.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <queue>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

using ld = long double;

struct MicroVolume {
  std::array<int, 3> dims{1, 1, 1};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::vector<double> intensity;  // x-fastest
  std::vector<int> mask;          // 0/1
  double bin_width = 4.0;

  int idx(int x, int y, int z) const { return x + dims[0] * (y + dims[1] * z); }
  bool inside(int x, int y, int z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims[0] && y < dims[1] && z < dims[2] && mask[static_cast<std::size_t>(idx(x, y, z))] != 0;
  }
};

struct Voxel {
  int x, y, z;
  double v;
  int level;
};

inline std::vector<Voxel> voxels(const MicroVolume& m) {
  std::vector<Voxel> out;
  double lo = INFINITY;
  for (int z = 0; z < m.dims[2]; ++z)
    for (int y = 0; y < m.dims[1]; ++y)
      for (int x = 0; x < m.dims[0]; ++x)
        if (m.inside(x, y, z)) lo = std::min(lo, m.intensity[static_cast<std::size_t>(m.idx(x, y, z))]);
  const long long anchor = static_cast<long long>(std::floor(lo / m.bin_width));
  for (int z = 0; z < m.dims[2]; ++z)
    for (int y = 0; y < m.dims[1]; ++y)
      for (int x = 0; x < m.dims[0]; ++x) {
        if (!m.inside(x, y, z)) continue;
        const double v = m.intensity[static_cast<std::size_t>(m.idx(x, y, z))];
        const long long b = static_cast<long long>(std::floor(v / m.bin_width));
        out.push_back({x, y, z, v, static_cast<int>(b - anchor + 1)});
      }
  return out;
}

inline int level_at(const MicroVolume& m, const std::vector<Voxel>& vox, int x, int y, int z) {
  if (!m.inside(x, y, z)) return 0;
  for (const auto& v : vox)
    if (v.x == x && v.y == y && v.z == z) return v.level;
  return 0;
}

inline ld plogp(ld p) { return p > 0 ? -p * std::log2(p) : 0.0L; }

// ---------------------------------------------------------------------------
// Shape

inline ld kernel_weight(int t) {
  ld sum = 0;
  for (int i = -2; i <= 2; ++i) sum += std::exp(-0.5L * i * i / (0.8L * 0.8L));
  return std::exp(-0.5L * t * t / (0.8L * 0.8L)) / sum;
}

// Mask smoothed by the 5x5x5 product Gaussian, zero outside the grid.
inline ld smoothed(const MicroVolume& m, int x, int y, int z) {
  ld s = 0;
  for (int dz = -2; dz <= 2; ++dz)
    for (int dy = -2; dy <= 2; ++dy)
      for (int dx = -2; dx <= 2; ++dx)
        if (m.inside(x + dx, y + dy, z + dz)) s += kernel_weight(dx) * kernel_weight(dy) * kernel_weight(dz);
  return s;
}

inline ld surface_area(const MicroVolume& m) {
  ld area = 0;
  auto grad = [&](std::array<int, 3> p) {
    std::array<ld, 3> g{};
    for (int b = 0; b < 3; ++b) {
      auto hi = p, lo = p;
      ++hi[b];
      --lo[b];
      g[b] = (smoothed(m, hi[0], hi[1], hi[2]) - smoothed(m, lo[0], lo[1], lo[2])) / (2.0L * m.spacing[b]);
    }
    return g;
  };
  for (int z = 0; z < m.dims[2]; ++z)
    for (int y = 0; y < m.dims[1]; ++y)
      for (int x = 0; x < m.dims[0]; ++x) {
        if (!m.inside(x, y, z)) continue;
        for (int a = 0; a < 3; ++a)
          for (int s : {-1, 1}) {
            std::array<int, 3> q{x, y, z};
            q[a] += s;
            if (m.inside(q[0], q[1], q[2])) continue;
            const auto g1 = grad({x, y, z});
            const auto g2 = grad(q);
            ld n[3], norm = 0;
            for (int b = 0; b < 3; ++b) {
              n[b] = 0.5L * (g1[b] + g2[b]);
              norm += n[b] * n[b];
            }
            norm = std::sqrt(norm);
            const ld face = static_cast<ld>(m.spacing[(a + 1) % 3]) * m.spacing[(a + 2) % 3];
            area += face * (norm > 0 ? std::fabs(n[a]) / norm : 1.0L);
          }
      }
  return area;
}

// Eigenvalues of a symmetric 3x3 matrix, ascending, by the trigonometric
// solution of the characteristic cubic.
inline std::array<ld, 3> sym3_eigenvalues(const ld a[3][3]) {
  const ld p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
  const ld q = (a[0][0] + a[1][1] + a[2][2]) / 3;
  if (p1 == 0) {
    std::array<ld, 3> e{a[0][0], a[1][1], a[2][2]};
    std::sort(e.begin(), e.end());
    return e;
  }
  const ld p2 = (a[0][0] - q) * (a[0][0] - q) + (a[1][1] - q) * (a[1][1] - q) + (a[2][2] - q) * (a[2][2] - q) + 2 * p1;
  const ld p = std::sqrt(p2 / 6);
  ld b[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) b[i][j] = (a[i][j] - (i == j ? q : 0)) / p;
  const ld detb = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0]) +
                  b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
  const ld r = std::clamp(detb / 2, -1.0L, 1.0L);
  const ld phi = std::acos(r) / 3;
  const ld pi = std::numbers::pi_v<ld>;
  const ld e1 = q + 2 * p * std::cos(phi);
  const ld e3 = q + 2 * p * std::cos(phi + 2 * pi / 3);
  const ld e2 = 3 * q - e1 - e3;
  std::array<ld, 3> e{e1, e2, e3};
  std::sort(e.begin(), e.end());
  return e;
}

inline std::array<double, 14> shape(const MicroVolume& m) {
  const auto vox = voxels(m);
  const ld n = static_cast<ld>(vox.size());
  const ld vv = static_cast<ld>(m.spacing[0]) * m.spacing[1] * m.spacing[2];
  const ld volume = n * vv;
  const ld area = surface_area(m);
  const ld pi = std::numbers::pi_v<ld>;
  auto pos = [&](const Voxel& v) {
    return std::array<ld, 3>{static_cast<ld>(v.x) * m.spacing[0], static_cast<ld>(v.y) * m.spacing[1],
                             static_cast<ld>(v.z) * m.spacing[2]};
  };
  ld max3 = 0, max2 = 0;
  for (const auto& a : vox)
    for (const auto& b : vox) {
      const auto pa = pos(a), pb = pos(b);
      const ld d = std::sqrt((pa[0] - pb[0]) * (pa[0] - pb[0]) + (pa[1] - pb[1]) * (pa[1] - pb[1]) +
                             (pa[2] - pb[2]) * (pa[2] - pb[2]));
      max3 = std::max(max3, d);
      if (a.z == b.z) max2 = std::max(max2, d);
    }
  std::array<ld, 3> mean{};
  for (const auto& v : vox)
    for (int k = 0; k < 3; ++k) mean[k] += pos(v)[k] / n;
  ld cov[3][3] = {};
  for (const auto& v : vox) {
    const auto p = pos(v);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) cov[i][j] += (p[i] - mean[i]) * (p[j] - mean[j]) / n;
  }
  auto e = sym3_eigenvalues(cov);
  // Degenerate directions (flat or linear VOIs) have exactly zero extent.
  for (auto& x : e) x = x <= 1e-12L * e[2] ? 0.0L : x;
  const ld sph = std::cbrt(pi) * std::pow(6 * volume, 2.0L / 3) / area;
  return {static_cast<double>(volume),
          static_cast<double>(area),
          static_cast<double>(area / volume),
          static_cast<double>(sph),
          static_cast<double>(volume / std::sqrt(pi * area * area * area)),
          static_cast<double>(36 * pi * volume * volume / (area * area * area)),
          static_cast<double>(1 / sph),
          static_cast<double>(max3),
          static_cast<double>(max2),
          static_cast<double>(4 * std::sqrt(e[2])),
          static_cast<double>(4 * std::sqrt(e[1])),
          static_cast<double>(4 * std::sqrt(e[0])),
          e[2] > 0 ? static_cast<double>(std::sqrt(e[1] / e[2])) : NAN,
          e[2] > 0 ? static_cast<double>(std::sqrt(e[0] / e[2])) : NAN};
}

// ---------------------------------------------------------------------------
// First order

inline ld percentile(std::vector<ld> s, ld p) {
  std::sort(s.begin(), s.end());
  const ld pos = p / 100 * static_cast<ld>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<ld>(lo)) * (s[hi] - s[lo]);
}

inline std::array<double, 18> first_order(const MicroVolume& m) {
  const auto vox = voxels(m);
  const ld n = static_cast<ld>(vox.size());
  const ld vv = static_cast<ld>(m.spacing[0]) * m.spacing[1] * m.spacing[2];
  std::vector<ld> x;
  for (const auto& v : vox) x.push_back(v.v);
  ld energy = 0, total = 0;
  for (ld a : x) {
    energy += a * a;
    total += a;
  }
  const ld mean = total / n;
  ld var = 0, m3 = 0, m4 = 0, mad = 0;
  for (ld a : x) {
    var += std::pow(a - mean, 2) / n;
    m3 += std::pow(a - mean, 3) / n;
    m4 += std::pow(a - mean, 4) / n;
    mad += std::fabs(a - mean) / n;
  }
  const ld p10 = percentile(x, 10), p90 = percentile(x, 90);
  std::vector<ld> mid;
  for (ld a : x)
    if (a >= p10 && a <= p90) mid.push_back(a);
  ld mid_total = 0;
  for (ld a : mid) mid_total += a;
  const ld mid_mean = mid_total / static_cast<ld>(mid.size());
  ld rmad = 0;
  for (ld a : mid) rmad += std::fabs(a - mid_mean) / static_cast<ld>(mid.size());
  if (mid.empty()) rmad = NAN;  // no value between the 10th and 90th percentile
  std::map<int, ld> hist;
  for (const auto& v : vox) hist[v.level] += 1;
  ld ent = 0, uni = 0;
  for (const auto& [l, c] : hist) {
    ent += plogp(c / n);
    uni += (c / n) * (c / n);
  }
  const ld mn = *std::min_element(x.begin(), x.end()), mx = *std::max_element(x.begin(), x.end());
  return {static_cast<double>(energy),
          static_cast<double>(energy * vv),
          static_cast<double>(ent),
          static_cast<double>(mn),
          static_cast<double>(p10),
          static_cast<double>(p90),
          static_cast<double>(mx),
          static_cast<double>(mean),
          static_cast<double>(percentile(x, 50)),
          static_cast<double>(percentile(x, 75) - percentile(x, 25)),
          static_cast<double>(mx - mn),
          static_cast<double>(mad),
          static_cast<double>(rmad),
          static_cast<double>(std::sqrt(energy / n)),
          var > 0 ? static_cast<double>(m3 / std::pow(var, 1.5L)) : 0.0,
          var > 0 ? static_cast<double>(m4 / (var * var)) : 0.0,
          static_cast<double>(var),
          static_cast<double>(uni)};
}

// ---------------------------------------------------------------------------
// GLCM

inline const std::array<std::array<int, 3>, 13>& directions() {
  static const std::array<std::array<int, 3>, 13> d = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {1, -1, 0},
                                                        {1, 0, 1}, {1, 0, -1}, {0, 1, 1}, {0, 1, -1}, {1, 1, 1},
                                                        {1, 1, -1}, {1, -1, 1}, {1, -1, -1}}};
  return d;
}

inline int max_level(const std::vector<Voxel>& vox) {
  int g = 0;
  for (const auto& v : vox) g = std::max(g, v.level);
  return g;
}

inline std::array<ld, 24> glcm_single(const std::map<std::pair<int, int>, ld>& counts, int ng) {
  ld total = 0;
  for (const auto& [k, c] : counts) total += c;
  // Dense matrix over gray values 1..ng (absent levels contribute zeros).
  std::vector<std::vector<ld>> p(static_cast<std::size_t>(ng + 1), std::vector<ld>(static_cast<std::size_t>(ng + 1), 0));
  for (const auto& [k, c] : counts) p[static_cast<std::size_t>(k.first)][static_cast<std::size_t>(k.second)] = c / total;
  std::vector<ld> px(static_cast<std::size_t>(ng + 1), 0), py(static_cast<std::size_t>(ng + 1), 0);
  for (int i = 1; i <= ng; ++i)
    for (int j = 1; j <= ng; ++j) {
      px[static_cast<std::size_t>(i)] += p[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      py[static_cast<std::size_t>(j)] += p[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  auto P = [&](int i, int j) { return p[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; };
  ld ux = 0, uy = 0;
  for (int i = 1; i <= ng; ++i) {
    ux += i * px[static_cast<std::size_t>(i)];
    uy += i * py[static_cast<std::size_t>(i)];
  }
  ld sx = 0, sy = 0, hx = 0, hy = 0;
  for (int i = 1; i <= ng; ++i) {
    sx += (i - ux) * (i - ux) * px[static_cast<std::size_t>(i)];
    sy += (i - uy) * (i - uy) * py[static_cast<std::size_t>(i)];
    hx += plogp(px[static_cast<std::size_t>(i)]);
    hy += plogp(py[static_cast<std::size_t>(i)]);
  }
  std::map<int, ld> psum, pdiff;
  ld autoc = 0, prom = 0, shade = 0, tend = 0, con = 0, energy = 0, hxy = 0, hxy1 = 0, hxy2 = 0, maxp = 0, ssq = 0;
  for (int i = 1; i <= ng; ++i)
    for (int j = 1; j <= ng; ++j) {
      const ld v = P(i, j);
      psum[i + j] += v;
      pdiff[std::abs(i - j)] += v;
      autoc += i * j * v;
      prom += std::pow(i + j - ux - uy, 4) * v;
      shade += std::pow(i + j - ux - uy, 3) * v;
      tend += std::pow(i + j - ux - uy, 2) * v;
      con += (i - j) * (i - j) * v;
      energy += v * v;
      hxy += plogp(v);
      const ld q = px[static_cast<std::size_t>(i)] * py[static_cast<std::size_t>(j)];
      if (q > 0) {
        hxy1 -= v * std::log2(q);
        hxy2 -= q * std::log2(q);
      }
      maxp = std::max(maxp, v);
      ssq += (i - ux) * (i - ux) * v;
    }
  const ld corr = (sx > 0 && sy > 0) ? (autoc - ux * uy) / (std::sqrt(sx) * std::sqrt(sy)) : 1.0L;
  ld da = 0, de = 0;
  for (const auto& [k, v] : pdiff) {
    da += k * v;
    de += plogp(v);
  }
  ld dv = 0, idm = 0, idmn = 0, id = 0, idn = 0, iv = 0;
  const ld g = ng;
  for (const auto& [k, v] : pdiff) {
    dv += (k - da) * (k - da) * v;
    idm += v / (1 + k * k);
    idmn += v / (1 + k * k / (g * g));
    id += v / (1 + k);
    idn += v / (1 + k / g);
    if (k > 0) iv += v / (k * k);
  }
  ld sa = 0, se = 0;
  for (const auto& [k, v] : psum) {
    sa += k * v;
    se += plogp(v);
  }
  const ld hm = std::max(hx, hy);
  const ld imc1 = hm > 0 ? (hxy - hxy1) / hm : 0.0L;
  const ld imc2 = hxy2 > hxy ? std::sqrt(1 - std::exp(-2 * (hxy2 - hxy))) : 0.0L;

  // Q(i,j) = sum_k p(i,k) p(j,k) / (px(i) py(k)) over levels with mass.
  std::vector<int> live;
  for (int i = 1; i <= ng; ++i)
    if (px[static_cast<std::size_t>(i)] > 0) live.push_back(i);
  ld mcc = 1;
  if (live.size() > 1) {
    using Mat = Eigen::Matrix<ld, Eigen::Dynamic, Eigen::Dynamic>;
    const auto L = static_cast<Eigen::Index>(live.size());
    Mat q = Mat::Zero(L, L);
    for (Eigen::Index a = 0; a < L; ++a)
      for (Eigen::Index b = 0; b < L; ++b)
        for (int k : live) {
          const int i = live[static_cast<std::size_t>(a)], j = live[static_cast<std::size_t>(b)];
          q(a, b) += P(i, k) * P(j, k) / (px[static_cast<std::size_t>(i)] * py[static_cast<std::size_t>(k)]);
        }
    Eigen::EigenSolver<Mat> es(q, false);
    std::vector<ld> ev;
    for (Eigen::Index a = 0; a < L; ++a) ev.push_back(es.eigenvalues()[a].real());
    std::sort(ev.begin(), ev.end(), std::greater<>());
    mcc = std::sqrt(std::max(ev[1], 0.0L));
  }
  return {autoc, ux, prom, shade, tend, con, corr, da, de, dv, energy, hxy, imc1, imc2, idm, mcc, idmn, id, idn, iv,
          maxp, sa, se, ssq};
}

inline std::array<double, 24> glcm(const MicroVolume& m) {
  const auto vox = voxels(m);
  const int ng = max_level(vox);
  std::array<ld, 24> acc{};
  int used = 0;
  for (const auto& d : directions()) {
    std::map<std::pair<int, int>, ld> counts;
    for (const auto& a : vox) {
      const int lb = level_at(m, vox, a.x + d[0], a.y + d[1], a.z + d[2]);
      if (lb == 0) continue;
      counts[{a.level, lb}] += 1;
      counts[{lb, a.level}] += 1;
    }
    if (counts.empty()) continue;
    const auto f = glcm_single(counts, ng);
    for (std::size_t k = 0; k < 24; ++k) acc[k] += f[k];
    ++used;
  }
  std::array<double, 24> out{};
  for (std::size_t k = 0; k < 24; ++k) out[k] = used ? static_cast<double>(acc[k] / used) : NAN;
  return out;
}

// ---------------------------------------------------------------------------
// Run / zone / dependence families, from a (gray value, size) count table.

inline std::array<ld, 16> emphasis(const std::map<std::pair<int, int>, ld>& t, ld np) {
  ld nz = 0;
  for (const auto& [k, c] : t) nz += c;
  std::map<int, ld> by_level, by_size;
  for (const auto& [k, c] : t) {
    by_level[k.first] += c;
    by_size[k.second] += c;
  }
  std::array<ld, 16> f{};
  ld mi = 0, mj = 0;
  for (const auto& [k, c] : t) {
    const ld i = k.first, j = k.second;
    f[0] += c / (j * j) / nz;
    f[1] += c * j * j / nz;
    f[9] += plogp(c / nz);
    f[10] += c / (i * i) / nz;
    f[11] += c * i * i / nz;
    f[12] += c / (i * i * j * j) / nz;
    f[13] += c * i * i / (j * j) / nz;
    f[14] += c * j * j / (i * i) / nz;
    f[15] += c * i * i * j * j / nz;
    mi += i * c / nz;
    mj += j * c / nz;
  }
  for (const auto& [l, c] : by_level) f[2] += c * c / nz;
  for (const auto& [s, c] : by_size) f[4] += c * c / nz;
  f[3] = f[2] / nz;
  f[5] = f[4] / nz;
  f[6] = nz / np;
  for (const auto& [k, c] : t) {
    f[7] += (k.first - mi) * (k.first - mi) * c / nz;
    f[8] += (k.second - mj) * (k.second - mj) * c / nz;
  }
  return f;
}

inline std::array<double, 16> glrlm(const MicroVolume& m) {
  const auto vox = voxels(m);
  std::array<ld, 16> acc{};
  for (const auto& d : directions()) {
    std::map<std::pair<int, int>, ld> runs;
    for (const auto& a : vox) {
      if (level_at(m, vox, a.x - d[0], a.y - d[1], a.z - d[2]) == a.level) continue;
      int len = 1;
      while (level_at(m, vox, a.x + len * d[0], a.y + len * d[1], a.z + len * d[2]) == a.level) ++len;
      runs[{a.level, len}] += 1;
    }
    const auto f = emphasis(runs, static_cast<ld>(vox.size()));
    for (std::size_t k = 0; k < 16; ++k) acc[k] += f[k];
  }
  std::array<double, 16> out{};
  for (std::size_t k = 0; k < 16; ++k) out[k] = static_cast<double>(acc[k] / 13);
  return out;
}

/// Zones as (gray value, size) -> count, 26-connected.
inline std::map<std::pair<int, int>, ld> zones(const MicroVolume& m) {
  const auto vox = voxels(m);
  std::set<std::array<int, 3>> seen;
  std::map<std::pair<int, int>, ld> out;
  for (const auto& a : vox) {
    if (seen.contains({a.x, a.y, a.z})) continue;
    std::queue<std::array<int, 3>> q;
    q.push({a.x, a.y, a.z});
    seen.insert({a.x, a.y, a.z});
    int size = 0;
    while (!q.empty()) {
      const auto p = q.front();
      q.pop();
      ++size;
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const std::array<int, 3> n{p[0] + dx, p[1] + dy, p[2] + dz};
            if (seen.contains(n) || level_at(m, vox, n[0], n[1], n[2]) != a.level) continue;
            seen.insert(n);
            q.push(n);
          }
    }
    out[{a.level, size}] += 1;
  }
  return out;
}

inline std::array<double, 16> glszm(const MicroVolume& m) {
  const auto f = emphasis(zones(m), static_cast<ld>(voxels(m).size()));
  std::array<double, 16> out{};
  for (std::size_t k = 0; k < 16; ++k) out[k] = static_cast<double>(f[k]);
  return out;
}

inline std::array<double, 14> gldm(const MicroVolume& m) {
  const auto vox = voxels(m);
  std::map<std::pair<int, int>, ld> dep;
  for (const auto& a : vox) {
    int same = 0;
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if ((dx || dy || dz) && level_at(m, vox, a.x + dx, a.y + dy, a.z + dz) == a.level) ++same;
    dep[{a.level, same + 1}] += 1;
  }
  const auto e = emphasis(dep, static_cast<ld>(vox.size()));
  const std::array<int, 14> pick{0, 1, 2, 4, 5, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  std::array<double, 14> out{};
  for (std::size_t k = 0; k < 14; ++k) out[k] = static_cast<double>(e[static_cast<std::size_t>(pick[k])]);
  return out;
}

/// All 102 values in catalog order.
inline std::vector<double> all_features(const MicroVolume& m) {
  std::vector<double> out;
  auto add = [&](const auto& a) { out.insert(out.end(), a.begin(), a.end()); };
  add(shape(m));
  add(first_order(m));
  add(glcm(m));
  add(glrlm(m));
  add(glszm(m));
  add(gldm(m));
  return out;
}

/// Agreement rule for oracle comparisons: both NaN, both within 1e-9 of
/// zero, or relative difference at most `rel`.
inline bool agrees(double a, double b, double rel = 1e-9) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  const double scale = std::max(std::fabs(a), std::fabs(b));
  if (scale <= 1e-9) return true;
  return std::fabs(a - b) <= rel * scale;
}

}  // namespace oracle
