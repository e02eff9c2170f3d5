#pragma once

// Exact Euclidean distance transforms on anisotropic grids (separable
// lower-envelope-of-parabolas algorithm, one pass per axis).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "radrobust/volume.hpp"

namespace radrobust {

namespace detail {

// 1D squared distance transform of sampled function f with sample pitch h.
inline void edt_1d(const double* f, double* d, int n, double h, std::vector<int>& v, std::vector<double>& z) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  v.resize(static_cast<std::size_t>(n));
  z.resize(static_cast<std::size_t>(n) + 1);
  const double h2 = h * h;
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == inf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    double s;
    while (true) {
      const int p = v[static_cast<std::size_t>(k)];
      s = ((f[q] + h2 * q * q) - (f[p] + h2 * p * p)) / (2.0 * h2 * (q - p));
      if (s <= z[static_cast<std::size_t>(k)]) {
        if (--k < 0) break;
      } else {
        break;
      }
    }
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] = inf;
  }
  if (k < 0) {
    std::fill(d, d + n, inf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(j) + 1] < q) ++j;
    const int p = v[static_cast<std::size_t>(j)];
    d[q] = h2 * (q - p) * (q - p) + f[p];
  }
}

}  // namespace detail

/// Squared physical distance from every voxel to the nearest voxel whose
/// `target` flag equals `value`. Infinity when no such voxel exists.
inline std::vector<double> squared_distance_to(const Grid& g, const std::vector<std::uint8_t>& target,
                                               bool value) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> d(g.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = ((target[i] != 0) == value) ? 0.0 : inf;
  const int nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
  std::vector<double> f, out;
  std::vector<int> v;
  std::vector<double> z;
  auto pass = [&](int n, double h, auto&& addr, int count_a, int count_b) {
    f.resize(static_cast<std::size_t>(n));
    out.resize(static_cast<std::size_t>(n));
    for (int a = 0; a < count_a; ++a) {
      for (int b = 0; b < count_b; ++b) {
        for (int q = 0; q < n; ++q) f[static_cast<std::size_t>(q)] = d[addr(q, a, b)];
        detail::edt_1d(f.data(), out.data(), n, h, v, z);
        for (int q = 0; q < n; ++q) d[addr(q, a, b)] = out[static_cast<std::size_t>(q)];
      }
    }
  };
  pass(nx, g.spacing[0], [&](int q, int a, int b) { return g.index(q, a, b); }, ny, nz);
  pass(ny, g.spacing[1], [&](int q, int a, int b) { return g.index(a, q, b); }, nx, nz);
  pass(nz, g.spacing[2], [&](int q, int a, int b) { return g.index(a, b, q); }, nx, ny);
  return d;
}

/// Signed distance in mm, negative inside. Voxel centres are shifted by half
/// the smallest spacing so that the zero level lies between the outermost
/// inside voxel and the first outside voxel: boundary voxels sit at -h/2 and
/// their outside neighbours at +h/2 (h = min spacing). Hence
/// {sdf <= 0} reproduces the mask exactly.
inline std::vector<double> signed_distance(const Mask& m) {
  const auto to_fg = squared_distance_to(m.grid, m.bits, true);
  const auto to_bg = squared_distance_to(m.grid, m.bits, false);
  const double half = 0.5 * std::min({m.grid.spacing[0], m.grid.spacing[1], m.grid.spacing[2]});
  std::vector<double> sdf(m.grid.size());
  for (std::size_t i = 0; i < sdf.size(); ++i) {
    sdf[i] = m.bits[i] ? -(std::sqrt(to_bg[i]) - half) : (std::sqrt(to_fg[i]) - half);
  }
  return sdf;
}

}  // namespace radrobust
