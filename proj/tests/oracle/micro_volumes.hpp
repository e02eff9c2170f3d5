#pragma once

// Crafted volumes of at most 5x5x5 voxels for the feature oracle, plus the
// conversion to library types.

#include <string>
#include <vector>

#include "oracle/brute_radiomics.hpp"
#include "radrobust/roi_ops.hpp"
#include "radrobust/rng.hpp"

namespace oracle {

struct NamedVolume {
  std::string name;
  MicroVolume vol;
};

inline MicroVolume blank(int nx, int ny, int nz, double bw = 4.0, std::array<double, 3> sp = {1.0, 1.0, 1.0}) {
  MicroVolume m;
  m.dims = {nx, ny, nz};
  m.spacing = sp;
  m.bin_width = bw;
  m.intensity.assign(static_cast<std::size_t>(nx * ny * nz), 0.0);
  m.mask.assign(static_cast<std::size_t>(nx * ny * nz), 0);
  return m;
}

// Intensities are stored as float32 in volumes, so fixtures hold
// float-representable values only.
inline double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

inline MicroVolume random_volume(std::uint64_t seed, std::array<int, 3> dims, double density, double lo, double hi,
                                 double bw, std::array<double, 3> sp) {
  radrobust::Rng rng(seed);
  auto m = blank(dims[0], dims[1], dims[2], bw, sp);
  bool any = false;
  for (std::size_t i = 0; i < m.mask.size(); ++i) {
    m.intensity[i] = f32(lo + (hi - lo) * rng.uniform());
    m.mask[i] = rng.uniform() < density ? 1 : 0;
    any = any || m.mask[i];
  }
  if (!any) m.mask[0] = 1;
  return m;
}

inline std::vector<NamedVolume> micro_volumes() {
  std::vector<NamedVolume> out;
  {
    auto m = blank(1, 1, 1);
    m.intensity[0] = 17.0;
    m.mask[0] = 1;
    out.push_back({"single_voxel", m});
  }
  {
    auto m = blank(2, 1, 1);
    m.intensity = {0.0, 5.0};
    m.mask = {1, 1};
    out.push_back({"two_voxel_line", m});
  }
  {
    auto m = blank(4, 4, 1);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) {
        m.intensity[static_cast<std::size_t>(m.idx(x, y, 0))] = ((x + y) % 2) ? 4.0 : 0.0;
        m.mask[static_cast<std::size_t>(m.idx(x, y, 0))] = 1;
      }
    out.push_back({"checkerboard_4x4", m});
  }
  {
    auto m = blank(3, 3, 3);
    for (auto& v : m.intensity) v = 42.0;
    for (auto& b : m.mask) b = 1;
    out.push_back({"constant_cube", m});
  }
  {
    auto m = blank(5, 5, 5);
    radrobust::Rng rng(11);
    for (auto& v : m.intensity) v = f32(-30.0 + 60.0 * rng.uniform());
    for (auto& b : m.mask) b = 1;
    out.push_back({"full_cube_random", m});
  }
  {
    auto m = blank(5, 5, 5);
    radrobust::Rng rng(12);
    for (int z = 0; z < 5; ++z)
      for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) {
          const double r2 = (x - 2) * (x - 2) + (y - 2) * (y - 2) + (z - 2) * (z - 2);
          m.mask[static_cast<std::size_t>(m.idx(x, y, z))] = r2 <= 4.9 ? 1 : 0;
          m.intensity[static_cast<std::size_t>(m.idx(x, y, z))] = f32(20.0 + 25.0 * rng.normal());
        }
    out.push_back({"ball_r2", m});
  }
  {
    // Two same-level blobs of 3 and 5 voxels.
    auto m = blank(5, 5, 1);
    for (int x = 0; x < 3; ++x) m.mask[static_cast<std::size_t>(m.idx(x, 0, 0))] = 1;
    for (int x = 0; x < 5; ++x) m.mask[static_cast<std::size_t>(m.idx(x, 4, 0))] = 1;
    for (auto& v : m.intensity) v = 10.0;
    out.push_back({"two_blobs_3_5", m});
  }
  {
    auto m = blank(4, 4, 1);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) {
        m.intensity[static_cast<std::size_t>(m.idx(x, y, 0))] = 3.0 * x + 5.0 * y;
        m.mask[static_cast<std::size_t>(m.idx(x, y, 0))] = 1;
      }
    out.push_back({"gradient_plane", m});
  }
  {
    auto m = blank(4, 4, 2);
    for (int x = 0; x < 4; ++x) m.mask[static_cast<std::size_t>(m.idx(x, 0, 0))] = 1;
    for (int y = 0; y < 4; ++y) m.mask[static_cast<std::size_t>(m.idx(0, y, 0))] = 1;
    m.mask[static_cast<std::size_t>(m.idx(0, 0, 1))] = 1;
    for (std::size_t i = 0; i < m.intensity.size(); ++i) m.intensity[i] = static_cast<double>(i % 7) * 3.0;
    out.push_back({"l_shape", m});
  }
  {
    auto m = blank(5, 5, 5);
    for (int k = 0; k < 5; ++k) {
      m.mask[static_cast<std::size_t>(m.idx(k, k, k))] = 1;
      m.intensity[static_cast<std::size_t>(m.idx(k, k, k))] = k < 3 ? 1.0 : 9.0;
    }
    out.push_back({"space_diagonal", m});
  }
  {
    auto m = blank(5, 5, 5);
    radrobust::Rng rng(13);
    for (int z = 0; z < 5; ++z)
      for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) {
          const bool edge = x == 0 || y == 0 || z == 0 || x == 4 || y == 4 || z == 4;
          m.mask[static_cast<std::size_t>(m.idx(x, y, z))] = edge ? 1 : 0;
          m.intensity[static_cast<std::size_t>(m.idx(x, y, z))] = f32(50.0 * rng.uniform());
        }
    out.push_back({"hollow_cube", m});
  }
  {
    auto m = blank(4, 4, 1);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) {
        m.intensity[static_cast<std::size_t>(m.idx(x, y, 0))] = x % 2 ? 8.0 : 0.0;
        m.mask[static_cast<std::size_t>(m.idx(x, y, 0))] = 1;
      }
    out.push_back({"stripes", m});
  }
  out.push_back({"anisotropic_random", random_volume(21, {5, 4, 3}, 0.7, -40.0, 40.0, 4.0, {0.7, 1.2, 2.5})});
  out.push_back({"negative_hu", random_volume(22, {5, 5, 5}, 0.6, -100.0, 100.0, 4.0, {1.0, 1.0, 1.0})});
  out.push_back({"coarse_bins", random_volume(23, {5, 5, 4}, 0.8, -200.0, 300.0, 25.0, {1.0, 1.0, 1.0})});
  out.push_back({"unit_bins", random_volume(24, {4, 4, 4}, 0.75, 0.0, 12.0, 1.0, {0.8, 0.8, 1.5})});
  out.push_back({"sparse_scatter", random_volume(25, {5, 5, 5}, 0.25, 0.0, 20.0, 4.0, {1.0, 1.0, 1.0})});
  out.push_back({"dense_two_slices", random_volume(26, {5, 5, 2}, 0.9, 30.0, 70.0, 4.0, {0.6, 0.6, 3.0})});
  for (std::uint64_t s = 0; s < 8; ++s) {
    radrobust::Rng rng(100 + s);
    const std::array<int, 3> dims{2 + static_cast<int>(rng.index(4)), 2 + static_cast<int>(rng.index(4)),
                                  1 + static_cast<int>(rng.index(5))};
    const double bw = std::array<double, 4>{1.0, 2.5, 4.0, 10.0}[rng.index(4)];
    const std::array<double, 3> sp{0.5 + rng.uniform(), 0.5 + rng.uniform(), 0.5 + 2.0 * rng.uniform()};
    out.push_back({"random_" + std::to_string(s),
                   random_volume(200 + s, dims, 0.4 + 0.5 * rng.uniform(), -50.0, 50.0, bw, sp)});
  }
  return out;
}

struct LibraryInput {
  radrobust::VoxelVolume volume;
  radrobust::Voi voi;
};

inline LibraryInput to_library(const MicroVolume& m) {
  radrobust::Grid g;
  g.dims = m.dims;
  g.spacing = m.spacing;
  LibraryInput in;
  in.volume.grid = g;
  in.volume.data.reserve(m.intensity.size());
  for (double v : m.intensity) in.volume.data.push_back(static_cast<float>(v));
  in.voi.mask = radrobust::Mask(g);
  for (std::size_t i = 0; i < m.mask.size(); ++i) in.voi.mask.bits[i] = m.mask[i] ? 1 : 0;
  return in;
}

}  // namespace oracle
