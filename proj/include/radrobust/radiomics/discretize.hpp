#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "radrobust/error.hpp"
#include "radrobust/roi_ops.hpp"
#include "radrobust/volume.hpp"

namespace radrobust::radiomics {

/// Fixed bin-width discretization. Bin edges are anchored at
/// floor(I_min / bin_width) * bin_width, I_min being the VOI minimum.
struct DiscretizationConfig {
  double bin_width = 4.0;

  void validate() const {
    if (!(bin_width > 0.0)) throw ConfigError("bin_width must be positive");
  }
};

/// VOI cropped to its bounding box, with gray levels assigned.
struct RoiImage {
  Grid grid;                          // cropped geometry, origin of the crop corner
  std::vector<std::uint8_t> inside;   // VOI membership
  std::vector<double> intensity;      // raw HU for every crop voxel
  std::vector<int> level;             // 1..n_levels inside, 0 outside
  int n_levels = 0;                   // highest level (number of bins spanned)
  std::vector<int> present_levels;    // occupied levels, ascending
  std::vector<double> values;         // in-VOI intensities, scan order
  std::vector<int> value_levels;      // level of each entry of `values`

  bool in(int x, int y, int z) const { return grid.contains(x, y, z) && inside[grid.index(x, y, z)]; }
  std::size_t voxel_count() const { return values.size(); }
};

inline int bin_index(double intensity, double bin_width) {
  return static_cast<int>(std::floor(intensity / bin_width));
}

inline RoiImage discretize(const VoxelVolume& vol, const Voi& voi, const DiscretizationConfig& cfg) {
  cfg.validate();
  if (!(vol.grid == voi.grid())) throw geometry_error("volume and VOI grids differ");
  const Box box = bounding_box(voi.mask);
  if (box.empty()) throw DataError("empty-mask", "VOI is empty");
  RoiImage r;
  r.grid = sub_grid(vol.grid, box);
  r.grid.origin = {0.0, 0.0, 0.0};
  const std::size_t n = r.grid.size();
  r.inside.assign(n, 0);
  r.intensity.assign(n, 0.0);
  r.level.assign(n, 0);
  const auto e = box.extent();
  double vmin = HUGE_VAL;
  for (int z = 0; z < e[2]; ++z) {
    for (int y = 0; y < e[1]; ++y) {
      for (int x = 0; x < e[0]; ++x) {
        const std::size_t src = vol.grid.index(x + box.lo[0], y + box.lo[1], z + box.lo[2]);
        const std::size_t dst = r.grid.index(x, y, z);
        r.intensity[dst] = vol.data[src];
        if (voi.mask.bits[src]) {
          r.inside[dst] = 1;
          vmin = std::min(vmin, r.intensity[dst]);
        }
      }
    }
  }
  const int anchor = bin_index(vmin, cfg.bin_width);
  std::vector<char> occupied;
  for (std::size_t i = 0; i < n; ++i) {
    if (!r.inside[i]) continue;
    const int l = bin_index(r.intensity[i], cfg.bin_width) - anchor + 1;
    r.level[i] = l;
    r.n_levels = std::max(r.n_levels, l);
    if (occupied.size() <= static_cast<std::size_t>(l)) occupied.resize(static_cast<std::size_t>(l) + 1, 0);
    occupied[static_cast<std::size_t>(l)] = 1;
    r.values.push_back(r.intensity[i]);
    r.value_levels.push_back(l);
  }
  for (int l = 1; l < static_cast<int>(occupied.size()); ++l) {
    if (occupied[static_cast<std::size_t>(l)]) r.present_levels.push_back(l);
  }
  return r;
}

}  // namespace radrobust::radiomics
