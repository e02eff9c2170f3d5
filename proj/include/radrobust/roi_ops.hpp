#pragma once

// Volume-of-interest manipulation: largest-lesion selection, lesion merging,
// boundary rims, and random contour perturbation that imitates reader
// variability.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "radrobust/distance.hpp"
#include "radrobust/error.hpp"
#include "radrobust/feature_matrix.hpp"
#include "radrobust/rng.hpp"
#include "radrobust/volume.hpp"

namespace radrobust {

struct Provenance {
  enum class Kind { original, perturbed, rim, merged, largest };
  Kind kind = Kind::original;
  std::uint64_t seed = 0;
  int index = 0;
};

struct Voi {
  Mask mask;
  Provenance provenance;

  const Grid& grid() const { return mask.grid; }
};

struct PerturbConfig {
  int n_replicates = 10;
  double max_displacement_mm = 2.0;
  double correlation_length_mm = 10.0;
  std::uint64_t seed = 0;
  double dice_floor = 0.85;

  void validate() const {
    if (n_replicates < 1) throw ConfigError("n_replicates must be positive");
    if (max_displacement_mm < 0.0) throw ConfigError("max_displacement_mm must be nonnegative");
    if (!(correlation_length_mm > 0.0)) throw ConfigError("correlation_length_mm must be positive");
    if (!(max_displacement_mm < correlation_length_mm)) {
      throw ConfigError("max_displacement_mm must be smaller than correlation_length_mm");
    }
    if (!(dice_floor > 0.0 && dice_floor < 1.0)) throw ConfigError("dice_floor must lie in (0,1)");
  }
};

inline bool in_scope(Site site, SiteScope scope) {
  switch (scope) {
    case SiteScope::all: return true;
    case SiteScope::omentum: return site == Site::omentum;
    case SiteScope::pelvis: return site == Site::pelvis;
  }
  return false;
}

inline double dice(const Mask& a, const Mask& b) {
  if (!(a.grid == b.grid)) throw geometry_error("dice on masks with different grids");
  std::size_t inter = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    const bool x = a.bits[i] != 0, y = b.bits[i] != 0;
    inter += x && y;
    na += x;
    nb += y;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

/// Inclusive voxel bounding box.
struct Box {
  Index3 lo{0, 0, 0};
  Index3 hi{-1, -1, -1};

  bool empty() const { return hi[0] < lo[0]; }
  Index3 extent() const { return {hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1}; }
};

inline Box bounding_box(const Mask& m) {
  Box b{{m.grid.dims[0], m.grid.dims[1], m.grid.dims[2]}, {-1, -1, -1}};
  for (int z = 0; z < m.grid.dims[2]; ++z) {
    for (int y = 0; y < m.grid.dims[1]; ++y) {
      for (int x = 0; x < m.grid.dims[0]; ++x) {
        if (!m.at(x, y, z)) continue;
        const Index3 p{x, y, z};
        for (int a = 0; a < 3; ++a) {
          b.lo[a] = std::min(b.lo[a], p[a]);
          b.hi[a] = std::max(b.hi[a], p[a]);
        }
      }
    }
  }
  if (b.hi[0] < 0) return Box{};
  return b;
}

/// Box grown by `margin_mm` on every side (rounded up per axis), clipped to the grid.
inline Box grow(const Box& b, const Grid& g, double margin_mm) {
  Box out = b;
  for (int a = 0; a < 3; ++a) {
    const int m = static_cast<int>(std::ceil(margin_mm / g.spacing[a] - 1e-9));
    out.lo[a] = std::max(0, b.lo[a] - m);
    out.hi[a] = std::min(g.dims[a] - 1, b.hi[a] + m);
  }
  return out;
}

inline Grid sub_grid(const Grid& g, const Box& b) {
  Grid s;
  s.dims = b.extent();
  s.spacing = g.spacing;
  for (int a = 0; a < 3; ++a) s.origin[a] = g.origin[a] + b.lo[a] * g.spacing[a];
  return s;
}

inline Mask crop(const Mask& m, const Box& b) {
  Mask out(sub_grid(m.grid, b));
  const auto e = b.extent();
  for (int z = 0; z < e[2]; ++z)
    for (int y = 0; y < e[1]; ++y)
      for (int x = 0; x < e[0]; ++x) out.bits[out.grid.index(x, y, z)] = m.bits[m.grid.index(x + b.lo[0], y + b.lo[1], z + b.lo[2])];
  return out;
}

/// Writes `part` (cropped at `b`) back onto a zeroed mask over `full`.
inline Mask uncrop(const Mask& part, const Box& b, const Grid& full) {
  Mask out(full);
  const auto e = b.extent();
  for (int z = 0; z < e[2]; ++z)
    for (int y = 0; y < e[1]; ++y)
      for (int x = 0; x < e[0]; ++x) out.bits[full.index(x + b.lo[0], y + b.lo[1], z + b.lo[2])] = part.bits[part.grid.index(x, y, z)];
  return out;
}

/// Lesion with the largest physical volume among those in scope; ties go to
/// the lexicographically smallest id.
inline Voi select_largest(const LesionSet& set, SiteScope scope) {
  const Lesion* best = nullptr;
  double best_vol = -1.0;
  for (const auto& l : set.lesions) {
    if (!in_scope(l.site, scope)) continue;
    const double v = l.mask.physical_volume();
    if (best == nullptr || v > best_vol || (v == best_vol && l.id < best->id)) {
      best = &l;
      best_vol = v;
    }
  }
  if (best == nullptr) throw DataError("no-lesion", "no lesion in scope " + to_string(scope));
  return {best->mask, {Provenance::Kind::largest, 0, 0}};
}

/// Voxelwise union of all in-scope lesions.
inline Voi merge_lesions(const LesionSet& set, SiteScope scope) {
  Mask out(set.grid);
  bool any = false;
  for (const auto& l : set.lesions) {
    if (!in_scope(l.site, scope)) continue;
    any = true;
    for (std::size_t i = 0; i < out.bits.size(); ++i) out.bits[i] |= l.mask.bits[i];
  }
  if (!any) throw DataError("no-lesion", "no lesion in scope " + to_string(scope));
  return {std::move(out), {Provenance::Kind::merged, 0, 0}};
}

/// Band {-inner_mm <= sdf <= outer_mm} straddling the VOI boundary, clipped
/// to the image. The default 3 + 3 mm gives a 6-mm rim split evenly between
/// lesion periphery and surrounding tissue.
inline Voi make_rim(const Voi& voi, double inner_mm = 3.0, double outer_mm = 3.0) {
  if (!(inner_mm >= 0.0 && outer_mm >= 0.0 && inner_mm + outer_mm > 0.0)) {
    throw ConfigError("rim widths must be nonnegative with a positive total");
  }
  const Box bb = bounding_box(voi.mask);
  if (bb.empty()) throw DataError("empty-mask", "rim of an empty VOI");
  const double pad = std::max({voi.grid().spacing[0], voi.grid().spacing[1], voi.grid().spacing[2]});
  const Box box = grow(bb, voi.grid(), outer_mm + 2.0 * pad);
  const Mask local = crop(voi.mask, box);
  const auto sdf = signed_distance(local);
  Mask band(local.grid);
  bool any = false;
  for (std::size_t i = 0; i < sdf.size(); ++i) {
    if (sdf[i] >= -inner_mm && sdf[i] <= outer_mm) {
      band.bits[i] = 1;
      any = true;
    }
  }
  if (!any) throw ComputeError("degenerate-rim", "rim is empty");
  return {uncrop(band, box, voi.grid()), {Provenance::Kind::rim, 0, 0}};
}

namespace detail {

// Catmull-Rom weights for fractional offset t in [0,1).
inline std::array<double, 4> cubic_weights(double t) {
  const double t2 = t * t, t3 = t2 * t;
  return {0.5 * (-t3 + 2 * t2 - t), 0.5 * (3 * t3 - 5 * t2 + 2), 0.5 * (-3 * t3 + 4 * t2 + t), 0.5 * (t3 - t2)};
}

}  // namespace detail

/// Smooth zero-mean, unit-variance random field on `g`: white noise on a
/// lattice of pitch `pitch_mm`, Catmull-Rom interpolated, then standardized.
inline std::vector<double> smooth_random_field(const Grid& g, double pitch_mm, std::uint64_t seed) {
  Rng rng(seed);
  Index3 nodes{};
  for (int a = 0; a < 3; ++a) {
    const double extent = (g.dims[a] - 1) * g.spacing[a];
    nodes[a] = static_cast<int>(std::floor(extent / pitch_mm)) + 4;
  }
  std::vector<double> lattice(static_cast<std::size_t>(nodes[0]) * nodes[1] * nodes[2]);
  for (auto& v : lattice) v = rng.normal();
  auto node = [&](int i, int j, int k) {
    return lattice[static_cast<std::size_t>(i) + static_cast<std::size_t>(nodes[0]) * (j + static_cast<std::size_t>(nodes[1]) * k)];
  };
  // Separable per-axis stencils: voxel q sits at lattice coordinate 1 + q*h/pitch.
  std::array<std::vector<int>, 3> base;
  std::array<std::vector<std::array<double, 4>>, 3> w;
  for (int a = 0; a < 3; ++a) {
    for (int q = 0; q < g.dims[a]; ++q) {
      const double u = 1.0 + q * g.spacing[a] / pitch_mm;
      const int i = static_cast<int>(std::floor(u));
      base[a].push_back(i - 1);
      w[a].push_back(detail::cubic_weights(u - i));
    }
  }
  // Interpolate one axis at a time: x over the lattice, then y, then z.
  std::vector<double> ax(static_cast<std::size_t>(g.dims[0]) * nodes[1] * nodes[2]);
  for (int k = 0; k < nodes[2]; ++k)
    for (int j = 0; j < nodes[1]; ++j)
      for (int x = 0; x < g.dims[0]; ++x) {
        double v = 0.0;
        for (int a = 0; a < 4; ++a) v += w[0][x][a] * node(base[0][x] + a, j, k);
        ax[static_cast<std::size_t>(x) + static_cast<std::size_t>(g.dims[0]) * (j + static_cast<std::size_t>(nodes[1]) * k)] = v;
      }
  std::vector<double> axy(static_cast<std::size_t>(g.dims[0]) * g.dims[1] * nodes[2]);
  for (int k = 0; k < nodes[2]; ++k)
    for (int y = 0; y < g.dims[1]; ++y)
      for (int x = 0; x < g.dims[0]; ++x) {
        double v = 0.0;
        for (int b = 0; b < 4; ++b) {
          v += w[1][y][b] * ax[static_cast<std::size_t>(x) + static_cast<std::size_t>(g.dims[0]) * (base[1][y] + b + static_cast<std::size_t>(nodes[1]) * k)];
        }
        axy[static_cast<std::size_t>(x) + static_cast<std::size_t>(g.dims[0]) * (y + static_cast<std::size_t>(g.dims[1]) * k)] = v;
      }
  std::vector<double> field(g.size());
  const std::size_t plane = static_cast<std::size_t>(g.dims[0]) * g.dims[1];
  double sum = 0.0;
  for (int z = 0; z < g.dims[2]; ++z) {
    for (std::size_t xy = 0; xy < plane; ++xy) {
      double v = 0.0;
      for (int c = 0; c < 4; ++c) v += w[2][z][c] * axy[xy + plane * static_cast<std::size_t>(base[2][z] + c)];
      field[xy + plane * static_cast<std::size_t>(z)] = v;
      sum += v;
    }
  }
  const double mean = sum / static_cast<double>(field.size());
  double ss = 0.0;
  for (double v : field) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(field.size()));
  for (double& v : field) v = sd > 0.0 ? (v - mean) / sd : 0.0;
  return field;
}

/// Randomized contours of one VOI. The signed distance of the original mask
/// is computed once and shared by all replicates; replicate r is
/// {sdf <= amp * field_r} with amp = max_displacement_mm. If the Dice overlap
/// with the original falls below cfg.dice_floor the amplitude is halved and
/// the mask rebuilt, at most five times.
class ContourPerturber {
public:
  ContourPerturber(const Voi& voi, const PerturbConfig& cfg) : cfg_(cfg), original_(voi) {
    cfg.validate();
    if (cfg.max_displacement_mm == 0.0) return;
    const Box bb = bounding_box(voi.mask);
    if (bb.empty()) throw DataError("empty-mask", "perturbation of an empty VOI");
    const double pad = std::max({voi.grid().spacing[0], voi.grid().spacing[1], voi.grid().spacing[2]});
    box_ = grow(bb, voi.grid(), 5.0 * cfg.max_displacement_mm + pad);
    local_ = crop(voi.mask, box_);
    sdf_ = signed_distance(local_);
  }

  Voi replicate(int replicate_index) const {
    if (replicate_index < 0 || replicate_index >= cfg_.n_replicates) {
      throw ConfigError("replicate_index outside [0, n_replicates)");
    }
    Provenance prov{Provenance::Kind::perturbed, cfg_.seed, replicate_index};
    if (cfg_.max_displacement_mm == 0.0) return {original_.mask, prov};
    const auto field = smooth_random_field(local_.grid, cfg_.correlation_length_mm,
                                           derive_seed(cfg_.seed, static_cast<std::uint64_t>(replicate_index)));
    double amp = cfg_.max_displacement_mm;
    for (int attempt = 0; attempt <= 5; ++attempt, amp *= 0.5) {
      Mask out(local_.grid);
      for (std::size_t i = 0; i < sdf_.size(); ++i) out.bits[i] = sdf_[i] <= amp * field[i];
      if (out.empty()) continue;
      if (dice(out, local_) >= cfg_.dice_floor) return {uncrop(out, box_, original_.grid()), prov};
    }
    throw ComputeError("perturbation-failure",
                       "Dice floor not reached after 5 retries; lesion too small for the perturbation settings");
  }

private:
  PerturbConfig cfg_;
  Voi original_;
  Box box_{};
  Mask local_;
  std::vector<double> sdf_;
};

/// Replicate `replicate_index` of a randomized contour (see ContourPerturber).
inline Voi perturb(const Voi& voi, const PerturbConfig& cfg, int replicate_index) {
  cfg.validate();
  if (replicate_index < 0 || replicate_index >= cfg.n_replicates) {
    throw ConfigError("replicate_index outside [0, n_replicates)");
  }
  return ContourPerturber(voi, cfg).replicate(replicate_index);
}

/// Applies `perturb` to every lesion independently; lesion k of replicate r
/// uses seed derive_seed(cfg.seed, lesion id).
inline LesionSet perturb_lesions(const LesionSet& set, const PerturbConfig& cfg, int replicate_index) {
  LesionSet out;
  out.grid = set.grid;
  for (const auto& l : set.lesions) {
    PerturbConfig c = cfg;
    c.seed = derive_seed(cfg.seed, l.id);
    out.lesions.push_back({l.id, l.site, perturb({l.mask, {}}, c, replicate_index).mask});
  }
  return out;
}

/// All cfg.n_replicates replicates at once; element r equals
/// perturb_lesions(set, cfg, r).
inline std::vector<LesionSet> perturb_lesions_all(const LesionSet& set, const PerturbConfig& cfg) {
  cfg.validate();
  std::vector<LesionSet> out(static_cast<std::size_t>(cfg.n_replicates));
  for (auto& r : out) r.grid = set.grid;
  for (const auto& l : set.lesions) {
    PerturbConfig c = cfg;
    c.seed = derive_seed(cfg.seed, l.id);
    const ContourPerturber pert({l.mask, {}}, c);
    for (int r = 0; r < cfg.n_replicates; ++r) {
      out[static_cast<std::size_t>(r)].lesions.push_back({l.id, l.site, pert.replicate(r).mask});
    }
  }
  return out;
}

}  // namespace radrobust
