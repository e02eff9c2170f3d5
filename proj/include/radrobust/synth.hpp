#pragma once

// Synthetic cohorts with planted structure.
//
// Each patient gets a pre- and post-treatment CT with 1-3 ellipsoidal lesions
// (first omentum, second pelvis, extras drawn by site probabilities). Two
// class-dependent signals are planted in every lesion:
//   * texture grain: the lesion interior carries Gaussian-smoothed noise whose
//     smoothing width depends on the class (fine grain for responders), which
//     GLCM Contrast and its relatives pick up. The signal fills the whole
//     lesion, so small contour changes barely move it.
//   * boundary speckle: responders carry sparse bright voxels in the
//     outermost `shell_mm` of each lesion, and every lesion (either class)
//     sits in a halo of tissue with the same kind of speckle. On the drawn
//     contour only responders reach the speckle intensity, so the maximum
//     separates the classes; any perturbation that expands the contour pulls
//     halo speckle in for everyone and erases the difference. The maximum is
//     therefore informative but fragile. Bright rather than dark speckle
//     leaves the discretization anchor (the VOI minimum) alone, so the
//     gray-level texture features do not inherit the signal. Speckle is sparse enough that texture and
//     bulk intensity statistics barely notice it, and a per-patient
//     attenuation offset keeps bulk intensity uninformative.
// Labels for all four response metrics agree with the class.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "radrobust/distance.hpp"
#include "radrobust/error.hpp"
#include "radrobust/labels.hpp"
#include "radrobust/manifest.hpp"
#include "radrobust/rng.hpp"
#include "radrobust/volume.hpp"

namespace radrobust {

struct SynthConfig {
  int n_patients = 60;
  double positive_fraction = 0.5;
  std::string id_prefix = "P";
  int lesions_min = 1;
  int lesions_max = 3;
  double radius_min_mm = 7.0;
  double radius_max_mm = 11.0;
  double axis_jitter = 0.15;  // per-axis semi-axis scale in [1-j, 1+j]
  std::array<double, 3> site_probability{0.45, 0.45, 0.10};  // extra lesions: omentum, pelvis, other
  Vec3 spacing{1.0, 1.0, 1.0};
  double margin_mm = 9.0;

  double background_hu = 45.0;
  double background_sd_hu = 6.0;
  double lesion_hu = 35.0;
  double lesion_hu_jitter = 8.0;  // sd of the per-patient attenuation offset
  double texture_sd_hu = 22.0;
  double grain_sigma_negative = 1.1;  // voxels
  double grain_sigma_positive = 0.8;
  double grain_jitter = 0.2;          // sd of the per-patient grain width

  double shell_mm = 2.0;
  double shell_speckle_positive = 0.003;  // fraction of shell voxels
  double shell_speckle_negative = 0.0;
  double halo_mm = 2.0;
  double halo_speckle = 0.01;
  double speckle_hu = 170.0;
  double speckle_sd_hu = 10.0;
  double shell_speckle_hu_jitter = 15.0;  // sd of the per-patient shell speckle level

  /// When false the post-treatment scans carry lesion masks and SLD only
  /// (an empty intensity volume), which is all label derivation needs.
  bool post_images = true;

  /// Planted features, as catalog names ("<family>.<feature>"). The grain
  /// signal moves the whole GLCM difference cluster (Contrast,
  /// DifferenceAverage, DifferenceVariance, ...); these members correlate
  /// above the UFS cutoff, and DifferenceVariance carries the largest F
  /// statistic, so it is the member that survives UFS and stands for the
  /// signal in selection outcomes.
  std::string robust_feature = "glcm.DifferenceVariance";
  std::string fragile_feature = "firstorder.Maximum";

  std::uint64_t seed = 1;

  void validate() const {
    if (n_patients < 2) throw ConfigError("synth: n_patients must be >= 2");
    const int pos = positive_count();
    if (pos < 5 || n_patients - pos < 5) throw ConfigError("synth: each class needs at least 5 patients");
    if (lesions_min < 1 || lesions_max < lesions_min || lesions_max > 8) throw ConfigError("synth: bad lesion count range");
    const double min_sp = std::min({spacing[0], spacing[1], spacing[2]});
    const double max_sp = std::max({spacing[0], spacing[1], spacing[2]});
    if (!(min_sp > 0.0)) throw ConfigError("synth: spacing must be positive");
    if (radius_min_mm * (1.0 - axis_jitter) < 3.0 * max_sp) throw ConfigError("synth: lesion radii must be >= 3 voxels");
    if (radius_max_mm < radius_min_mm) throw ConfigError("synth: radius_max_mm < radius_min_mm");
    if (axis_jitter < 0.0 || axis_jitter >= 0.5) throw ConfigError("synth: axis_jitter must lie in [0, 0.5)");
    if (radius_max_mm * (1.0 + axis_jitter) > 60.0) throw ConfigError("synth: lesion larger than the volume allows");
    if (!(positive_fraction > 0.0 && positive_fraction < 1.0)) throw ConfigError("synth: positive_fraction in (0,1)");
    if (grain_sigma_negative <= 0.0 || grain_sigma_positive <= 0.0) throw ConfigError("synth: grain widths must be > 0");
    for (double f : {shell_speckle_positive, shell_speckle_negative, halo_speckle}) {
      if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("synth: speckle fractions must lie in [0,1]");
    }
    if (shell_mm < 0.0 || halo_mm < 0.0) throw ConfigError("synth: shell_mm and halo_mm must be >= 0");
  }

  int positive_count() const { return static_cast<int>(std::lround(positive_fraction * n_patients)); }
};

struct SynthLesionShape {
  std::string id;
  Site site = Site::other;
  Vec3 center{};      // mm
  Vec3 semi_axes{};   // mm
};

struct SynthScan {
  VoxelVolume volume;
  LesionSet lesions;
  double sld_mm = 0.0;
};

struct SynthPatient {
  std::string id;
  int label = 0;  // 1 = responder
  double grain_sigma = 0.0;
  double lesion_hu = 0.0;
  double shell_speckle = 0.0;
  double shell_speckle_hu = 0.0;
  double volume_reduction = 0.0;  // fraction
  int crs = 1;
  Recist recist = Recist::SD;
  SynthScan pre;
  SynthScan post;
};

struct SynthCohort {
  SynthConfig config;
  std::vector<SynthPatient> patients;

  std::map<std::string, int> labels() const {
    std::map<std::string, int> out;
    for (const auto& p : patients) out[p.id] = p.label;
    return out;
  }
};

namespace detail {

/// Separable Gaussian smoothing (radius 3 sigma, truncated at the volume
/// edge and renormalized).
inline std::vector<double> gaussian_smooth(const Grid& g, std::vector<double> v, double sigma_vox) {
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma_vox)));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  for (int i = -r; i <= r; ++i) k[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * i * i / (sigma_vox * sigma_vox));
  std::vector<double> line, out;
  const std::array<std::size_t, 3> stride{1, static_cast<std::size_t>(g.dims[0]),
                                          static_cast<std::size_t>(g.dims[0]) * static_cast<std::size_t>(g.dims[1])};
  for (int a = 0; a < 3; ++a) {
    const int n = g.dims[a];
    const std::size_t st = stride[static_cast<std::size_t>(a)];
    line.resize(static_cast<std::size_t>(n));
    out.resize(static_cast<std::size_t>(n));
    // Walk every line along axis a: its start has coordinate 0 on that axis.
    for (std::size_t start = 0; start < v.size(); ++start) {
      if ((start / st) % static_cast<std::size_t>(n) != 0) continue;
      for (int q = 0; q < n; ++q) line[static_cast<std::size_t>(q)] = v[start + static_cast<std::size_t>(q) * st];
      for (int c = 0; c < n; ++c) {
        const int lo = std::max(-r, -c), hi = std::min(r, n - 1 - c);
        double acc = 0.0, wsum = 0.0;
        for (int t = lo; t <= hi; ++t) {
          const double w = k[static_cast<std::size_t>(t + r)];
          acc += w * line[static_cast<std::size_t>(c + t)];
          wsum += w;
        }
        out[static_cast<std::size_t>(c)] = acc / wsum;
      }
      for (int q = 0; q < n; ++q) v[start + static_cast<std::size_t>(q) * st] = out[static_cast<std::size_t>(q)];
    }
  }
  return v;
}

inline std::vector<double> standardized(std::vector<double> v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(v.size()));
  for (auto& x : v) x = sd > 0.0 ? (x - m) / sd : 0.0;
  return v;
}

inline SynthScan render_scan(const SynthConfig& cfg, const std::vector<SynthLesionShape>& shapes, const Grid& grid,
                             const SynthPatient& p, std::uint64_t seed, bool with_image = true) {
  Rng rng(seed);
  Rng speckle_rng(derive_seed(seed, std::string("speckle")));
  SynthScan scan;
  scan.lesions.grid = grid;
  Mask any(grid);
  for (const auto& s : shapes) {
    Mask m(grid);
    for (int z = 0; z < grid.dims[2]; ++z)
      for (int y = 0; y < grid.dims[1]; ++y)
        for (int x = 0; x < grid.dims[0]; ++x) {
          const double dx = (x * grid.spacing[0] - s.center[0]) / s.semi_axes[0];
          const double dy = (y * grid.spacing[1] - s.center[1]) / s.semi_axes[1];
          const double dz = (z * grid.spacing[2] - s.center[2]) / s.semi_axes[2];
          if (dx * dx + dy * dy + dz * dz <= 1.0) m.bits[grid.index(x, y, z)] = 1;
        }
    if (m.empty()) continue;  // shrunk away after treatment
    for (std::size_t i = 0; i < m.bits.size(); ++i) any.bits[i] |= m.bits[i];
    scan.sld_mm += 2.0 * std::max({s.semi_axes[0], s.semi_axes[1], s.semi_axes[2]});
    scan.lesions.lesions.push_back({s.id, s.site, std::move(m)});
  }

  scan.volume.grid = grid;
  if (!with_image) return scan;
  std::vector<double> white(grid.size()), bg(grid.size());
  for (auto& v : white) v = rng.normal();
  for (auto& v : bg) v = rng.normal();
  const auto texture = standardized(gaussian_smooth(grid, std::move(white), p.grain_sigma));
  const auto background = standardized(gaussian_smooth(grid, std::move(bg), 1.5));
  const auto sdf = any.empty() ? std::vector<double>(grid.size(), 1e9) : signed_distance(any);

  scan.volume.data.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double v;
    double speckle = 0.0, level = cfg.speckle_hu;
    if (any.bits[i]) {
      v = p.lesion_hu + cfg.texture_sd_hu * texture[i];
      if (sdf[i] >= -cfg.shell_mm) {
        speckle = p.shell_speckle;
        level = p.shell_speckle_hu;
      }
    } else {
      v = cfg.background_hu + cfg.background_sd_hu * background[i];
      if (sdf[i] <= cfg.halo_mm) speckle = cfg.halo_speckle;
    }
    // The hit draw is unconditional so the main stream does not depend on
    // geometry; speckle levels come from their own stream.
    if (rng.uniform() < speckle) v = level + cfg.speckle_sd_hu * speckle_rng.normal();
    scan.volume.data[i] = static_cast<float>(v);
  }
  return scan;
}

}  // namespace detail

/// One patient, fully determined by (cfg.seed, id, label).
inline SynthPatient generate_patient(const SynthConfig& cfg, const std::string& id, int label) {
  Rng rng(derive_seed(cfg.seed, id));
  SynthPatient p;
  p.id = id;
  p.label = label;
  const double grain_mean = label ? cfg.grain_sigma_positive : cfg.grain_sigma_negative;
  p.grain_sigma = std::max(0.3, grain_mean + cfg.grain_jitter * rng.normal());
  p.lesion_hu = cfg.lesion_hu + cfg.lesion_hu_jitter * rng.normal();
  p.shell_speckle = label ? cfg.shell_speckle_positive : cfg.shell_speckle_negative;
  p.shell_speckle_hu = cfg.speckle_hu + cfg.shell_speckle_hu_jitter * rng.normal();

  const int n_les = cfg.lesions_min + static_cast<int>(rng.index(static_cast<std::size_t>(cfg.lesions_max - cfg.lesions_min + 1)));
  std::vector<SynthLesionShape> shapes;
  double x_cursor = cfg.margin_mm;
  double extent_yz = 0.0;
  for (int k = 0; k < n_les; ++k) {
    SynthLesionShape s;
    s.id = "L" + std::to_string(k + 1);
    if (k == 0) s.site = Site::omentum;
    else if (k == 1) s.site = Site::pelvis;
    else {
      const double u = rng.uniform() * (cfg.site_probability[0] + cfg.site_probability[1] + cfg.site_probability[2]);
      s.site = u < cfg.site_probability[0] ? Site::omentum
               : u < cfg.site_probability[0] + cfg.site_probability[1] ? Site::pelvis
                                                                       : Site::other;
    }
    const double r = cfg.radius_min_mm + (cfg.radius_max_mm - cfg.radius_min_mm) * rng.uniform();
    for (int a = 0; a < 3; ++a) {
      s.semi_axes[static_cast<std::size_t>(a)] = r * (1.0 + cfg.axis_jitter * (2.0 * rng.uniform() - 1.0));
    }
    s.center[0] = x_cursor + s.semi_axes[0];
    x_cursor += 2.0 * s.semi_axes[0] + cfg.margin_mm;
    extent_yz = std::max({extent_yz, 2.0 * s.semi_axes[1], 2.0 * s.semi_axes[2]});
    shapes.push_back(s);
  }
  Grid grid;
  grid.spacing = cfg.spacing;
  const double ey = extent_yz + 2.0 * cfg.margin_mm;
  grid.dims = {static_cast<int>(std::ceil(x_cursor / cfg.spacing[0])) + 1,
               static_cast<int>(std::ceil(ey / cfg.spacing[1])) + 1,
               static_cast<int>(std::ceil(ey / cfg.spacing[2])) + 1};
  for (auto& s : shapes) {
    s.center[1] = 0.5 * (grid.dims[1] - 1) * cfg.spacing[1];
    s.center[2] = 0.5 * (grid.dims[2] - 1) * cfg.spacing[2];
  }

  // Responders lose 75-95% of tumour volume, non-responders between -10% and 50%.
  p.volume_reduction = label ? 0.75 + 0.20 * rng.uniform() : -0.10 + 0.60 * rng.uniform();
  p.crs = label ? 3 : 1 + static_cast<int>(rng.index(2));
  if (label) p.recist = p.volume_reduction > 0.9 ? Recist::CR : Recist::PR;
  else p.recist = p.volume_reduction < 0.0 ? Recist::PD : Recist::SD;

  p.pre = detail::render_scan(cfg, shapes, grid, p, derive_seed(rng.next(), 1));
  const double scale = std::cbrt(1.0 - p.volume_reduction);
  auto post_shapes = shapes;
  for (auto& s : post_shapes) {
    for (auto& a : s.semi_axes) a *= scale;
  }
  p.post = detail::render_scan(cfg, post_shapes, grid, p, derive_seed(rng.next(), 2), cfg.post_images);
  if (p.post.sld_mm <= 0.0) p.post.sld_mm = 0.1;  // a vanished tumour still needs a positive SLD cell
  return p;
}

/// Deterministic cohort: the first round(fraction * n) shuffled slots are
/// responders.
inline SynthCohort generate_cohort(const SynthConfig& cfg) {
  cfg.validate();
  SynthCohort c;
  c.config = cfg;
  std::vector<int> labels(static_cast<std::size_t>(cfg.n_patients), 0);
  for (int i = 0; i < cfg.positive_count(); ++i) labels[static_cast<std::size_t>(i)] = 1;
  Rng rng(derive_seed(cfg.seed, std::string("labels")));
  rng.shuffle(labels);
  for (int i = 0; i < cfg.n_patients; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%04d", cfg.id_prefix.c_str(), i + 1);
    c.patients.push_back(generate_patient(cfg, buf, labels[static_cast<std::size_t>(i)]));
  }
  return c;
}

/// Writes <dir>/<id>_<tp>.mvol/.mmask and <dir>/manifest.csv.
inline CohortManifest write_cohort(const SynthCohort& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  CohortManifest m;
  for (const auto& p : c.patients) {
    if (p.post.volume.data.empty()) throw ConfigError("synth: write_cohort needs post_images = true");
    for (auto tp : {Timepoint::pre, Timepoint::post}) {
      const auto& scan = tp == Timepoint::pre ? p.pre : p.post;
      ManifestRow row;
      row.patient_id = p.id;
      row.timepoint = tp;
      row.volume_path = dir / (p.id + "_" + to_string(tp) + ".mvol");
      row.mask_path = dir / (p.id + "_" + to_string(tp) + ".mmask");
      write_volume(scan.volume, row.volume_path);
      write_lesions(scan.lesions, row.mask_path);
      if (tp == Timepoint::pre) {
        row.crs = p.crs;
        row.recist = p.recist;
      }
      row.sld_mm = std::round(scan.sld_mm * 100.0) / 100.0;
      m.rows.push_back(row);
    }
  }
  write_manifest(m, dir / "manifest.csv");
  return m;
}

}  // namespace radrobust
