#include <gtest/gtest.h>

#include "radrobust/cohort_features.hpp"
#include "radrobust/robustness.hpp"
#include "radrobust/stats.hpp"
#include "radrobust/synth.hpp"
#include "test_support.hpp"

using namespace radrobust;

namespace {

SynthConfig small(int n, std::uint64_t seed) {
  SynthConfig c;
  c.n_patients = n;
  c.seed = seed;
  c.post_images = false;
  return c;
}

const GroupKey kMerged{SiteScope::all, Aggregation::merged, Region::full};

radiomics::FeatureVector merged_features(const VoxelVolume& vol, const LesionSet& set) {
  return radiomics::extract_all(vol, *group_voi(set, kMerged, {}), {});
}

}  // namespace

TEST(Synth, SameSeedSameCohort) {
  const auto a = generate_cohort(small(10, 5));
  const auto b = generate_cohort(small(10, 5));
  ASSERT_EQ(a.patients.size(), b.patients.size());
  for (std::size_t i = 0; i < a.patients.size(); ++i) {
    EXPECT_EQ(a.patients[i].id, b.patients[i].id);
    EXPECT_EQ(a.patients[i].label, b.patients[i].label);
    EXPECT_EQ(a.patients[i].pre.volume.data, b.patients[i].pre.volume.data);
    ASSERT_EQ(a.patients[i].pre.lesions.lesions.size(), b.patients[i].pre.lesions.lesions.size());
    for (std::size_t l = 0; l < a.patients[i].pre.lesions.lesions.size(); ++l) {
      EXPECT_EQ(a.patients[i].pre.lesions.lesions[l].mask.bits, b.patients[i].pre.lesions.lesions[l].mask.bits);
    }
  }
  const auto c = generate_cohort(small(10, 6));
  EXPECT_NE(a.patients[0].pre.volume.data, c.patients[0].pre.volume.data);
}

TEST(Synth, ClassBalanceAndLabelAgreement) {
  for (double frac : {0.5, 0.3, 0.62}) {
    auto cfg = small(37, 8);
    cfg.positive_fraction = frac;
    const auto c = generate_cohort(cfg);
    int pos = 0;
    for (const auto& p : c.patients) {
      pos += p.label;
      EXPECT_EQ(derive_crs(p.crs).positive(), p.label == 1) << p.id;
      EXPECT_EQ(derive_recist(p.recist).positive(), p.label == 1) << p.id;
      EXPECT_EQ(derive_diar(p.pre.sld_mm, p.post.sld_mm).positive(), p.label == 1) << p.id;
      double pre = 0.0, post = 0.0;
      for (const auto& l : p.pre.lesions.lesions) pre += static_cast<double>(l.mask.count()) * p.pre.lesions.grid.voxel_volume();
      for (const auto& l : p.post.lesions.lesions) post += static_cast<double>(l.mask.count()) * p.post.lesions.grid.voxel_volume();
      EXPECT_EQ(derive_volr(pre, post).positive(), p.label == 1) << p.id;
    }
    EXPECT_LE(std::abs(pos - frac * 37.0), 1.0) << frac;
  }
}

TEST(Synth, WrittenCohortLoadsBack) {
  testing_support::TempDir dir("synth");
  auto cfg = small(10, 9);
  cfg.post_images = true;
  const auto c = generate_cohort(cfg);
  write_cohort(c, dir.path());
  const auto m = load_manifest(dir / "manifest.csv");
  EXPECT_EQ(m.rows.size(), 20u);
  for (const auto& row : m.rows) {
    const auto [vol, les] = load_pair(row.volume_path, row.mask_path);
    EXPECT_EQ(vol.grid.dims, les.grid.dims);
    EXPECT_FALSE(les.lesions.empty());
  }
  const auto& p0 = c.patients[0];
  const auto back = load_volume(dir / (p0.id + "_pre.mvol"));
  EXPECT_EQ(back.data, p0.pre.volume.data);
}

TEST(Synth, InfeasibleGeometryIsAConfigError) {
  auto cfg = small(20, 1);
  cfg.radius_min_mm = 80.0;
  cfg.radius_max_mm = 90.0;
  EXPECT_THROW(generate_cohort(cfg), ConfigError);
  cfg = small(20, 1);
  cfg.radius_min_mm = 2.0;  // below 3 voxels
  EXPECT_THROW(generate_cohort(cfg), ConfigError);
  cfg = small(8, 1);  // 4 per class
  EXPECT_THROW(generate_cohort(cfg), ConfigError);
}

TEST(Synth, PlantedGrainSeparatesClassesByGlcmContrast) {
  const auto c = generate_cohort(small(100, 11));
  std::vector<double> contrast;
  stats::Labels y;
  for (const auto& p : c.patients) {
    contrast.push_back(merged_features(p.pre.volume, p.pre.lesions)["glcm.Contrast"]);
    y.push_back(p.label);
  }
  const double a = stats::auc(contrast, y);
  EXPECT_GE(std::max(a, 1.0 - a), 0.85);
  EXPECT_GE(a, 0.85);  // fine grain (responders) means higher contrast
}

TEST(Synth, FragileFeatureLosesAgreementUnderPerturbation) {
  const auto c = generate_cohort(small(30, 12));
  PerturbConfig pc;
  pc.seed = 77;
  const auto& cat = radiomics::catalog();
  const auto col = [&](const std::string& f) {
    return static_cast<std::size_t>(std::find(cat.begin(), cat.end(), f) - cat.begin());
  };
  FeatureMatrix orig;
  std::vector<FeatureMatrix> reps(static_cast<std::size_t>(pc.n_replicates));
  const std::vector<std::string> names = {"all.merged.full.glcm.Contrast", "all.merged.full.firstorder.Maximum"};
  const std::size_t robust = col("glcm.Contrast"), fragile = col("firstorder.Maximum");
  orig.feature_names = names;
  orig.values.resize(static_cast<Eigen::Index>(c.patients.size()), 2);
  for (auto& r : reps) {
    r.feature_names = names;
    r.values.resize(static_cast<Eigen::Index>(c.patients.size()), 2);
  }
  for (std::size_t i = 0; i < c.patients.size(); ++i) {
    const auto& p = c.patients[i];
    const auto ii = static_cast<Eigen::Index>(i);
    const auto f0 = merged_features(p.pre.volume, p.pre.lesions);
    orig.patient_ids.push_back(p.id);
    orig.values(ii, 0) = f0.values[robust];
    orig.values(ii, 1) = f0.values[fragile];
    const auto sets = perturbed_lesions_all(p.pre.lesions, pc, p.id);
    for (std::size_t r = 0; r < sets.size(); ++r) {
      const auto f = merged_features(p.pre.volume, sets[r]);
      reps[r].patient_ids.push_back(p.id);
      reps[r].values(ii, 0) = f.values[robust];
      reps[r].values(ii, 1) = f.values[fragile];
    }
  }
  const auto prof = profile_features(orig, reps);
  EXPECT_GT(prof.features[0].icc, 0.9);
  EXPECT_LT(prof.features[1].icc, 0.7);
}
