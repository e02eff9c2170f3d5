#include <gtest/gtest.h>

#include <cstring>
#include <sstream>

#include "radrobust/feature_matrix.hpp"
#include "radrobust/manifest.hpp"
#include "radrobust/rng.hpp"
#include "radrobust/volume.hpp"
#include "test_support.hpp"

using namespace radrobust;
using testing_support::TempDir;

namespace {

std::string mvol_bytes(const std::string& spacing, const std::vector<float>& data, const std::string& dims = "2 2 1") {
  std::string s = "MVOL 1\ndims " + dims + "\nspacing " + spacing + "\norigin 0 0 0\ndata float32 le\n";
  std::string payload(data.size() * sizeof(float), '\0');
  std::memcpy(payload.data(), data.data(), payload.size());
  return s + payload;
}

template <class E, class F>
std::string error_kind(F&& f) {
  try {
    f();
  } catch (const E& e) {
    return e.kind();
  }
  return "<none>";
}

VoxelVolume random_volume(std::uint64_t seed, int n) {
  Rng rng(seed);
  VoxelVolume v;
  v.grid.dims = {n, n, n};
  v.grid.spacing = {0.7, 0.8, 2.5};
  v.grid.origin = {-12.5, 3.0, 100.0};
  v.data.resize(v.grid.size());
  for (auto& x : v.data) x = static_cast<float>(-1000.0 + 2000.0 * rng.uniform());
  return v;
}

}  // namespace

TEST(Volume, TwoByTwoPayloadParses) {
  std::istringstream in(mvol_bytes("1 1 1", {0, 1, 2, 3}));
  const auto v = read_volume(in);
  EXPECT_EQ(v.grid.dims, (Index3{2, 2, 1}));
  EXPECT_EQ(v.data, (std::vector<float>{0, 1, 2, 3}));
}

TEST(Volume, ZeroSpacingRejected) {
  std::istringstream in(mvol_bytes("0 1 1", {0, 1, 2, 3}));
  try {
    read_volume(in);
    FAIL() << "expected an error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("nonpositive spacing"), std::string::npos) << e.what();
  }
}

TEST(Volume, ShortPayloadIsTruncation) {
  std::istringstream in(mvol_bytes("1 1 1", {0, 1, 2}));
  EXPECT_EQ(error_kind<DataError>([&] { read_volume(in); }), "truncation");
}

TEST(Volume, MalformedHeaderNamesTheLine) {
  std::istringstream in("MVOL 1\ndims 2 2\nspacing 1 1 1\norigin 0 0 0\ndata float32 le\n");
  try {
    read_volume(in, "v.mvol");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.kind(), "format");
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Volume, FileRoundTripIsByteExact) {
  TempDir dir("vol");
  const auto p = dir / "a.mvol";
  write_volume(random_volume(7, 16), p);
  const auto original = testing_support::slurp(p);
  const auto q = dir / "b.mvol";
  write_volume(load_volume(p), q);
  EXPECT_EQ(testing_support::slurp(q), original);
  // Independent decode of the payload: header is 5 text lines, then float32 LE.
  const auto v = load_volume(p);
  std::size_t pos = 0;
  for (int i = 0; i < 5; ++i) pos = original.find('\n', pos) + 1;
  ASSERT_EQ(original.size() - pos, 16u * 16u * 16u * 4u);
  for (std::size_t i = 0; i < v.data.size(); i += 97) {
    float f;
    std::memcpy(&f, original.data() + pos + 4 * i, 4);
    EXPECT_EQ(f, v.data[i]);
  }
}

TEST(Lesions, RoundTripAndGeometryMismatch) {
  TempDir dir("les");
  VoxelVolume vol = random_volume(3, 6);
  LesionSet set;
  set.grid = vol.grid;
  for (int k = 0; k < 2; ++k) {
    Lesion l{"L" + std::to_string(k), k == 0 ? Site::omentum : Site::pelvis, Mask(vol.grid)};
    for (int i = 0; i < 5; ++i) l.mask.bits[vol.grid.index(i, k * 3, 2)] = 1;
    set.lesions.push_back(l);
  }
  write_volume(vol, dir / "v.mvol");
  write_lesions(set, dir / "m.mmask");
  const auto [v2, s2] = load_pair(dir / "v.mvol", dir / "m.mmask");
  ASSERT_EQ(s2.lesions.size(), 2u);
  EXPECT_EQ(s2.lesions[1].id, "L1");
  EXPECT_EQ(s2.lesions[1].site, Site::pelvis);
  EXPECT_EQ(s2.lesions[0].mask, set.lesions[0].mask);

  VoxelVolume other = random_volume(4, 7);
  write_volume(other, dir / "w.mvol");
  EXPECT_EQ(error_kind<DataError>([&] { load_pair(dir / "w.mvol", dir / "m.mmask"); }), "geometry");
}

TEST(Lesions, EmptyMaskRejected) {
  LesionSet set;
  set.grid.dims = {2, 2, 2};
  set.lesions.push_back({"A", Site::other, Mask(set.grid)});
  EXPECT_THROW(set.validate(), DataError);
}

TEST(Manifest, SingleRowParsesLabels) {
  TempDir dir("man");
  std::istringstream in(std::string(CohortManifest::header) + "\nP1,pre,v.mvol,m.mmask,3,PR,120.0\n");
  const auto m = parse_manifest(in, dir.path(), false);
  ASSERT_EQ(m.rows.size(), 1u);
  EXPECT_EQ(m.rows[0].crs, 3);
  EXPECT_EQ(m.rows[0].recist, Recist::PR);
  EXPECT_DOUBLE_EQ(*m.rows[0].sld_mm, 120.0);
  EXPECT_EQ(m.rows[0].volume_path, dir.path() / "v.mvol");
}

TEST(Manifest, DuplicateKeyRejected) {
  std::istringstream in(std::string(CohortManifest::header) + "\nP1,pre,v,m,,,\nP1,pre,v2,m2,,,\n");
  EXPECT_EQ(error_kind<DataError>([&] { parse_manifest(in, ".", false); }), "duplicate-key");
}

TEST(Manifest, CrsOutOfRangeRejected) {
  std::istringstream in(std::string(CohortManifest::header) + "\nP1,pre,v,m,4,,\n");
  EXPECT_EQ(error_kind<DataError>([&] { parse_manifest(in, ".", false); }), "range");
}

TEST(Manifest, MissingFileDetected) {
  TempDir dir("man2");
  testing_support::spit(dir / "manifest.csv", std::string(CohortManifest::header) + "\nP1,pre,v,m,,,\n");
  EXPECT_THROW(load_manifest(dir / "manifest.csv"), DataError);
}

TEST(Manifest, FivePatientsTwoTimepointsGiveTenRows) {
  std::string text(CohortManifest::header);
  text += "\n";
  std::size_t expected = 0;
  for (int p = 0; p < 5; ++p) {
    for (const char* t : {"pre", "post"}) {
      text += "P" + std::to_string(p) + "," + t + ",v" + std::to_string(p) + t + ",m,," + ",\n";
      ++expected;
    }
  }
  std::istringstream in(text);
  const auto m = parse_manifest(in, ".", false);
  EXPECT_EQ(m.rows.size(), expected);
  EXPECT_EQ(m.patients().size(), 5u);
  EXPECT_EQ(m.patients().front(), "P0");
}

TEST(Manifest, WriteReadRoundTrip) {
  TempDir dir("man3");
  CohortManifest m;
  m.rows.push_back({"A", Timepoint::pre, dir / "a.mvol", dir / "a.mmask", 2, Recist::SD, 33.5});
  m.rows.push_back({"A", Timepoint::post, dir / "b.mvol", dir / "b.mmask", std::nullopt, std::nullopt, 20.25});
  write_manifest(m, dir / "manifest.csv");
  const auto r = load_manifest(dir / "manifest.csv", false);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[1].volume_path, dir / "b.mvol");
  EXPECT_EQ(r.crs("A"), 2);
  EXPECT_EQ(r.sld("A", Timepoint::post), 20.25);
  EXPECT_FALSE(r.rows[1].crs.has_value());
}

TEST(FeatureMatrixIo, SingleCell) {
  FeatureMatrix m;
  m.feature_names = {"all.merged.full.firstorder.Mean"};
  m.patient_ids = {"P1"};
  m.values = Eigen::MatrixXd::Constant(1, 1, 0.5);
  std::ostringstream out;
  write_feature_matrix(m, out);
  EXPECT_EQ(out.str(), "patient_id,all.merged.full.firstorder.Mean\nP1,0.5\n");
  std::istringstream in(out.str());
  const auto r = read_feature_matrix(in);
  EXPECT_EQ(r.feature_names, m.feature_names);
  EXPECT_EQ(r.values(0, 0), 0.5);
}

TEST(FeatureMatrixIo, RandomMatrixRoundTrip) {
  Rng rng(99);
  FeatureMatrix m;
  for (int j = 0; j < 102; ++j) m.feature_names.push_back("pelvis.largest.rim.fam.f" + std::to_string(j));
  m.patient_ids = {"a", "b", "c"};
  m.values.resize(3, 102);
  for (Eigen::Index i = 0; i < m.values.size(); ++i) {
    m.values.data()[i] = (rng.uniform() - 0.5) * std::pow(10.0, static_cast<double>(rng.index(20)) - 10.0);
  }
  std::ostringstream out;
  write_feature_matrix(m, out);
  std::istringstream in(out.str());
  const auto r = read_feature_matrix(in);
  ASSERT_EQ(r.values.rows(), 3);
  for (Eigen::Index i = 0; i < m.values.size(); ++i) {
    const double a = m.values.data()[i], b = r.values.data()[i];
    EXPECT_LE(std::abs(a - b), 1e-10 * std::abs(a)) << i;
  }
  EXPECT_EQ(r.patient_ids, m.patient_ids);
}

TEST(FeatureMatrixIo, ColumnProvenanceSurvives) {
  FeatureMatrix m;
  m.feature_names = {"omentum.merged.full.glcm.Contrast", "all.largest.rim.shape.Sphericity"};
  m.patient_ids = {"X"};
  m.values = Eigen::MatrixXd::Ones(1, 2);
  std::ostringstream out;
  write_feature_matrix(m, out);
  std::istringstream in(out.str());
  const auto meta = read_feature_matrix(in).meta();
  EXPECT_EQ(meta[0].site_scope, SiteScope::omentum);
  EXPECT_EQ(meta[0].aggregation, Aggregation::merged);
  EXPECT_EQ(meta[0].region, Region::full);
  EXPECT_EQ(meta[0].catalog_name(), "glcm.Contrast");
  EXPECT_EQ(meta[1].region, Region::rim);
  EXPECT_EQ(meta[1].aggregation, Aggregation::largest);
}

TEST(FeatureMatrixIo, DuplicateColumnsAreSchemaError) {
  std::istringstream in("patient_id,all.merged.full.a.b,all.merged.full.a.b\nP,1,2\n");
  EXPECT_EQ(error_kind<DataError>([&] { read_feature_matrix(in); }), "schema");
}

TEST(FeatureMatrixIo, TooManyColumnsInGroup) {
  FeatureMatrix m;
  for (int j = 0; j < 103; ++j) m.feature_names.push_back("all.merged.full.f.x" + std::to_string(j));
  m.patient_ids = {"p"};
  m.values = Eigen::MatrixXd::Zero(1, 103);
  EXPECT_THROW(m.validate(), DataError);
}

TEST(FeatureMatrixIo, MedianImputationUsesReferenceRows) {
  Eigen::MatrixXd x(4, 1);
  x << 1.0, std::nan(""), 5.0, 100.0;
  const auto med = column_medians(x, {0, 1, 2});
  EXPECT_DOUBLE_EQ(med[0], 3.0);
  impute_nan(x, med);
  EXPECT_DOUBLE_EQ(x(1, 0), 3.0);
}
