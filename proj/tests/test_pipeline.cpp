#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>

#include "radrobust/pipeline.hpp"
#include "test_support.hpp"

using namespace radrobust;
namespace fs = std::filesystem;

namespace {

nlohmann::json small_config() {
  return nlohmann::json::parse(R"({
    "train": "cohorts/train/manifest.csv",
    "test": "cohorts/test/manifest.csv",
    "out": "out",
    "seed": 5,
    "perturbation": {"n_replicates": 3},
    "outer_folds": 3,
    "selection": {"inner_folds": 3, "max_features": 5},
    "synth": {"n_train": 24, "n_test": 16}
  })");
}

int cli(const std::string& args) {
  const std::string cmd = std::string(RADROBUST_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// One full-grid run shared by the tests that only read its outputs.
class FullGrid : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    dir_ = new testing_support::TempDir("grid");
    config_ = new RunConfig(parse_run_config(small_config(), dir_->path()));
    report_ = new std::string(testing_support::slurp(pipeline::run(*config_)));
  }
  static void TearDownTestSuite() {
    delete report_;
    delete config_;
    delete dir_;
  }

  static testing_support::TempDir* dir_;
  static RunConfig* config_;
  static std::string* report_;
};

testing_support::TempDir* FullGrid::dir_ = nullptr;
RunConfig* FullGrid::config_ = nullptr;
std::string* FullGrid::report_ = nullptr;

}  // namespace

TEST(Config, DefaultsAndRelativePaths) {
  const auto c = parse_run_config(nlohmann::json::parse(R"({"train": "a/m.csv", "test": "/abs/t.csv"})"), "/base");
  EXPECT_EQ(c.train_manifest, fs::path("/base/a/m.csv"));
  EXPECT_EQ(c.test_manifest, fs::path("/abs/t.csv"));
  EXPECT_EQ(c.out_dir, fs::path("/base/radrobust-out"));
  EXPECT_NO_THROW(c.validate());
  // 4 metrics x 3 scopes x 2 aggregations.
  EXPECT_EQ(c.configurations().size(), 24u);
}

TEST(Config, UnknownKeysAndBadValuesRejected) {
  EXPECT_THROW(parse_run_config(nlohmann::json::parse(R"({"train": "a", "test": "b", "bogus": 1})"), "."),
               ConfigError);
  EXPECT_THROW(parse_run_config(nlohmann::json::parse(R"({"train": "a", "test": "b", "metrics": ["AUC"]})"), "."),
               ConfigError);
  EXPECT_THROW(parse_run_config(nlohmann::json::parse(R"({"train": "a", "test": "b", "seed": "x"})"), "."),
               ConfigError);
  EXPECT_THROW(
      parse_run_config(nlohmann::json::parse(R"({"train": "a", "test": "b", "perturbation": {"amp": 2}})"), "."),
      ConfigError);
  auto c = parse_run_config(nlohmann::json::parse(R"({"train": "a", "test": "b", "lda": {"shrinkage": 2}})"), ".");
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, RimGating) {
  auto parse = [](const char* s) { return parse_run_config(nlohmann::json::parse(s), "."); };
  // Rim needs the largest-lesion aggregation.
  EXPECT_THROW(parse(R"({"train":"a","test":"b","regions":["rim"],"aggregations":["merged"],"metrics":["CRS"]})")
                   .validate(),
               ConfigError);
  // Rim is CRS-only unless explicitly lifted.
  EXPECT_THROW(parse(R"({"train":"a","test":"b","regions":["rim"],"metrics":["VolR"]})").validate(), ConfigError);
  const auto lifted = parse(R"({"train":"a","test":"b","regions":["rim"],"metrics":["VolR"],"rim_all_metrics":true})");
  EXPECT_NO_THROW(lifted.validate());
  const auto mixed = parse(R"({"train":"a","test":"b","regions":["full","rim"],"metrics":["CRS","VolR"]})");
  ASSERT_NO_THROW(mixed.validate());
  for (const auto& k : mixed.configurations()) {
    if (k.group.region == Region::rim) {
      EXPECT_EQ(k.metric, ResponseMetric::CRS);
      EXPECT_EQ(k.group.aggregation, Aggregation::largest);
    }
  }
  // 2 metrics x 3 scopes x (largest, merged, largest-rim) minus VolR rims.
  EXPECT_EQ(mixed.configurations().size(), 2u * 3u * 2u + 3u);
}

TEST_F(FullGrid, ReportHasOneRowPerConfigurationAndRegimePlusBaseline) {
  const auto l = lines(*report_);
  ASSERT_EQ(l.size(), 1u + 24u * 5u);
  EXPECT_EQ(l[0], kReportHeader);
  std::size_t baselines = 0;
  for (std::size_t i = 1; i < l.size(); ++i) {
    const auto cells = text::split(l[i], ',');
    baselines += cells[4] == "none";
  }
  EXPECT_EQ(baselines, 24u);
}

TEST_F(FullGrid, RerunIsByteIdenticalAndCacheIsTransparent) {
  const auto again = testing_support::slurp(pipeline::run(*config_));
  EXPECT_EQ(again, *report_);
  fs::remove_all(dir_->path() / "out");
  const auto fresh = testing_support::slurp(pipeline::run(*config_));
  EXPECT_EQ(fresh, *report_);
}

TEST_F(FullGrid, ProfileReportCoversEveryColumn) {
  const auto text = testing_support::slurp(dir_->path() / "out" / "profile" / "robustness.csv");
  const auto l = lines(text);
  EXPECT_EQ(l[0], "feature,icc,ci_lo,ci_hi,category");
  EXPECT_EQ(l.size(), 1u + 6u * radiomics::kCatalogSize);
}

TEST_F(FullGrid, FullyRobustSelectionRespectsThreshold) {
  const auto rows = pipeline::select(*config_, 1, {Regime::fully_robust});
  int ok = 0;
  for (const auto& r : rows) {
    if (r.status != "ok") continue;
    ++ok;
    if (!r.result.selected.empty()) {
      EXPECT_GT(r.min_icc, 0.8);
    }
  }
  EXPECT_GT(ok, 0);
  const auto csv = testing_support::slurp(dir_->path() / "out" / "selection" / "selections.csv");
  EXPECT_EQ(lines(csv).size(), 1u + rows.size());
}

TEST(Stages, MissingUpstreamArtifactNamesProducer) {
  testing_support::TempDir dir("deps");
  const auto c = parse_run_config(small_config(), dir.path());
  try {
    pipeline::profile(c);
    FAIL() << "profile ran without extraction outputs";
  } catch (const DataError& e) {
    EXPECT_EQ(e.kind(), "dependency");
    EXPECT_NE(std::string(e.what()).find("radrobust extract"), std::string::npos);
  }
  try {
    pipeline::extract(c);
    FAIL() << "extract ran without cohorts";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("gen-synth"), std::string::npos);
  }
  EXPECT_THROW(pipeline::report(c), DataError);
}

TEST(Cli, ExitCodes) {
  testing_support::TempDir dir("cli");
  EXPECT_EQ(cli("--help"), 0);
  EXPECT_EQ(cli(""), 2);
  EXPECT_EQ(cli("run --config " + (dir / "absent.json").string()), 2);
  testing_support::spit(dir / "bad.json", R"({"train": "a/manifest.csv", "test": "b/manifest.csv", "bogus": 1})");
  EXPECT_EQ(cli("extract --config " + (dir / "bad.json").string()), 2);
  testing_support::spit(dir / "gate.json",
                        R"({"train": "a/manifest.csv", "test": "b/manifest.csv", "regions": ["rim"], "metrics": ["VolR"]})");
  EXPECT_EQ(cli("extract --config " + (dir / "gate.json").string()), 2);
  testing_support::spit(dir / "nodata.json", R"({"train": "a/manifest.csv", "test": "b/manifest.csv"})");
  EXPECT_EQ(cli("extract --config " + (dir / "nodata.json").string()), 3);
  EXPECT_EQ(cli("profile --config " + (dir / "nodata.json").string() + " --out " + (dir / "o").string()), 3);
}
