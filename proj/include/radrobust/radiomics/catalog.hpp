#pragma once

// The fixed 102-feature catalog, in canonical extraction order. Versioned
// copy with formula references: docs/feature_catalog_v1.txt.

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace radrobust::radiomics {

inline constexpr std::string_view kCatalogVersion = "radrobust-catalog-1";

struct CatalogEntry {
  std::string_view family;
  std::string_view name;
};

inline constexpr std::array<std::string_view, 14> kShapeNames = {
    "VoxelVolume",      "SurfaceArea",      "SurfaceVolumeRatio",   "Sphericity",        "Compactness1",
    "Compactness2",     "SphericalDisproportion", "Maximum3DDiameter", "Maximum2DDiameterSlice",
    "MajorAxisLength",  "MinorAxisLength",  "LeastAxisLength",      "Elongation",        "Flatness"};

inline constexpr std::array<std::string_view, 18> kFirstOrderNames = {
    "Energy",  "TotalEnergy", "Entropy",  "Minimum",  "10Percentile",        "90Percentile",
    "Maximum", "Mean",        "Median",   "InterquartileRange", "Range",      "MeanAbsoluteDeviation",
    "RobustMeanAbsoluteDeviation", "RootMeanSquared", "Skewness", "Kurtosis", "Variance", "Uniformity"};

inline constexpr std::array<std::string_view, 24> kGlcmNames = {
    "Autocorrelation", "JointAverage",   "ClusterProminence", "ClusterShade",     "ClusterTendency",
    "Contrast",        "Correlation",    "DifferenceAverage", "DifferenceEntropy", "DifferenceVariance",
    "JointEnergy",     "JointEntropy",   "Imc1",              "Imc2",             "Idm",
    "MCC",             "Idmn",           "Id",                "Idn",              "InverseVariance",
    "MaximumProbability", "SumAverage",  "SumEntropy",        "SumSquares"};

inline constexpr std::array<std::string_view, 16> kGlrlmNames = {
    "ShortRunEmphasis",          "LongRunEmphasis",
    "GrayLevelNonUniformity",    "GrayLevelNonUniformityNormalized",
    "RunLengthNonUniformity",    "RunLengthNonUniformityNormalized",
    "RunPercentage",             "GrayLevelVariance",
    "RunVariance",               "RunEntropy",
    "LowGrayLevelRunEmphasis",   "HighGrayLevelRunEmphasis",
    "ShortRunLowGrayLevelEmphasis", "ShortRunHighGrayLevelEmphasis",
    "LongRunLowGrayLevelEmphasis",  "LongRunHighGrayLevelEmphasis"};

inline constexpr std::array<std::string_view, 16> kGlszmNames = {
    "SmallAreaEmphasis",          "LargeAreaEmphasis",
    "GrayLevelNonUniformity",     "GrayLevelNonUniformityNormalized",
    "SizeZoneNonUniformity",      "SizeZoneNonUniformityNormalized",
    "ZonePercentage",             "GrayLevelVariance",
    "ZoneVariance",               "ZoneEntropy",
    "LowGrayLevelZoneEmphasis",   "HighGrayLevelZoneEmphasis",
    "SmallAreaLowGrayLevelEmphasis", "SmallAreaHighGrayLevelEmphasis",
    "LargeAreaLowGrayLevelEmphasis", "LargeAreaHighGrayLevelEmphasis"};

inline constexpr std::array<std::string_view, 14> kGldmNames = {
    "SmallDependenceEmphasis",  "LargeDependenceEmphasis",
    "GrayLevelNonUniformity",   "DependenceNonUniformity",
    "DependenceNonUniformityNormalized", "GrayLevelVariance",
    "DependenceVariance",       "DependenceEntropy",
    "LowGrayLevelEmphasis",     "HighGrayLevelEmphasis",
    "SmallDependenceLowGrayLevelEmphasis", "SmallDependenceHighGrayLevelEmphasis",
    "LargeDependenceLowGrayLevelEmphasis", "LargeDependenceHighGrayLevelEmphasis"};

/// "<family>.<feature>" names in canonical order (102 entries).
inline const std::vector<std::string>& catalog() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    auto add = [&](std::string_view fam, const auto& list) {
      for (auto n : list) out.push_back(std::string(fam) + "." + std::string(n));
    };
    add("shape", kShapeNames);
    add("firstorder", kFirstOrderNames);
    add("glcm", kGlcmNames);
    add("glrlm", kGlrlmNames);
    add("glszm", kGlszmNames);
    add("gldm", kGldmNames);
    return out;
  }();
  return names;
}

inline constexpr std::size_t kCatalogSize = 102;

inline std::string family_of(std::string_view catalog_name) {
  return std::string(catalog_name.substr(0, catalog_name.find('.')));
}

}  // namespace radrobust::radiomics
