#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "radrobust/radiomics/catalog.hpp"
#include "radrobust/radiomics/discretize.hpp"
#include "radrobust/radiomics/first_order.hpp"
#include "radrobust/radiomics/shape.hpp"
#include "radrobust/radiomics/texture.hpp"

namespace radrobust::radiomics {

enum class TextureFamily { glcm, glrlm, glszm, gldm };

struct FeatureVector {
  std::vector<std::string> names;  // catalog names, "<family>.<feature>"
  std::vector<double> values;
  std::vector<std::string> nan_reasons;  // one entry per NaN value: "<name>: <why>"

  std::size_t size() const { return names.size(); }
  double operator[](const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return values[i];
    }
    throw std::out_of_range("no feature " + name);
  }
};

inline std::vector<double> extract_first_order(const VoxelVolume& vol, const Voi& voi, const DiscretizationConfig& cfg) {
  const auto f = first_order_features(discretize(vol, voi, cfg));
  return {f.begin(), f.end()};
}

inline std::vector<double> extract_shape(const Voi& voi) {
  VoxelVolume dummy{voi.grid(), std::vector<float>(voi.grid().size(), 0.0f)};
  const auto f = shape_features(discretize(dummy, voi, DiscretizationConfig{}));
  return {f.begin(), f.end()};
}

inline std::vector<double> extract_texture(const VoxelVolume& vol, const Voi& voi, const DiscretizationConfig& cfg,
                                           TextureFamily family) {
  const auto roi = discretize(vol, voi, cfg);
  switch (family) {
    case TextureFamily::glcm: {
      const auto f = glcm_features(roi);
      return {f.begin(), f.end()};
    }
    case TextureFamily::glrlm: {
      const auto f = glrlm_features(roi);
      return {f.begin(), f.end()};
    }
    case TextureFamily::glszm: {
      const auto f = glszm_features(roi);
      return {f.begin(), f.end()};
    }
    case TextureFamily::gldm: {
      const auto f = gldm_features(roi);
      return {f.begin(), f.end()};
    }
  }
  return {};
}

/// All 102 catalog features of one VOI, in canonical order: 14 shape,
/// 18 first-order, 24 GLCM, 16 GLRLM, 16 GLSZM, 14 GLDM. Undefined values
/// (e.g. GLCM on a single voxel) are NaN and listed in nan_reasons.
inline FeatureVector extract_all(const VoxelVolume& vol, const Voi& voi, const DiscretizationConfig& cfg) {
  const RoiImage roi = discretize(vol, voi, cfg);
  FeatureVector fv;
  fv.names = catalog();
  fv.values.reserve(kCatalogSize);
  auto append = [&](const auto& arr) { fv.values.insert(fv.values.end(), arr.begin(), arr.end()); };
  append(shape_features(roi));
  append(first_order_features(roi));
  append(glcm_features(roi));
  append(glrlm_features(roi));
  append(glszm_features(roi));
  append(gldm_features(roi));
  for (std::size_t i = 0; i < fv.values.size(); ++i) {
    if (!std::isnan(fv.values[i])) continue;
    std::string why = "undefined for this VOI";
    if (fv.names[i].starts_with("glcm.")) why = "no voxel pair at distance 1";
    if (fv.names[i] == "shape.Elongation" || fv.names[i] == "shape.Flatness") why = "zero major axis";
    if (fv.names[i] == "firstorder.RobustMeanAbsoluteDeviation") why = "no value between the 10th and 90th percentile";
    fv.nan_reasons.push_back(fv.names[i] + ": " + why);
  }
  return fv;
}

}  // namespace radrobust::radiomics
