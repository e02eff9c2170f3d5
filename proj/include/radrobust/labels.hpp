#pragma once

// Binary response labels from volumes, diameters, histopathology and RECIST.

#include <optional>
#include <string>

#include "radrobust/error.hpp"
#include "radrobust/manifest.hpp"
#include "radrobust/text.hpp"

namespace radrobust {

enum class ResponseMetric { CRS, RECIST, VolR, DiaR };

inline std::string to_string(ResponseMetric m) {
  switch (m) {
    case ResponseMetric::CRS: return "CRS";
    case ResponseMetric::RECIST: return "RECIST";
    case ResponseMetric::VolR: return "VolR";
    case ResponseMetric::DiaR: return "DiaR";
  }
  return "?";
}

inline std::optional<ResponseMetric> parse_metric(std::string_view s) {
  if (s == "CRS") return ResponseMetric::CRS;
  if (s == "RECIST") return ResponseMetric::RECIST;
  if (s == "VolR") return ResponseMetric::VolR;
  if (s == "DiaR") return ResponseMetric::DiaR;
  return std::nullopt;
}

enum class Response { non_response = 0, response = 1 };

struct ResponseLabel {
  ResponseMetric metric = ResponseMetric::CRS;
  Response value = Response::non_response;
  std::string trace;

  bool positive() const { return value == Response::response; }
};

inline constexpr double kVolumeResponsePercent = 65.0;
inline constexpr double kDiameterResponsePercent = 30.0;

inline ResponseLabel derive_volr(double pre_vol_mm3, double post_vol_mm3) {
  if (!(pre_vol_mm3 > 0.0)) throw DataError("undefined-label", "VolR needs a positive pre-treatment volume");
  if (post_vol_mm3 < 0.0) throw DataError("undefined-label", "VolR needs a nonnegative post-treatment volume");
  const double red = 100.0 * (pre_vol_mm3 - post_vol_mm3) / pre_vol_mm3;
  return {ResponseMetric::VolR, red > kVolumeResponsePercent ? Response::response : Response::non_response,
          "volume " + text::format_double(pre_vol_mm3) + " -> " + text::format_double(post_vol_mm3) +
              " mm3, reduction " + text::format_double(red) + "%"};
}

inline ResponseLabel derive_diar(std::optional<double> sld_pre_mm, std::optional<double> sld_post_mm) {
  if (!sld_pre_mm || !sld_post_mm) throw DataError("label-unavailable", "DiaR needs SLD at both timepoints");
  if (!(*sld_pre_mm > 0.0)) throw DataError("undefined-label", "DiaR needs a positive pre-treatment SLD");
  const double dec = 100.0 * (*sld_pre_mm - *sld_post_mm) / *sld_pre_mm;
  return {ResponseMetric::DiaR, dec > kDiameterResponsePercent ? Response::response : Response::non_response,
          "SLD " + text::format_double(*sld_pre_mm) + " -> " + text::format_double(*sld_post_mm) + " mm, decrease " +
              text::format_double(dec) + "%"};
}

inline ResponseLabel derive_crs(int crs) {
  if (crs < 1 || crs > 3) throw range_error("CRS must be 1..3, got " + std::to_string(crs));
  return {ResponseMetric::CRS, crs == 3 ? Response::response : Response::non_response, "CRS " + std::to_string(crs)};
}

inline ResponseLabel derive_recist(Recist r) {
  const bool resp = r == Recist::CR || r == Recist::PR;
  return {ResponseMetric::RECIST, resp ? Response::response : Response::non_response, "RECIST " + to_string(r)};
}

}  // namespace radrobust
