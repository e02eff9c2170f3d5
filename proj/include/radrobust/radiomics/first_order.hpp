#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "radrobust/radiomics/catalog.hpp"
#include "radrobust/radiomics/discretize.hpp"

namespace radrobust::radiomics {

/// Linear-interpolated percentile of sorted data (numpy's default rule).
inline double percentile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return std::nan("");
  const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

/// The 18 first-order statistics, in kFirstOrderNames order. Entropy and
/// Uniformity use the discretized histogram; everything else uses raw HU.
inline std::array<double, 18> first_order_features(const RoiImage& roi) {
  const auto& v = roi.values;
  const double n = static_cast<double>(v.size());
  std::vector<double> s = v;
  std::sort(s.begin(), s.end());

  double sum = 0.0, sumsq = 0.0;
  for (double x : v) {
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0, mad = 0.0;
  for (double x : v) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
    mad += std::abs(d);
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  mad /= n;

  const double p10 = percentile_sorted(s, 10.0);
  const double p90 = percentile_sorted(s, 90.0);
  double rsum = 0.0;
  std::size_t rn = 0;
  for (double x : v) {
    if (x >= p10 && x <= p90) {
      rsum += x;
      ++rn;
    }
  }
  const double rmean = rsum / static_cast<double>(rn);
  double rmad = 0.0;
  for (double x : v) {
    if (x >= p10 && x <= p90) rmad += std::abs(x - rmean);
  }
  rmad /= static_cast<double>(rn);

  std::vector<double> hist(static_cast<std::size_t>(roi.n_levels) + 1, 0.0);
  for (int l : roi.value_levels) hist[static_cast<std::size_t>(l)] += 1.0;
  double entropy = 0.0, uniformity = 0.0;
  for (std::size_t l = 1; l < hist.size(); ++l) {
    const double p = hist[l] / n;
    if (p > 0.0) entropy -= p * std::log2(p);
    uniformity += p * p;
  }

  return {
      sumsq,                                       // Energy
      sumsq * roi.grid.voxel_volume(),             // TotalEnergy
      entropy,                                     // Entropy
      s.front(),                                   // Minimum
      p10,                                         // 10Percentile
      p90,                                         // 90Percentile
      s.back(),                                    // Maximum
      mean,                                        // Mean
      percentile_sorted(s, 50.0),                  // Median
      percentile_sorted(s, 75.0) - percentile_sorted(s, 25.0),  // InterquartileRange
      s.back() - s.front(),                        // Range
      mad,                                         // MeanAbsoluteDeviation
      rmad,                                        // RobustMeanAbsoluteDeviation
      std::sqrt(sumsq / n),                        // RootMeanSquared
      m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0,     // Skewness
      m2 > 0.0 ? m4 / (m2 * m2) : 0.0,             // Kurtosis
      m2,                                          // Variance
      uniformity,                                  // Uniformity
  };
}

}  // namespace radrobust::radiomics
