#pragma once

// Feature matrices for whole cohorts: every requested (site scope,
// aggregation, region) group for every patient, on the original contours or
// on a perturbation replicate.

#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <string>
#include <vector>

#include "radrobust/evaluate.hpp"
#include "radrobust/feature_matrix.hpp"
#include "radrobust/log.hpp"
#include "radrobust/radiomics/extract.hpp"
#include "radrobust/roi_ops.hpp"
#include "radrobust/volume.hpp"

namespace radrobust {

struct RimConfig {
  double inner_mm = 3.0;
  double outer_mm = 3.0;
};

struct ExtractionPlan {
  std::vector<GroupKey> groups;
  radiomics::DiscretizationConfig discretization;
  RimConfig rim;
};

inline std::vector<std::string> column_names(const std::vector<GroupKey>& groups) {
  std::vector<std::string> out;
  for (const auto& g : groups) {
    for (const auto& f : radiomics::catalog()) out.push_back(g.str() + "." + f);
  }
  return out;
}

/// VOI of one group, or nothing when the patient has no lesion in scope.
inline std::optional<Voi> group_voi(const LesionSet& set, const GroupKey& g, const RimConfig& rim) {
  bool any = false;
  for (const auto& l : set.lesions) any = any || in_scope(l.site, g.scope);
  if (!any) return std::nullopt;
  Voi v = g.aggregation == Aggregation::largest ? select_largest(set, g.scope) : merge_lesions(set, g.scope);
  if (g.region == Region::rim) v = make_rim(v, rim.inner_mm, rim.outer_mm);
  return v;
}

/// One patient's row over all groups; groups without a lesion are NaN.
inline std::vector<double> patient_features(const VoxelVolume& vol, const LesionSet& set, const ExtractionPlan& plan,
                                            const std::string& patient) {
  std::vector<double> row;
  row.reserve(plan.groups.size() * radiomics::kCatalogSize);
  for (const auto& g : plan.groups) {
    std::optional<Voi> voi;
    try {
      voi = group_voi(set, g, plan.rim);
    } catch (const ComputeError& e) {
      log::warn("patient " + patient + ", group " + g.str() + ": " + e.what());
    }
    if (!voi) {
      row.insert(row.end(), radiomics::kCatalogSize, std::nan(""));
      continue;
    }
    const auto fv = radiomics::extract_all(vol, *voi, plan.discretization);
    for (const auto& why : fv.nan_reasons) log::debug("patient " + patient + ", " + g.str() + ": " + why);
    row.insert(row.end(), fv.values.begin(), fv.values.end());
  }
  return row;
}

/// Replicate r of a patient's lesions; the per-patient seed keeps replicates
/// of different patients independent.
inline LesionSet perturbed_lesions(const LesionSet& set, const PerturbConfig& cfg, const std::string& patient, int r) {
  PerturbConfig c = cfg;
  c.seed = derive_seed(cfg.seed, patient);
  return perturb_lesions(set, c, r);
}

/// All replicates of a patient's lesions; element r equals
/// perturbed_lesions(set, cfg, patient, r).
inline std::vector<LesionSet> perturbed_lesions_all(const LesionSet& set, const PerturbConfig& cfg,
                                                    const std::string& patient) {
  PerturbConfig c = cfg;
  c.seed = derive_seed(cfg.seed, patient);
  return perturb_lesions_all(set, c);
}

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads. Results must be
/// written to preallocated slots so output order never depends on timing.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto threads = static_cast<std::size_t>(std::max(1, jobs));
  if (threads == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, n); ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace radrobust
