#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "contour.hpp"
#include "errors.hpp"
#include "gaussian_gate.hpp"
#include "ingest.hpp"
#include "kmeans.hpp"

namespace wbcr {

/// Morphology descriptor used for plasma-cell gating.
struct MorphVector {
  double nc_ratio = 0.0;         // nucleus area / cytoplasm area
  double staining = 0.0;         // mean cytoplasm luminance / 255
  double centroid_offset = 0.0;  // |nucleus centroid - cell centroid| / equivalent radius

  Vec3 as_array() const { return {nc_ratio, staining, centroid_offset}; }
  friend bool operator==(const MorphVector&, const MorphVector&) = default;
};

inline MorphVector morph_vector(const CellSample& sample) {
  const NucleusSplit split = kmeans2_luminance(sample);
  const auto& c = split.clusters;
  if (c.low_count == 0 || c.high_count == 0) throw MorphologyError("degenerate segmentation");

  double cx = 0.0, cy = 0.0, nx = 0.0, ny = 0.0;
  const auto& mask = sample.mask;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      cx += x;
      cy += y;
      if (split.nucleus.at(x, y)) {
        nx += x;
        ny += y;
      }
    }
  }
  const double cell_area = static_cast<double>(c.low_count + c.high_count);
  const double nucleus_area = static_cast<double>(c.low_count);
  cx /= cell_area;
  cy /= cell_area;
  nx /= nucleus_area;
  ny /= nucleus_area;

  MorphVector v;
  v.nc_ratio = nucleus_area / static_cast<double>(c.high_count);
  v.staining = static_cast<double>(c.high_sum) / (255000.0 * static_cast<double>(c.high_count));
  v.centroid_offset = std::hypot(nx - cx, ny - cy) / std::sqrt(cell_area / std::numbers::pi);
  return v;
}

inline double mahalanobis(const GaussianGate& gate, const MorphVector& v) {
  return mahalanobis(gate, v.as_array());
}

/// Everything the feature dump reports for one cell. Fields stay empty when
/// the corresponding measurement fails; `error` says why.
struct CellFeatures {
  std::optional<MorphVector> morph;
  std::optional<double> spikiness;
  std::string error;
};

inline CellFeatures measure_cell(const CellSample& sample) {
  CellFeatures f;
  try {
    f.spikiness = mask_spikiness(sample.mask);
  } catch (const MorphologyError& e) {
    f.error = e.what();
  }
  try {
    f.morph = morph_vector(sample);
  } catch (const MorphologyError& e) {
    if (f.error.empty()) f.error = e.what();
  }
  return f;
}

}  // namespace wbcr
