#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "errors.hpp"
#include "image.hpp"
#include "ingest.hpp"

namespace wbcr {

/// Result of splitting 1-D values into a low and a high cluster. Values are
/// in the caller's integer units; the low cluster holds every value
/// <= `low_max`.
struct TwoMeansSplit {
  std::int64_t low_max = 0;
  std::int64_t low_count = 0, high_count = 0;
  std::int64_t low_sum = 0, high_sum = 0;
  int iterations = 0;   // Lloyd iterations until assignments were stable
  bool refined = false; // the threshold sweep found a strictly better split

  double low_mean() const { return static_cast<double>(low_sum) / static_cast<double>(low_count); }
  double high_mean() const {
    return static_cast<double>(high_sum) / static_cast<double>(high_count);
  }
};

namespace detail {

struct ValueRun {
  std::int64_t value;
  std::int64_t count;
};

// Between-cluster term of a split after `j` runs, as an exact fraction
// (S0*N - S*n0)^2 / (n0*n1). Larger is better.
struct SplitScore {
  __int128 num;
  __int128 den;
  long double approx;
};

inline SplitScore split_score(std::int64_t s0, std::int64_t n0, std::int64_t s, std::int64_t n,
                              bool exact) {
  const std::int64_t n1 = n - n0;
  const __int128 x = static_cast<__int128>(s0) * n - static_cast<__int128>(s) * n0;
  const long double lx = static_cast<long double>(x);
  const long double approx = lx * lx / (static_cast<long double>(n0) * static_cast<long double>(n1));
  if (!exact) return {0, 1, approx};
  return {x * x, static_cast<__int128>(n0) * n1, approx};
}

// a > b. Exact while every value count stays <= 16384 (products fit in 128
// bits), otherwise long double with a relative margin.
inline bool score_greater(const SplitScore& a, const SplitScore& b, bool exact) {
  if (exact) return a.num * b.den > b.num * a.den;
  return a.approx > b.approx * (1.0L + 1e-15L);
}

}  // namespace detail

/// Two-cluster k-means on 1-D integer values.
///
/// Lloyd's algorithm from centroids at the minimum and maximum value; ties in
/// assignment go to the lower centroid; at most 100 iterations. Lloyd's can
/// settle in a local optimum, so the converged split is then compared against
/// every threshold split and replaced only by a strictly better one.
inline TwoMeansSplit two_means_1d(std::span<const std::int64_t> values) {
  if (values.size() < 2) throw MorphologyError("need at least 2 foreground pixels");
  std::map<std::int64_t, std::int64_t> hist;
  for (auto v : values) ++hist[v];
  if (hist.size() < 2) throw MorphologyError("degenerate luminance distribution");

  std::vector<detail::ValueRun> runs;
  runs.reserve(hist.size());
  for (auto [v, c] : hist) runs.push_back({v, c});

  std::int64_t total_sum = 0, total_n = 0;
  for (const auto& r : runs) {
    total_sum += r.value * r.count;
    total_n += r.count;
  }

  // Lloyd's. Centroids are kept as exact fractions sum/count.
  std::int64_t s0 = runs.front().value, n0 = 1;
  std::int64_t s1 = runs.back().value, n1 = 1;
  std::size_t split = 0;  // number of runs in the low cluster; 0 = not yet assigned
  int iterations = 0;
  for (; iterations < 100; ++iterations) {
    std::size_t j = 0;
    for (; j < runs.size(); ++j) {
      const __int128 v = runs[j].value;
      __int128 d0 = v * n0 - s0;
      __int128 d1 = v * n1 - s1;
      if (d0 < 0) d0 = -d0;
      if (d1 < 0) d1 = -d1;
      if (d0 * n1 > d1 * n0) break;  // strictly closer to the high centroid
    }
    if (j == split) break;
    split = j;
    s0 = n0 = s1 = n1 = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      if (i < split) {
        s0 += runs[i].value * runs[i].count;
        n0 += runs[i].count;
      } else {
        s1 += runs[i].value * runs[i].count;
        n1 += runs[i].count;
      }
    }
  }

  // Sweep every threshold; Lloyd's split wins ties.
  const bool exact = total_n <= 16384;
  std::size_t best = split;
  std::int64_t prefix_s = 0, prefix_n = 0;
  std::vector<detail::SplitScore> scores(runs.size());
  for (std::size_t j = 1; j < runs.size(); ++j) {
    prefix_s += runs[j - 1].value * runs[j - 1].count;
    prefix_n += runs[j - 1].count;
    scores[j] = detail::split_score(prefix_s, prefix_n, total_sum, total_n, exact);
  }
  for (std::size_t j = 1; j < runs.size(); ++j) {
    if (detail::score_greater(scores[j], scores[best], exact)) best = j;
  }

  TwoMeansSplit out;
  out.iterations = iterations;
  out.refined = best != split;
  out.low_max = runs[best - 1].value;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (i < best) {
      out.low_sum += runs[i].value * runs[i].count;
      out.low_count += runs[i].count;
    } else {
      out.high_sum += runs[i].value * runs[i].count;
      out.high_count += runs[i].count;
    }
  }
  return out;
}

/// Nucleus/cytoplasm segmentation of a cell by 2-means on luminance.
struct NucleusSplit {
  BinaryMask nucleus;    // darker cluster
  BinaryMask cytoplasm;  // brighter cluster
  double nucleus_luminance = 0.0;    // cluster means, 0..255
  double cytoplasm_luminance = 0.0;
  TwoMeansSplit clusters;  // in milli-luminance units
};

inline NucleusSplit kmeans2_luminance(const CellSample& sample) {
  const auto& img = sample.pixels;
  const auto& mask = sample.mask;
  std::vector<std::int64_t> lum;
  lum.reserve(mask.count());
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(x, y)) lum.push_back(luminance_milli(img, x, y));
    }
  }
  NucleusSplit out;
  out.clusters = two_means_1d(lum);
  out.nucleus = BinaryMask(mask.width, mask.height);
  out.cytoplasm = BinaryMask(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      if (luminance_milli(img, x, y) <= out.clusters.low_max) {
        out.nucleus.set(x, y);
      } else {
        out.cytoplasm.set(x, y);
      }
    }
  }
  out.nucleus_luminance = out.clusters.low_mean() / 1000.0;
  out.cytoplasm_luminance = out.clusters.high_mean() / 1000.0;
  return out;
}

}  // namespace wbcr
