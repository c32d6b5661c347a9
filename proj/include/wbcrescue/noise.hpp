#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "image.hpp"

namespace wbcr {

/// Mean absolute difference between luminance and its 3x3 median (replicate
/// border), in 8-bit intensity units. High for impulse noise, near zero for
/// smooth content.
inline double noise_score(const RgbImage& img) {
  const int w = img.width, h = img.height;
  if (w < 1 || h < 1) throw ValidationError("noise_score: empty image");
  std::vector<std::int64_t> lum(img.pixel_count());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) lum[static_cast<std::size_t>(y) * w + x] = luminance_milli(img, x, y);
  }
  std::int64_t residual = 0;
  std::array<std::int64_t, 9> win{};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int k = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        const int yy = std::clamp(y + dy, 0, h - 1);
        for (int dx = -1; dx <= 1; ++dx) {
          const int xx = std::clamp(x + dx, 0, w - 1);
          win[k++] = lum[static_cast<std::size_t>(yy) * w + xx];
        }
      }
      std::nth_element(win.begin(), win.begin() + 4, win.end());
      const std::int64_t d = lum[static_cast<std::size_t>(y) * w + x] - win[4];
      residual += d < 0 ? -d : d;
    }
  }
  return static_cast<double>(residual) / (1000.0 * static_cast<double>(img.pixel_count()));
}

struct NoiseReport {
  std::string image_id;
  double residual = 0.0;
  bool is_noisy = false;
};

struct NoisePartition {
  std::vector<std::string> noisy;
  std::vector<std::string> clean;
};

/// Stable split on residual > threshold.
inline NoisePartition partition_by_noise(std::vector<NoiseReport>& reports, double threshold) {
  if (!(threshold >= 0.0)) throw ValidationError("noise threshold must be >= 0");
  NoisePartition out;
  for (auto& r : reports) {
    r.is_noisy = r.residual > threshold;
    (r.is_noisy ? out.noisy : out.clean).push_back(r.image_id);
  }
  return out;
}

struct NoiseInjection {
  RgbImage image;
  std::size_t corrupted = 0;
};

namespace detail {

// 53-bit uniform double in [0, 1); independent of the standard library's
// distribution implementations.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Salt-and-pepper corruption of whole pixels. Every pixel consumes exactly
/// two draws, so for a fixed seed the corrupted set only grows with density.
inline NoiseInjection inject_salt_pepper(const RgbImage& img, double density,
                                         double salt_ratio, std::uint64_t seed) {
  if (!(density >= 0.0 && density <= 1.0)) throw ValidationError("density must lie in [0,1]");
  if (!(salt_ratio >= 0.0 && salt_ratio <= 1.0)) {
    throw ValidationError("salt ratio must lie in [0,1]");
  }
  std::mt19937_64 rng(seed);
  NoiseInjection out{img, 0};
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const double hit = detail::unit_uniform(rng);
    const double salt = detail::unit_uniform(rng);
    if (hit < density) {
      const std::uint8_t v = salt < salt_ratio ? 255 : 0;
      out.image.rgb[3 * i] = out.image.rgb[3 * i + 1] = out.image.rgb[3 * i + 2] = v;
      ++out.corrupted;
    }
  }
  return out;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for one image of a corpus, independent of processing order.
inline std::uint64_t per_image_seed(std::uint64_t seed, std::string_view image_id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : image_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(seed ^ h);
}

}  // namespace wbcr
