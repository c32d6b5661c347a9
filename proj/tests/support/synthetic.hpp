#pragma once

// Raster and probability fixtures shared by the unit and acceptance suites.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "wbcrescue/image.hpp"
#include "wbcrescue/ingest.hpp"

namespace wbcr::synth {

inline BinaryMask disc_mask(int w, int h, double cx, double cy, double r) {
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m.set(x, y);
    }
  }
  return m;
}

inline BinaryMask rect_mask(int w, int h, int x0, int y0, int rw, int rh) {
  BinaryMask m(w, h);
  for (int y = y0; y < y0 + rh; ++y) {
    for (int x = x0; x < x0 + rw; ++x) m.set(x, y);
  }
  return m;
}

/// Star-shaped blob with radius base + amplitude * cos(spikes * theta).
inline BinaryMask star_mask(int w, int h, double cx, double cy, double base, double amplitude,
                            int spikes, double phase = 0.0) {
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double r = base + amplitude * std::cos(spikes * std::atan2(dy, dx) + phase);
      if (dx * dx + dy * dy <= r * r) m.set(x, y);
    }
  }
  return m;
}

inline BinaryMask mirror_x(const BinaryMask& m) {
  BinaryMask out(m.width, m.height);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) out.set(m.width - 1 - x, y, m.at(x, y));
  }
  return out;
}

inline BinaryMask mirror_y(const BinaryMask& m) {
  BinaryMask out(m.width, m.height);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) out.set(x, m.height - 1 - y, m.at(x, y));
  }
  return out;
}

inline BinaryMask translate(const BinaryMask& m, int dx, int dy, int w, int h) {
  BinaryMask out(w, h);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (m.at(x, y)) out.set(x + dx, y + dy);
    }
  }
  return out;
}

/// Gray cell: background outside the mask, `nucleus_gray` inside the nucleus
/// disc, `cyto_gray` elsewhere in the mask.
inline RgbImage cell_image(const BinaryMask& mask, double ncx, double ncy, double nr,
                           std::uint8_t nucleus_gray, std::uint8_t cyto_gray,
                           std::uint8_t background = 250) {
  RgbImage img(mask.width, mask.height, background);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      const bool in_nucleus = (x - ncx) * (x - ncx) + (y - ncy) * (y - ncy) <= nr * nr;
      const std::uint8_t v = in_nucleus ? nucleus_gray : cyto_gray;
      img.set(x, y, v, v, v);
    }
  }
  return img;
}

inline RgbImage upsample2(const RgbImage& img) {
  RgbImage out(img.width * 2, img.height * 2);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const auto* p = img.px(x / 2, y / 2);
      out.set(x, y, p[0], p[1], p[2]);
    }
  }
  return out;
}

inline BinaryMask upsample2(const BinaryMask& m) {
  BinaryMask out(m.width * 2, m.height * 2);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) out.set(x, y, m.at(x / 2, y / 2));
  }
  return out;
}

/// Random point on the probability simplex (normalised exponentials).
inline std::vector<double> random_probs(std::mt19937_64& rng, std::size_t k) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(k);
  double s = 0.0;
  for (auto& x : v) s += (x = e(rng));
  for (auto& x : v) x /= s;
  return v;
}

}  // namespace wbcr::synth
