#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "errors.hpp"

namespace wbcr {

/// Interleaved 8-bit RGB raster, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::uint8_t* px(int x, int y) { return &rgb[(static_cast<std::size_t>(y) * width + x) * 3]; }
  const std::uint8_t* px(int x, int y) const {
    return &rgb[(static_cast<std::size_t>(y) * width + x) * 3];
  }
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    auto* p = px(x, y);
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }
  bool is_gray() const {
    for (std::size_t i = 0; i < rgb.size(); i += 3) {
      if (rgb[i] != rgb[i + 1] || rgb[i] != rgb[i + 2]) return false;
    }
    return true;
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Binary foreground mask; cells hold exactly 0 or 1.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height && at(x, y);
  }
  void set(int x, int y, bool v = true) {
    bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
  }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b;
    return n;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// Exact luminance 0.299R + 0.587G + 0.114B, scaled by 1000 so it stays an
/// integer in [0, 255000].
inline constexpr std::int64_t luminance_milli(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return 299 * std::int64_t{r} + 587 * std::int64_t{g} + 114 * std::int64_t{b};
}

inline std::int64_t luminance_milli(const RgbImage& img, int x, int y) {
  const auto* p = img.px(x, y);
  return luminance_milli(p[0], p[1], p[2]);
}

namespace netpbm {

/// Decoded binary netpbm raster: channels is 1 for P5, 3 for P6.
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> samples;
};

inline Raster decode(const std::string& bytes, const std::string& source) {
  std::size_t pos = 0;
  auto fail = [&](const std::string& what) -> ValidationError {
    return ValidationError(source + ": " + what);
  };
  auto skip_space_and_comments = [&] {
    while (pos < bytes.size()) {
      char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&](const char* field) {
    skip_space_and_comments();
    if (pos >= bytes.size() || bytes[pos] < '0' || bytes[pos] > '9') {
      throw fail(std::string("malformed header field '") + field + "'");
    }
    long long v = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      v = v * 10 + (bytes[pos] - '0');
      if (v > (1 << 24)) throw fail(std::string("header field '") + field + "' too large");
      ++pos;
    }
    return static_cast<int>(v);
  };

  if (bytes.size() < 2 || bytes[0] != 'P') throw fail("unsupported magic number");
  Raster r;
  if (bytes[1] == '5') {
    r.channels = 1;
  } else if (bytes[1] == '6') {
    r.channels = 3;
  } else {
    throw fail(std::string("unsupported magic number 'P") + bytes[1] + "'");
  }
  pos = 2;
  r.width = read_uint("width");
  r.height = read_uint("height");
  const int maxval = read_uint("maxval");
  if (maxval != 255) throw fail("maxval must be 255, got " + std::to_string(maxval));
  if (r.width <= 0 || r.height <= 0) throw fail("zero image dimension");
  if (pos >= bytes.size()) throw fail("truncated header");
  ++pos;  // single whitespace before raster
  const std::size_t need = static_cast<std::size_t>(r.width) * r.height * r.channels;
  if (bytes.size() - pos < need) throw fail("truncated raster");
  r.samples.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                   bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
  return r;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline Raster read(const std::string& path) { return decode(read_file(path), path); }

inline std::string encode(int width, int height, int channels,
                          const std::vector<std::uint8_t>& samples) {
  std::string out = (channels == 1 ? "P5\n" : "P6\n") + std::to_string(width) + " " +
                    std::to_string(height) + "\n255\n";
  out.append(samples.begin(), samples.end());
  return out;
}

// P5 grayscale is promoted by channel replication.
inline RgbImage to_rgb(const Raster& r) {
  RgbImage img(r.width, r.height);
  if (r.channels == 3) {
    img.rgb = r.samples;
  } else {
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
      img.rgb[3 * i] = img.rgb[3 * i + 1] = img.rgb[3 * i + 2] = r.samples[i];
    }
  }
  return img;
}

inline std::string encode_ppm(const RgbImage& img) {
  return encode(img.width, img.height, 3, img.rgb);
}

inline std::string encode_pgm(const RgbImage& img) {
  std::vector<std::uint8_t> gray(img.pixel_count());
  for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = img.rgb[3 * i];
  return encode(img.width, img.height, 1, gray);
}

inline std::string encode_mask(const BinaryMask& m) {
  std::vector<std::uint8_t> gray(m.bits.size());
  for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = m.bits[i] ? 255 : 0;
  return encode(m.width, m.height, 1, gray);
}

}  // namespace netpbm
}  // namespace wbcr
