#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <span>
#include <stdexcept>
#include <vector>

#include "errors.hpp"
#include "image.hpp"

namespace wbcr {

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
  friend auto operator<=>(const Point&, const Point&) = default;
};

/// Closed boundary of a foreground blob. The closing edge from the last point
/// back to the first is implicit.
struct Contour {
  std::vector<Point> points;
};

namespace detail {

// Neighbour offsets in counterclockwise order as displayed (y grows down),
// starting west.
inline constexpr std::array<Point, 8> kRing = {{
    {-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1},
}};

inline int ring_index(int dx, int dy) {
  for (int i = 0; i < 8; ++i) {
    if (kRing[i].x == dx && kRing[i].y == dy) return i;
  }
  throw std::logic_error("contour tracer: backtrack is not a neighbour");
}

}  // namespace detail

/// Largest 8-connected foreground component. Ties go to the component whose
/// first pixel comes first in raster order.
inline BinaryMask largest_component(const BinaryMask& mask) {
  const int w = mask.width, h = mask.height;
  std::vector<std::int32_t> label(mask.bits.size(), -1);
  std::size_t best_size = 0;
  std::int32_t best = -1, next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t seed = 0; seed < mask.bits.size(); ++seed) {
    if (!mask.bits[seed] || label[seed] >= 0) continue;
    std::size_t size = 0;
    label[seed] = next;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      ++size;
      const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
      for (const auto& d : detail::kRing) {
        const int nx = x + d.x, ny = y + d.y;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
        if (mask.bits[j] && label[j] < 0) {
          label[j] = next;
          stack.push_back(j);
        }
      }
    }
    if (size > best_size) {
      best_size = size;
      best = next;
    }
    ++next;
  }
  BinaryMask out(w, h);
  for (std::size_t i = 0; i < label.size(); ++i) out.bits[i] = label[i] == best ? 1 : 0;
  return out;
}

/// Moore-neighbour boundary trace of the largest 8-connected component.
///
/// The trace starts at the topmost-then-leftmost pixel and runs
/// counterclockwise as displayed. It stops when the first transition out of
/// the start pixel repeats (Jacob's criterion). Thin parts of the blob are
/// visited once per side, so a point may appear more than once.
inline Contour trace_contour(const BinaryMask& mask) {
  if (mask.count() == 0) throw MorphologyError("empty mask");
  const BinaryMask blob = largest_component(mask);

  Point start{};
  for (std::size_t i = 0; i < blob.bits.size(); ++i) {
    if (blob.bits[i]) {
      start = {static_cast<int>(i % blob.width), static_cast<int>(i / blob.width)};
      break;
    }
  }

  Contour contour;
  contour.points.push_back(start);

  struct Step {
    Point next;
    Point back;
    bool found;
  };
  auto advance = [&](Point cur, Point back) -> Step {
    const int k = detail::ring_index(back.x - cur.x, back.y - cur.y);
    for (int i = 1; i <= 8; ++i) {
      const auto& d = detail::kRing[(k + i) % 8];
      const Point p{cur.x + d.x, cur.y + d.y};
      if (blob.contains(p.x, p.y)) {
        const auto& prev = detail::kRing[(k + i - 1) % 8];
        return {p, {cur.x + prev.x, cur.y + prev.y}, true};
      }
    }
    return {cur, back, false};
  };

  // The pixel west of the topmost-leftmost pixel is always background.
  const Step first = advance(start, {start.x - 1, start.y});
  if (!first.found) return contour;  // isolated pixel

  Point cur = first.next, back = first.back;
  contour.points.push_back(cur);
  const std::size_t guard = 8 * blob.bits.size() + 16;
  for (std::size_t iter = 0; iter < guard; ++iter) {
    const Step s = advance(cur, back);
    if (cur == start && s.next == first.next && s.back == first.back) {
      contour.points.pop_back();  // drop the repeated start
      return contour;
    }
    contour.points.push_back(s.next);
    cur = s.next;
    back = s.back;
  }
  throw std::logic_error("contour tracer did not terminate");
}

/// Convex hull by Andrew's monotone chain, counterclockwise in standard axes,
/// collinear points dropped. Returns fewer than 3 points for degenerate input.
inline std::vector<Point> convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Point& o, const Point& a, const Point& b) {
    return std::int64_t{a.x - o.x} * (b.y - o.y) - std::int64_t{a.y - o.y} * (b.x - o.x);
  };
  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

/// Length of a closed polyline. Edge lengths are summed in sorted order so the
/// result does not depend on where the loop starts or which way it runs.
inline double closed_perimeter(std::span<const Point> pts) {
  if (pts.size() < 2) return 0.0;
  std::vector<std::int64_t> sq;
  sq.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& a = pts[i];
    const auto& b = pts[(i + 1) % pts.size()];
    const std::int64_t dx = b.x - a.x, dy = b.y - a.y;
    sq.push_back(dx * dx + dy * dy);
  }
  std::sort(sq.begin(), sq.end());
  double total = 0.0;
  for (auto s : sq) total += std::sqrt(static_cast<double>(s));
  return total;
}

/// Contour irregularity: polygonal perimeter over convex-hull perimeter,
/// minus one. Zero for convex blobs; 0 for contours with < 3 distinct points.
inline double spikiness(const Contour& contour) {
  std::vector<Point> distinct = contour.points;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) return 0.0;

  const double p_contour = closed_perimeter(contour.points);
  const auto hull = convex_hull(std::move(distinct));
  const double p_hull = closed_perimeter(hull);  // a 2-point hull counts both directions
  if (p_hull <= 0.0) return 0.0;
  return std::max(0.0, p_contour / p_hull - 1.0);
}

inline double mask_spikiness(const BinaryMask& mask) { return spikiness(trace_contour(mask)); }

/// Outlier threshold mean + k * (population) standard deviation.
inline double calibrate_spikiness_threshold(std::span<const double> scores, double k = 2.0) {
  if (scores.size() < 2) {
    throw ValidationError("spikiness calibration needs at least 2 reference scores");
  }
  double mean = 0.0;
  for (double s : scores) {
    if (!std::isfinite(s)) throw ValidationError("non-finite spikiness score");
    mean += s;
  }
  mean /= static_cast<double>(scores.size());
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  var /= static_cast<double>(scores.size());
  return mean + k * std::sqrt(var);
}

}  // namespace wbcr
