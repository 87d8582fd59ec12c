#pragma once

// One stroke per superpixel region: the farthest pair of border pixels gives
// the endpoints, their midpoint the middle control point, the mean border
// distance to the endpoint line the width, and the mean region color the color.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "parallel.hpp"
#include "superpixel.hpp"

namespace strokesynth {

struct PixelCoord {
  int x = 0;
  int y = 0;

  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// Row-major ordering: by row, then column.
inline bool row_major_less(PixelCoord a, PixelCoord b) { return a.y != b.y ? a.y < b.y : a.x < b.x; }

struct RegionGeometry {
  int region_id = 0;
  std::vector<PixelCoord> interior_pixels;  // every pixel of the region, row-major
  std::vector<PixelCoord> border_pixels;    // pixels touching the outside or the image edge, row-major
};

namespace detail {
inline bool is_border(const LabelMap& lm, int x, int y) {
  const int label = lm.at(x, y);
  return x == 0 || y == 0 || x == lm.width - 1 || y == lm.height - 1 || lm.at(x - 1, y) != label ||
         lm.at(x + 1, y) != label || lm.at(x, y - 1) != label || lm.at(x, y + 1) != label;
}
}  // namespace detail

/// Geometry of every region in one pass, indexed by region id.
inline std::vector<RegionGeometry> region_geometries(const LabelMap& lm) {
  std::vector<RegionGeometry> out(std::size_t(std::max(0, lm.region_count)));
  for (std::size_t i = 0; i < out.size(); ++i) out[i].region_id = int(i);
  for (int y = 0; y < lm.height; ++y)
    for (int x = 0; x < lm.width; ++x) {
      const int label = lm.at(x, y);
      if (label < 0 || label >= lm.region_count) fail("region_geometries: label out of range");
      auto& g = out[std::size_t(label)];
      g.interior_pixels.push_back({x, y});
      if (detail::is_border(lm, x, y)) g.border_pixels.push_back({x, y});
    }
  return out;
}

inline RegionGeometry region_border(const LabelMap& lm, int region_id) {
  if (region_id < 0 || region_id >= lm.region_count)
    fail("region_border: region id " + std::to_string(region_id) + " out of range");
  RegionGeometry g;
  g.region_id = region_id;
  for (int y = 0; y < lm.height; ++y)
    for (int x = 0; x < lm.width; ++x) {
      if (lm.at(x, y) != region_id) continue;
      g.interior_pixels.push_back({x, y});
      if (detail::is_border(lm, x, y)) g.border_pixels.push_back({x, y});
    }
  if (g.interior_pixels.empty()) fail("region_border: region " + std::to_string(region_id) + " is empty");
  return g;
}

// ---------------------------------------------------------------------------
// Farthest pair

namespace detail {

inline std::int64_t dist2(PixelCoord a, PixelCoord b) {
  const std::int64_t dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

/// True when (a1, a3) beats (b1, b3): longer, or equally long and
/// lexicographically smaller in row-major order.
inline bool better_pair(std::int64_t da, PixelCoord a1, PixelCoord a3, std::int64_t db, PixelCoord b1,
                        PixelCoord b3) {
  if (da != db) return da > db;
  if (!(a1 == b1)) return row_major_less(a1, b1);
  return row_major_less(a3, b3);
}

inline std::int64_t cross(PixelCoord o, PixelCoord a, PixelCoord b) {
  return std::int64_t(a.x - o.x) * (b.y - o.y) - std::int64_t(a.y - o.y) * (b.x - o.x);
}

/// Strict convex hull vertices (collinear points dropped), monotone chain.
inline std::vector<PixelCoord> convex_hull(std::vector<PixelCoord> pts) {
  std::sort(pts.begin(), pts.end(), [](PixelCoord a, PixelCoord b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<PixelCoord> hull(2 * pts.size());
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

}  // namespace detail

inline constexpr std::size_t kBruteForcePairLimit = 2000;

/// Border pair at maximal distance with p1 before p3 in row-major order;
/// ties go to the lexicographically smallest (p1, p3). Expects a row-major
/// sorted, non-empty list.
inline std::pair<PixelCoord, PixelCoord> farthest_pair(const std::vector<PixelCoord>& border) {
  if (border.empty()) fail("farthest_pair: empty point set");
  std::pair<PixelCoord, PixelCoord> best{border.front(), border.front()};
  std::int64_t best_d = 0;
  if (border.size() <= kBruteForcePairLimit) {
    for (std::size_t i = 0; i < border.size(); ++i)
      for (std::size_t j = i + 1; j < border.size(); ++j) {
        const std::int64_t d = detail::dist2(border[i], border[j]);
        if (d > best_d) best_d = d, best = {border[i], border[j]};
      }
    return best;
  }
  // Every maximal pair joins two strict hull vertices, so scanning vertex
  // pairs with the same tie-break reproduces the exhaustive answer.
  const auto hull = detail::convex_hull(border);
  for (std::size_t i = 0; i < hull.size(); ++i)
    for (std::size_t j = i + 1; j < hull.size(); ++j) {
      PixelCoord a = hull[i], b = hull[j];
      if (row_major_less(b, a)) std::swap(a, b);
      const std::int64_t d = detail::dist2(a, b);
      if (detail::better_pair(d, a, b, best_d, best.first, best.second)) best_d = d, best = {a, b};
    }
  return best;
}

/// Mean perpendicular distance of the points to the infinite line a-b
/// (zero when a == b).
inline double mean_line_distance(const std::vector<PixelCoord>& pts, PixelCoord a, PixelCoord b) {
  if (pts.empty() || a == b) return 0.0;
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len = std::hypot(dx, dy);
  double sum = 0.0;
  for (const auto& p : pts) sum += std::abs(dx * (p.y - a.y) - dy * (p.x - a.x)) / len;
  return sum / double(pts.size());
}

inline Stroke extract_stroke_from_region(const RasterImage& img, const RegionGeometry& geo) {
  if (geo.interior_pixels.empty() || geo.border_pixels.empty())
    fail("extract_stroke_from_region: region " + std::to_string(geo.region_id) + " is empty");
  const auto [a, b] = farthest_pair(geo.border_pixels);

  Stroke s;
  s.points[0] = {double(a.x), double(a.y)};
  s.points[2] = {double(b.x), double(b.y)};
  s.points[1] = 0.5 * (s.points[0] + s.points[2]);
  s.width = std::max(kMinStrokeWidth, mean_line_distance(geo.border_pixels, a, b));

  // mean as offset from the first pixel, exact on uniform regions
  const PixelCoord first = geo.interior_pixels.front();
  auto channel = [&](PixelCoord p, int c) { return img.at(p.x, p.y, img.channels() == 3 ? c : 0); };
  double mean[3];
  for (int c = 0; c < 3; ++c) {
    const double base = channel(first, c);
    double sum = 0.0;
    for (const auto& p : geo.interior_pixels) sum += channel(p, c) - base;
    mean[c] = base + sum / double(geo.interior_pixels.size());
  }
  s.color = {mean[0], mean[1], mean[2], 1.0};
  return s;
}

/// One stroke per region, in region-id order, on the image's canvas.
inline StrokeSet extract_stroke_set(const RasterImage& img, const LabelMap& lm) {
  if (img.width() != lm.width || img.height() != lm.height)
    fail("extract_stroke_set: label map does not match the image dimensions");
  const auto regions = region_geometries(lm);
  StrokeSet out;
  out.canvas_width = img.width();
  out.canvas_height = img.height();
  out.strokes.resize(regions.size());
  parallel_for(regions.size(), [&](std::size_t i) { out.strokes[i] = extract_stroke_from_region(img, regions[i]); });
  return out;
}

}  // namespace strokesynth
