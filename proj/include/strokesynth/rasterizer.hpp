#pragma once

// Soft rasterizer for quadratic Bezier strokes with an analytic backward pass.
//
// Pixel (x, y) is sampled at the point (x, y). Strokes are painted over a
// white background in list order with the "over" operator:
//   out = (1 - a) * under + a * rgb,   a = alpha * coverage.
// Coverage is the logistic of the signed distance to the stroke boundary,
// faded to exactly zero over the far tail so that per-stroke bounding-box
// culling introduces no truncation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "bezier.hpp"
#include "core.hpp"
#include "parallel.hpp"

namespace strokesynth {

inline constexpr double kDefaultSoftness = 1.0;

// Tail fade: logistic below -kFadeStart is blended to zero at -kFadeEnd
// (both in units of the softness).
inline constexpr double kFadeStart = 5.0;
inline constexpr double kFadeEnd = 8.0;

struct CoverageValue {
  double value = 0.0;
  double dz = 0.0;  // d value / d z, z = (width/2 - dist) / softness
};

/// Coverage as a function of the normalized signed boundary distance z.
inline CoverageValue coverage_from_z(double z) {
  if (z <= -kFadeEnd) return {};
  const double sig = 1.0 / (1.0 + std::exp(-z));
  const double dsig = sig * (1.0 - sig);
  if (z >= -kFadeStart) return {sig, dsig};
  // smootherstep from 0 at -kFadeEnd to 1 at -kFadeStart
  const double span = kFadeEnd - kFadeStart;
  const double s = (z + kFadeEnd) / span;
  const double fade = s * s * s * (s * (6.0 * s - 15.0) + 10.0);
  const double dfade = 30.0 * s * s * (s - 1.0) * (s - 1.0) / span;
  return {sig * fade, dsig * fade + sig * dfade};
}

inline double stroke_coverage(const ControlPoint& q, const Stroke& s, double softness = kDefaultSoftness) {
  const auto bd = bezier_distance(q, s.points[0], s.points[1], s.points[2]);
  return coverage_from_z((0.5 * s.width - bd.dist) / softness).value;
}

/// Per-stroke pixel window (inclusive), empty when it misses the canvas.
struct PixelBox {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;
  bool empty() const noexcept { return x1 < x0 || y1 < y0; }
  bool contains(int x, int y) const noexcept { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

inline PixelBox stroke_pixel_box(const Stroke& s, double softness, int width, int height) {
  const Bounds b = bezier_bounds(s.points[0], s.points[1], s.points[2]);
  const double r = 0.5 * std::max(s.width, 0.0) + kFadeEnd * softness;
  PixelBox box;
  box.x0 = int(std::max(0.0, std::ceil(b.x0 - r)));
  box.y0 = int(std::max(0.0, std::ceil(b.y0 - r)));
  box.x1 = int(std::min(double(width - 1), std::floor(b.x1 + r)));
  box.y1 = int(std::min(double(height - 1), std::floor(b.y1 + r)));
  return box;
}

/// Strokes binned into square pixel tiles; bins keep paint order.
struct TileBins {
  static constexpr int kTile = 16;
  int width = 0, height = 0;
  int tiles_x = 0, tiles_y = 0;
  double softness = kDefaultSoftness;
  std::vector<PixelBox> boxes;
  std::vector<std::vector<std::size_t>> bins;

  std::size_t tile_count() const noexcept { return bins.size(); }
};

inline TileBins bin_strokes(const StrokeSet& s, double softness) {
  TileBins tb;
  tb.width = s.canvas_width;
  tb.height = s.canvas_height;
  tb.softness = softness;
  tb.tiles_x = (tb.width + TileBins::kTile - 1) / TileBins::kTile;
  tb.tiles_y = (tb.height + TileBins::kTile - 1) / TileBins::kTile;
  tb.bins.resize(std::size_t(tb.tiles_x) * std::size_t(tb.tiles_y));
  tb.boxes.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const PixelBox box = stroke_pixel_box(s.strokes[i], softness, tb.width, tb.height);
    tb.boxes.push_back(box);
    if (box.empty()) continue;
    for (int ty = box.y0 / TileBins::kTile; ty <= box.y1 / TileBins::kTile; ++ty)
      for (int tx = box.x0 / TileBins::kTile; tx <= box.x1 / TileBins::kTile; ++tx)
        tb.bins[std::size_t(ty) * std::size_t(tb.tiles_x) + std::size_t(tx)].push_back(i);
  }
  return tb;
}

struct RenderOutput {
  RasterImage image;
  TileBins bins;  // reused by render_backward
};

namespace detail {
inline void check_canvas(const StrokeSet& s) {
  if (s.canvas_width <= 0 || s.canvas_height <= 0) fail("render: zero-size canvas");
}

template <typename Fn>
void for_each_tile_pixel(const TileBins& tb, std::size_t tile, Fn&& fn) {
  const int tx = int(tile % std::size_t(tb.tiles_x));
  const int ty = int(tile / std::size_t(tb.tiles_x));
  const int x_end = std::min(tb.width, (tx + 1) * TileBins::kTile);
  const int y_end = std::min(tb.height, (ty + 1) * TileBins::kTile);
  for (int y = ty * TileBins::kTile; y < y_end; ++y)
    for (int x = tx * TileBins::kTile; x < x_end; ++x) fn(x, y);
}
}  // namespace detail

inline RenderOutput render(const StrokeSet& s, double softness = kDefaultSoftness) {
  detail::check_canvas(s);
  if (!(softness > 0)) fail("render: softness must be > 0");
  RenderOutput out{RasterImage(s.canvas_width, s.canvas_height, 3, 1.0), bin_strokes(s, softness)};
  const TileBins& tb = out.bins;
  RasterImage& img = out.image;

  parallel_for(tb.tile_count(), [&](std::size_t tile) {
    const auto& bin = tb.bins[tile];
    if (bin.empty()) return;
    detail::for_each_tile_pixel(tb, tile, [&](int x, int y) {
      double col[3] = {1.0, 1.0, 1.0};
      const ControlPoint q{double(x), double(y)};
      for (std::size_t idx : bin) {
        if (!tb.boxes[idx].contains(x, y)) continue;
        const Stroke& st = s.strokes[idx];
        const double cov = stroke_coverage(q, st, softness);
        const double a = st.color.a * cov;
        if (a == 0.0) continue;
        for (int c = 0; c < 3; ++c) col[c] = (1.0 - a) * col[c] + a * st.color[std::size_t(c)];
      }
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = col[c];
    });
  });
  return out;
}

/// Same layout as FlatParams: per stroke 6 point, 1 width and 4 color slots.
using ParamGradients = FlatParams;

inline ParamGradients zero_gradients(std::size_t strokes) {
  return {std::vector<double>(strokes * kPointsPerStroke, 0.0), std::vector<double>(strokes, 0.0),
          std::vector<double>(strokes * kColorsPerStroke, 0.0)};
}

/// Chain rule from per-pixel image gradients to stroke parameters.
/// Point gradients hold the nearest-point parameter fixed (it is a minimizer
/// of the distance, so its own sensitivity drops out).
inline ParamGradients render_backward(const StrokeSet& s, const RasterImage& d_image, const TileBins& tb) {
  detail::check_canvas(s);
  if (d_image.width() != s.canvas_width || d_image.height() != s.canvas_height || d_image.channels() != 3)
    fail("render_backward: gradient image does not match the canvas");
  if (tb.width != s.canvas_width || tb.height != s.canvas_height || tb.boxes.size() != s.size())
    fail("render_backward: stale tile bins");
  const double softness = tb.softness;
  constexpr std::size_t kSlots = kPointsPerStroke + 1 + kColorsPerStroke;

  // Per-tile partials, reduced in tile order for thread-count independence.
  std::vector<std::vector<double>> partial(tb.tile_count());

  parallel_for(tb.tile_count(), [&](std::size_t tile) {
    const auto& bin = tb.bins[tile];
    if (bin.empty()) return;
    std::vector<double>& acc = partial[tile];
    acc.assign(bin.size() * kSlots, 0.0);

    struct Hit {
      std::size_t slot;  // position in bin
      double a, cov, dcov_dz, dist, t;
      double under[3];
    };
    std::vector<Hit> hits;
    hits.reserve(bin.size());

    detail::for_each_tile_pixel(tb, tile, [&](int x, int y) {
      double gout[3] = {d_image.at(x, y, 0), d_image.at(x, y, 1), d_image.at(x, y, 2)};
      if (gout[0] == 0.0 && gout[1] == 0.0 && gout[2] == 0.0) return;
      const ControlPoint q{double(x), double(y)};
      hits.clear();
      double col[3] = {1.0, 1.0, 1.0};
      for (std::size_t k = 0; k < bin.size(); ++k) {
        const std::size_t idx = bin[k];
        if (!tb.boxes[idx].contains(x, y)) continue;
        const Stroke& st = s.strokes[idx];
        const auto bd = bezier_distance(q, st.points[0], st.points[1], st.points[2]);
        const CoverageValue cv = coverage_from_z((0.5 * st.width - bd.dist) / softness);
        if (cv.value == 0.0 && cv.dz == 0.0) continue;
        const double a = st.color.a * cv.value;
        hits.push_back({k, a, cv.value, cv.dz, bd.dist, bd.t, {col[0], col[1], col[2]}});
        for (int c = 0; c < 3; ++c) col[c] = (1.0 - a) * col[c] + a * st.color[std::size_t(c)];
      }
      for (auto it = hits.rbegin(); it != hits.rend(); ++it) {
        const Stroke& st = s.strokes[bin[it->slot]];
        double* g = acc.data() + it->slot * kSlots;
        double d_a = 0.0;
        for (int c = 0; c < 3; ++c) {
          g[kPointsPerStroke + 1 + std::size_t(c)] += it->a * gout[c];
          d_a += gout[c] * (st.color[std::size_t(c)] - it->under[c]);
          gout[c] *= (1.0 - it->a);
        }
        g[kPointsPerStroke + 1 + 3] += d_a * it->cov;
        const double d_z = d_a * st.color.a * it->dcov_dz;
        g[kPointsPerStroke] += d_z * 0.5 / softness;
        if (it->dist > 0.0) {
          const double d_dist = -d_z / softness;
          const ControlPoint foot = bezier_point(st.points[0], st.points[1], st.points[2], it->t);
          const double ux = (foot.x - q.x) / it->dist;
          const double uy = (foot.y - q.y) / it->dist;
          const auto basis = bezier_basis(it->t);
          for (std::size_t j = 0; j < 3; ++j) {
            g[2 * j] += d_dist * basis[j] * ux;
            g[2 * j + 1] += d_dist * basis[j] * uy;
          }
        }
      }
    });
  });

  ParamGradients grads = zero_gradients(s.size());
  for (std::size_t tile = 0; tile < tb.tile_count(); ++tile) {
    const auto& acc = partial[tile];
    if (acc.empty()) continue;
    const auto& bin = tb.bins[tile];
    for (std::size_t k = 0; k < bin.size(); ++k) {
      const std::size_t i = bin[k];
      const double* g = acc.data() + k * kSlots;
      for (std::size_t j = 0; j < kPointsPerStroke; ++j) grads.points[i * kPointsPerStroke + j] += g[j];
      grads.widths[i] += g[kPointsPerStroke];
      for (std::size_t c = 0; c < kColorsPerStroke; ++c)
        grads.colors[i * kColorsPerStroke + c] += g[kPointsPerStroke + 1 + c];
    }
  }
  return grads;
}

inline ParamGradients render_backward(const StrokeSet& s, const RasterImage& d_image,
                                      double softness = kDefaultSoftness) {
  detail::check_canvas(s);
  return render_backward(s, d_image, bin_strokes(s, softness));
}

}  // namespace strokesynth
