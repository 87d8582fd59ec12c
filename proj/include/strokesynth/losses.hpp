#pragma once

// Image-space losses with gradients w.r.t. the rendered canvas: pixel MSE,
// the Sinkhorn transport loss between ink distributions, and their weighted
// sum (the style-preserving loss).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "core.hpp"
#include "transport.hpp"

namespace strokesynth {

struct LossResult {
  double loss = 0.0;
  RasterImage grad;  // d loss / d pixel, same shape as the input image
};

inline LossResult mse_loss(const RasterImage& x, const RasterImage& target) {
  if (!x.same_shape(target)) fail("mse_loss: image dimensions differ");
  LossResult out{0.0, RasterImage(x.width(), x.height(), x.channels())};
  const auto a = x.data();
  const auto b = target.data();
  auto g = out.grad.data();
  const double n = double(a.size());
  if (a.empty()) return out;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
    g[i] = 2.0 * d / n;
  }
  out.loss = sum / n;
  return out;
}

// ---------------------------------------------------------------------------
// Image -> mass distribution on a grid

inline constexpr double kMassFloor = 1e-8;

namespace detail {

/// Area-overlap box filter weights from `length` pixels onto `cells` bins;
/// entry c lists (pixel, weight) with weights summing to 1.
inline std::vector<std::vector<std::pair<int, double>>> box_weights(int length, int cells) {
  std::vector<std::vector<std::pair<int, double>>> out(static_cast<std::size_t>(cells));
  const double span = double(length) / double(cells);
  for (int c = 0; c < cells; ++c) {
    const double lo = c * span, hi = (c + 1) * span;
    for (int px = int(std::floor(lo)); px < length && px < hi; ++px) {
      const double overlap = std::min(hi, double(px + 1)) - std::max(lo, double(px));
      if (overlap > 0) out[std::size_t(c)].push_back({px, overlap / span});
    }
  }
  return out;
}

inline double luminance(const RasterImage& img, int x, int y) {
  if (img.channels() == 1) return img.at(x, y, 0);
  return 0.2126 * img.at(x, y, 0) + 0.7152 * img.at(x, y, 1) + 0.0722 * img.at(x, y, 2);
}

struct InkGrid {
  std::vector<double> raw;   // box-averaged ink before flooring
  std::vector<double> mass;  // floored and normalized
  double total = 0.0;        // sum of floored values
};

inline InkGrid ink_grid(const RasterImage& img, int grid) {
  if (grid < 2) fail("image_to_distribution: grid_size must be >= 2");
  if (img.empty()) fail("image_to_distribution: empty image");
  const auto wx = box_weights(img.width(), grid);
  const auto wy = box_weights(img.height(), grid);
  InkGrid out;
  const std::size_t cells = std::size_t(grid) * std::size_t(grid);
  out.raw.assign(cells, 0.0);
  out.mass.assign(cells, 0.0);
  for (int cy = 0; cy < grid; ++cy)
    for (int cx = 0; cx < grid; ++cx) {
      double v = 0.0;
      for (const auto& [py, ay] : wy[std::size_t(cy)])
        for (const auto& [px, ax] : wx[std::size_t(cx)]) v += ay * ax * (1.0 - luminance(img, px, py));
      out.raw[std::size_t(cy) * std::size_t(grid) + std::size_t(cx)] = v;
    }
  for (std::size_t c = 0; c < cells; ++c) {
    out.mass[c] = std::max(out.raw[c], kMassFloor);
    out.total += out.mass[c];
  }
  for (double& m : out.mass) m /= out.total;
  return out;
}

}  // namespace detail

/// Ink distribution: inverted luminance, box-downsampled to grid x grid
/// cells (row-major), floored at 1e-8 and normalized to unit mass.
inline std::vector<double> image_to_distribution(const RasterImage& img, int grid_size) {
  return detail::ink_grid(img, grid_size).mass;
}

// ---------------------------------------------------------------------------
// Transport loss

/// Solver state carried between successive losses on slowly changing
/// images: the column potential and the adjoint solution.
struct OtWarmStart {
  std::vector<double> g;
  std::vector<double> adjoint;
};

struct OtLossResult {
  double loss = 0.0;
  RasterImage grad;
  TransportPlan plan;
};

/// Sinkhorn plan cost between the ink distributions of x and ref. The
/// gradient of the plan cost w.r.t. the source distribution comes from
/// implicit differentiation of the converged plan and is then pushed back
/// through normalization, flooring, downsampling and luminance. `warm`, when
/// given, seeds both solves and is updated with their results.
inline OtLossResult ot_loss(const RasterImage& x, const RasterImage& ref, const SinkhornConfig& cfg,
                            OtWarmStart* warm = nullptr) {
  cfg.validate();
  if (x.width() != ref.width() || x.height() != ref.height()) fail("ot_loss: image dimensions differ");
  const int grid = cfg.grid_size;
  const detail::InkGrid src = detail::ink_grid(x, grid);
  const detail::InkGrid dst = detail::ink_grid(ref, grid);

  TransportProblem tp{src.mass, dst.mass, GridCost{grid, cfg.cost}, cfg.reg};
  OtLossResult out;
  out.plan = sinkhorn(tp, cfg, warm ? &warm->g : nullptr);
  out.loss = out.plan.plan_cost;

  // d loss / d mass is defined up to a constant, which the normalization removes.
  const PlanCostGradient dmass =
      plan_cost_gradient(tp, out.plan, cfg.adjoint_tol, cfg.adjoint_max_iters, warm ? &warm->adjoint : nullptr);
  if (warm) warm->g = out.plan.g;
  const std::size_t cells = src.mass.size();
  double mean = 0.0;
  for (std::size_t c = 0; c < cells; ++c) mean += src.mass[c] * dmass.d_source[c];
  std::vector<double> d_raw(cells, 0.0);
  for (std::size_t c = 0; c < cells; ++c)
    if (src.raw[c] > kMassFloor) d_raw[c] = (dmass.d_source[c] - mean) / src.total;

  out.grad = RasterImage(x.width(), x.height(), x.channels());
  const auto wx = detail::box_weights(x.width(), grid);
  const auto wy = detail::box_weights(x.height(), grid);
  for (int cy = 0; cy < grid; ++cy)
    for (int cx = 0; cx < grid; ++cx) {
      const double dv = d_raw[std::size_t(cy) * std::size_t(grid) + std::size_t(cx)];
      if (dv == 0.0) continue;
      for (const auto& [py, ay] : wy[std::size_t(cy)])
        for (const auto& [px, ax] : wx[std::size_t(cx)]) {
          const double d_lum = -dv * ay * ax;
          if (x.channels() == 1) {
            out.grad.at(px, py, 0) += d_lum;
          } else {
            out.grad.at(px, py, 0) += 0.2126 * d_lum;
            out.grad.at(px, py, 1) += 0.7152 * d_lum;
            out.grad.at(px, py, 2) += 0.0722 * d_lum;
          }
        }
    }
  return out;
}

// ---------------------------------------------------------------------------
// Combined loss

struct StyleLossResult {
  double loss = 0.0;
  double l2 = 0.0;
  double ot = 0.0;
  RasterImage grad;
  TransportPlan plan;  // empty when the transport term is disabled
};

/// lambda_ot * ot_loss(x, ref_render) + lambda_l2 * mse_loss(x, content_target).
/// A zero transport weight skips the Sinkhorn solve.
inline StyleLossResult style_preserving_loss(const RasterImage& x, const RasterImage& content_target,
                                             const RasterImage& ref_render, double lambda_ot, double lambda_l2,
                                             const SinkhornConfig& cfg, OtWarmStart* warm = nullptr) {
  if (!(lambda_ot >= 0) || !(lambda_l2 >= 0)) fail("style_preserving_loss: weights must be >= 0");
  if (!x.same_shape(content_target) || !x.same_shape(ref_render))
    fail("style_preserving_loss: image dimensions differ");
  StyleLossResult out;
  out.grad = RasterImage(x.width(), x.height(), x.channels());
  auto g = out.grad.data();
  const LossResult l2 = mse_loss(x, content_target);
  out.l2 = l2.loss;
  if (lambda_l2 > 0) {
    auto gl = l2.grad.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += lambda_l2 * gl[i];
  }
  if (lambda_ot > 0) {
    OtLossResult ot = ot_loss(x, ref_render, cfg, warm);
    out.ot = ot.loss;
    auto go = ot.grad.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += lambda_ot * go[i];
    out.plan = std::move(ot.plan);
  }
  out.loss = lambda_ot * out.ot + lambda_l2 * out.l2;
  return out;
}

}  // namespace strokesynth
