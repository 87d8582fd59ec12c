#pragma once

// Adam-driven optimization loops over stroke parameters:
//   imitation_fit  - refine extracted strokes so their render matches a reference
//   synthesize     - rearrange style strokes toward a content target under the
//                    style-preserving loss

#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "losses.hpp"
#include "rasterizer.hpp"

namespace strokesynth {

struct AdamState {
  FlatParams m;  // first moments
  FlatParams v;  // second moments
  long step = 0;

  static AdamState zeros(std::size_t strokes) {
    return {zero_gradients(strokes), zero_gradients(strokes), 0};
  }
};

struct AdamStep {
  StrokeSet strokes;
  AdamState state;
};

namespace detail {
inline void adam_group(std::vector<double>& theta, const std::vector<double>& grad, std::vector<double>& m,
                       std::vector<double>& v, double lr, const OptimConfig& cfg, double bc1, double bc2) {
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * grad[i];
    v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    theta[i] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
  }
}
}  // namespace detail

/// One bias-corrected Adam update with per-group learning rates, followed by
/// clamp_params.
inline AdamStep adam_step(AdamState state, const ParamGradients& grads, const OptimConfig& cfg, const StrokeSet& s) {
  FlatParams theta = flatten_params(s);
  auto same = [](const FlatParams& a, const FlatParams& b) {
    return a.points.size() == b.points.size() && a.widths.size() == b.widths.size() &&
           a.colors.size() == b.colors.size();
  };
  if (!same(theta, grads) || !same(theta, state.m) || !same(theta, state.v))
    fail("adam_step: gradient or moment shapes do not match the stroke set");

  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, double(state.step));
  detail::adam_group(theta.points, grads.points, state.m.points, state.v.points, cfg.lr_points, cfg, bc1, bc2);
  detail::adam_group(theta.widths, grads.widths, state.m.widths, state.v.widths, cfg.lr_width, cfg, bc1, bc2);
  detail::adam_group(theta.colors, grads.colors, state.m.colors, state.v.colors, cfg.lr_color, cfg, bc1, bc2);
  return {clamp_params(unflatten_params(theta, s)), std::move(state)};
}

// ---------------------------------------------------------------------------
// Run bookkeeping

struct StepInfo {
  int step = 0;
  double loss = 0.0;
  double l2 = 0.0;
  double ot = 0.0;
};

using ProgressFn = std::function<void(const StepInfo&)>;

struct RunReport {
  std::string kind;               // "imitation" or "synthesis"
  std::vector<double> loss_trace;  // total loss before each update
  std::vector<double> l2_trace;
  std::vector<double> ot_trace;  // synthesis only
  double final_loss = 0.0;        // loss of the returned strokes
  double wall_time_s = 0.0;
  StrokeSet strokes;
  OptimConfig config;
  SinkhornConfig ot_config;  // synthesis only
  double lambda_ot = 0.0;
  double lambda_l2 = 1.0;
  double softness = kDefaultSoftness;
};

/// Mean Euclidean distance between corresponding control points.
inline double mean_control_point_displacement(const StrokeSet& a, const StrokeSet& b) {
  if (a.size() != b.size()) fail("mean_control_point_displacement: stroke counts differ");
  if (a.size() == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < 3; ++k) sum += norm(a.strokes[i].points[k] - b.strokes[i].points[k]);
  return sum / double(3 * a.size());
}

namespace detail {
inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}
}  // namespace detail

/// Render -> MSE against the reference -> backward -> Adam, cfg.steps times.
inline RunReport imitation_fit(const StrokeSet& init, const RasterImage& ref, const OptimConfig& cfg,
                               double softness = kDefaultSoftness, const ProgressFn& progress = {}) {
  cfg.validate();
  if (init.canvas_width != ref.width() || init.canvas_height != ref.height())
    fail("imitation_fit: stroke canvas " + std::to_string(init.canvas_width) + "x" +
         std::to_string(init.canvas_height) + " does not match reference " + std::to_string(ref.width()) + "x" +
         std::to_string(ref.height()));
  if (ref.channels() != 3) fail("imitation_fit: reference must be RGB");

  const auto t0 = std::chrono::steady_clock::now();
  RunReport report;
  report.kind = "imitation";
  report.config = cfg;
  report.softness = softness;
  report.strokes = init;
  AdamState state = AdamState::zeros(init.size());

  for (int step = 0; step < cfg.steps; ++step) {
    const RenderOutput r = render(report.strokes, softness);
    const LossResult l = mse_loss(r.image, ref);
    report.loss_trace.push_back(l.loss);
    report.l2_trace.push_back(l.loss);
    if (progress) progress({step, l.loss, l.loss, 0.0});
    const ParamGradients g = render_backward(report.strokes, l.grad, r.bins);
    AdamStep next = adam_step(std::move(state), g, cfg, report.strokes);
    report.strokes = std::move(next.strokes);
    state = std::move(next.state);
  }
  report.final_loss = mse_loss(render(report.strokes, softness).image, ref).loss;
  report.wall_time_s = detail::seconds_since(t0);
  return report;
}

/// Render -> style-preserving loss -> backward -> Adam, cfg.steps times.
/// The stroke count never changes; strokes are only moved and recolored.
inline RunReport synthesize(const StrokeSet& style_strokes, const RasterImage& ref_render,
                            const RasterImage& content_target, const OptimConfig& cfg, const SinkhornConfig& ot_cfg,
                            double lambda_ot = 1.0, double lambda_l2 = 1.0, double softness = kDefaultSoftness,
                            const ProgressFn& progress = {}) {
  cfg.validate();
  ot_cfg.validate();
  const int w = style_strokes.canvas_width, h = style_strokes.canvas_height;
  for (const RasterImage* img : {&ref_render, &content_target})
    if (img->width() != w || img->height() != h || img->channels() != 3)
      fail("synthesize: reference render and content target must be RGB images matching the " + std::to_string(w) +
           "x" + std::to_string(h) + " stroke canvas");

  const auto t0 = std::chrono::steady_clock::now();
  RunReport report;
  report.kind = "synthesis";
  report.config = cfg;
  report.ot_config = ot_cfg;
  report.lambda_ot = lambda_ot;
  report.lambda_l2 = lambda_l2;
  report.softness = softness;
  report.strokes = style_strokes;
  AdamState state = AdamState::zeros(style_strokes.size());
  OtWarmStart warm;

  for (int step = 0; step < cfg.steps; ++step) {
    const RenderOutput r = render(report.strokes, softness);
    const StyleLossResult l =
        style_preserving_loss(r.image, content_target, ref_render, lambda_ot, lambda_l2, ot_cfg, &warm);
    report.loss_trace.push_back(l.loss);
    report.l2_trace.push_back(l.l2);
    report.ot_trace.push_back(l.ot);
    if (progress) progress({step, l.loss, l.l2, l.ot});
    const ParamGradients g = render_backward(report.strokes, l.grad, r.bins);
    AdamStep next = adam_step(std::move(state), g, cfg, report.strokes);
    report.strokes = std::move(next.strokes);
    state = std::move(next.state);
  }
  const RasterImage final_image = render(report.strokes, softness).image;
  report.final_loss =
      style_preserving_loss(final_image, content_target, ref_render, lambda_ot, lambda_l2, ot_cfg, &warm).loss;
  report.wall_time_s = detail::seconds_since(t0);
  return report;
}

}  // namespace strokesynth
