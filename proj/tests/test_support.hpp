#pragma once

// Shared scene generators and reference implementations for the tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <strokesynth/strokesynth.hpp>

namespace testing_support {

namespace ss = strokesynth;

inline ss::Stroke random_stroke(std::mt19937_64& rng, int w, int h, double max_width = 4.0) {
  std::uniform_real_distribution<double> ux(-2.0, w + 2.0), uy(-2.0, h + 2.0), u01(0.0, 1.0),
      uw(ss::kMinStrokeWidth, max_width), ua(0.3, 1.0);
  ss::Stroke s;
  for (auto& p : s.points) p = {ux(rng), uy(rng)};
  s.color = {u01(rng), u01(rng), u01(rng), ua(rng)};
  s.width = uw(rng);
  return s;
}

inline ss::StrokeSet random_scene(std::mt19937_64& rng, int w, int h, int count, double max_width = 4.0) {
  ss::StrokeSet s;
  s.canvas_width = w;
  s.canvas_height = h;
  for (int i = 0; i < count; ++i) s.strokes.push_back(random_stroke(rng, w, h, max_width));
  return s;
}

// Brute-force distance from q to the curve by dense uniform sampling.
inline double sampled_distance(ss::ControlPoint q, ss::ControlPoint p1, ss::ControlPoint p2, ss::ControlPoint p3,
                               int samples) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const double t = double(i) / double(samples - 1);
    const double a = (1 - t) * (1 - t), b = 2 * t * (1 - t), c = t * t;
    const double x = a * p1.x + b * p2.x + c * p3.x, y = a * p1.y + b * p2.y + c * p3.y;
    best = std::min(best, std::hypot(x - q.x, y - q.y));
  }
  return best;
}

inline double segment_distance(ss::ControlPoint q, ss::ControlPoint a, ss::ControlPoint b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((q.x - a.x) * dx + (q.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(a.x + t * dx - q.x, a.y + t * dy - q.y);
}

// Hard rasterization of one opaque straight stroke over white, with
// sub x sub samples spread over the unit box centred on each pixel.
inline ss::RasterImage supersampled_segment(int w, int h, ss::ControlPoint a, ss::ControlPoint b, double width,
                                            ss::Rgba color, int sub) {
  ss::RasterImage out(w, h, 3, 1.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int inside = 0;
      for (int sy = 0; sy < sub; ++sy)
        for (int sx = 0; sx < sub; ++sx) {
          const ss::ControlPoint q{x - 0.5 + (sx + 0.5) / sub, y - 0.5 + (sy + 0.5) / sub};
          if (segment_distance(q, a, b) <= width / 2) ++inside;
        }
      const double cov = double(inside) / double(sub * sub);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = (1 - cov) + cov * color[std::size_t(c)];
    }
  return out;
}

// ---------------------------------------------------------------------------
// Exact discrete optimal transport by enumerating basic feasible solutions
// of the transport polytope (at most m + n - 1 positive cells).

inline bool solve_dense(std::vector<std::vector<double>> a, std::vector<double> b, std::vector<double>& x) {
  // Gauss-Jordan on a possibly overdetermined system; false if rank
  // deficient or inconsistent.
  const std::size_t rows = a.size(), cols = x.size();
  std::size_t r = 0;
  std::vector<std::size_t> pivot_col;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t piv = r;
    for (std::size_t i = r; i < rows; ++i)
      if (std::abs(a[i][c]) > std::abs(a[piv][c])) piv = i;
    if (std::abs(a[piv][c]) < 1e-12) return false;
    std::swap(a[piv], a[r]);
    std::swap(b[piv], b[r]);
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r) continue;
      const double f = a[i][c] / a[r][c];
      if (f == 0) continue;
      for (std::size_t k = c; k < cols; ++k) a[i][k] -= f * a[r][k];
      b[i] -= f * b[r];
    }
    pivot_col.push_back(c);
    ++r;
  }
  if (r < cols) return false;
  for (std::size_t i = r; i < rows; ++i)
    if (std::abs(b[i]) > 1e-9) return false;
  for (std::size_t i = 0; i < cols; ++i) x[pivot_col[i]] = b[i] / a[i][pivot_col[i]];
  return true;
}

inline double exact_ot_cost(const std::vector<double>& p, const std::vector<double>& q,
                            const std::vector<double>& cost) {
  const std::size_t m = p.size(), n = q.size(), cells = m * n, basis = m + n - 1;
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> pick(basis);
  for (std::size_t i = 0; i < basis; ++i) pick[i] = i;
  while (true) {
    std::vector<std::vector<double>> a(m + n, std::vector<double>(basis, 0.0));
    for (std::size_t k = 0; k < basis; ++k) {
      a[pick[k] / n][k] = 1.0;
      a[m + pick[k] % n][k] = 1.0;
    }
    std::vector<double> rhs(p);
    rhs.insert(rhs.end(), q.begin(), q.end());
    std::vector<double> x(basis);
    if (solve_dense(a, rhs, x) && std::all_of(x.begin(), x.end(), [](double v) { return v >= -1e-12; })) {
      double c = 0;
      for (std::size_t k = 0; k < basis; ++k) c += x[k] * cost[pick[k]];
      best = std::min(best, c);
    }
    std::size_t i = basis;
    while (i > 0 && pick[i - 1] == cells - basis + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t k = i; k < basis; ++k) pick[k] = pick[k - 1] + 1;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Label map checks

// Number of 4-connected components per label, by flood fill.
inline std::vector<int> components_per_label(const ss::LabelMap& lm) {
  std::vector<int> count(std::size_t(lm.region_count), 0);
  std::vector<char> seen(lm.labels.size(), 0);
  std::vector<int> stack;
  for (int start = 0; start < int(lm.labels.size()); ++start) {
    if (seen[std::size_t(start)]) continue;
    const int label = lm.labels[std::size_t(start)];
    ++count[std::size_t(label)];
    stack.push_back(start);
    seen[std::size_t(start)] = 1;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      const int x = i % lm.width, y = i / lm.width;
      const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (const auto& n : nb) {
        if (n[0] < 0 || n[1] < 0 || n[0] >= lm.width || n[1] >= lm.height) continue;
        const int j = n[1] * lm.width + n[0];
        if (!seen[std::size_t(j)] && lm.labels[std::size_t(j)] == label) {
          seen[std::size_t(j)] = 1;
          stack.push_back(j);
        }
      }
    }
  }
  return count;
}

// Synthetic image corpus for segmentation checks; kinds 5-9 repeat 0-4
// with additive noise.
inline ss::RasterImage synthetic_image(int kind, int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ss::RasterImage img(w, h, 3);
  const double f1 = 4 + 8 * u(rng), f2 = 4 + 8 * u(rng), ph = 6.28 * u(rng);
  std::vector<std::array<double, 5>> blobs(6);
  for (auto& b : blobs) b = {u(rng) * w, u(rng) * h, 3 + u(rng) * w / 4, u(rng), u(rng)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = 0;
        switch (kind % 5) {
          case 0: v = double(x) / (w - 1) * (c == 0) + double(y) / (h - 1) * (c == 1) + 0.3 * (c == 2); break;
          case 1: v = 0.5 + 0.5 * std::sin(x / f1 + ph + c) * std::cos(y / f2); break;
          case 2: v = ((x / 8 + y / 8) % 2) ? 0.9 - 0.2 * c : 0.1 + 0.1 * c; break;
          case 3: {
            v = 0.95;
            for (const auto& b : blobs)
              if (std::hypot(x - b[0], y - b[1]) < b[2]) v = c == 0 ? b[3] : c == 1 ? b[4] : 0.5;
            break;
          }
          default: v = 0.5 + 0.3 * std::sin((x + 2 * y) / f1 + c); break;
        }
        if (kind >= 5) v += 0.08 * (u(rng) - 0.5);
        img.at(x, y, c) = std::clamp(v, 0.0, 1.0);
      }
  return img;
}

}  // namespace testing_support

namespace testing_support {

// Central finite-difference check of render_backward for the scalar
// loss sum(weights * render(s)). Returns the number of compared components
// and the number that failed the relative tolerance.
struct GradientCheck {
  int compared = 0;
  int failed = 0;
  double worst = 0.0;
  int failed_smooth_at_small_step = 0;  // failures that agree once h is 100x or 1000x smaller
};

inline double weighted_render(const ss::StrokeSet& s, const ss::RasterImage& weights, double softness) {
  const ss::RasterImage img = ss::render(s, softness).image;
  double sum = 0;
  for (std::size_t i = 0; i < img.data().size(); ++i) sum += weights.data()[i] * img.data()[i];
  return sum;
}

inline GradientCheck check_render_gradients(const ss::StrokeSet& s, std::uint64_t seed, double softness = 1.0,
                                            double rel_tol = 1e-3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  ss::RasterImage weights(s.canvas_width, s.canvas_height, 3);
  for (double& v : weights.data()) v = u(rng);
  const ss::ParamGradients g = ss::render_backward(s, weights, softness);
  const ss::FlatParams base = ss::flatten_params(s);

  GradientCheck out;
  auto central = [&](std::vector<double> ss::FlatParams::*group, std::size_t i, double h) {
    ss::FlatParams plus = base, minus = base;
    (plus.*group)[i] += h;
    (minus.*group)[i] -= h;
    return (weighted_render(ss::unflatten_params(plus, s), weights, softness) -
            weighted_render(ss::unflatten_params(minus, s), weights, softness)) /
           (2 * h);
  };
  auto rel_err = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); };
  auto probe = [&](std::vector<double> ss::FlatParams::*group, std::size_t i, double h, double analytic) {
    const double numeric = central(group, i, h);
    if (std::abs(analytic) <= 1e-6 && std::abs(numeric) <= 1e-6) return;
    ++out.compared;
    const double rel = rel_err(analytic, numeric);
    out.worst = std::max(out.worst, rel);
    if (rel <= rel_tol) return;
    ++out.failed;
    if (rel_err(analytic, central(group, i, h / 100)) <= rel_tol ||
        rel_err(analytic, central(group, i, h / 1000)) <= rel_tol)
      ++out.failed_smooth_at_small_step;
  };
  for (std::size_t i = 0; i < base.points.size(); ++i) probe(&ss::FlatParams::points, i, 1e-3, g.points[i]);
  for (std::size_t i = 0; i < base.widths.size(); ++i) probe(&ss::FlatParams::widths, i, 1e-3, g.widths[i]);
  for (std::size_t i = 0; i < base.colors.size(); ++i) probe(&ss::FlatParams::colors, i, 1e-4, g.colors[i]);
  return out;
}

}  // namespace testing_support
