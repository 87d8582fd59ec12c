#pragma once

// Closest-point queries on quadratic Bezier curves
//   B(t) = (1-t)^2 p1 + 2t(1-t) p2 + t^2 p3,  t in [0,1].

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "core.hpp"

namespace strokesynth {

inline ControlPoint bezier_point(const ControlPoint& p1, const ControlPoint& p2, const ControlPoint& p3, double t) {
  const double u = 1.0 - t;
  return {u * u * p1.x + 2.0 * t * u * p2.x + t * t * p3.x, u * u * p1.y + 2.0 * t * u * p2.y + t * t * p3.y};
}

/// Bernstein weights (b1, b2, b3) at t; B(t) = b1 p1 + b2 p2 + b3 p3.
inline std::array<double, 3> bezier_basis(double t) {
  const double u = 1.0 - t;
  return {u * u, 2.0 * t * u, t * t};
}

/// Up to three real roots of c3 t^3 + c2 t^2 + c1 t + c0.
struct CubicRoots {
  std::array<double, 3> t{};
  int count = 0;

  void push(double v) {
    if (count < 3 && std::isfinite(v)) t[count++] = v;
  }
};

/// Real roots via Cardano / trigonometric form, degrading to quadratic or
/// linear when the leading coefficients vanish relative to the others.
inline CubicRoots solve_cubic(double c3, double c2, double c1, double c0) {
  CubicRoots out;
  const double scale = std::max({std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
  if (scale == 0.0) return out;
  c3 /= scale;
  c2 /= scale;
  c1 /= scale;
  c0 /= scale;
  constexpr double tiny = 1e-12;

  if (std::abs(c3) < tiny) {
    if (std::abs(c2) < tiny) {
      if (std::abs(c1) >= tiny) out.push(-c0 / c1);
      return out;
    }
    const double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc < 0.0) return out;
    const double sq = std::sqrt(disc);
    // Numerically stable pairing.
    const double qv = -0.5 * (c1 + std::copysign(sq, c1));
    if (qv != 0.0) {
      out.push(qv / c2);
      out.push(c0 / qv);
    } else {
      out.push(0.0);
    }
    return out;
  }

  const double b = c2 / c3;
  const double c = c1 / c3;
  const double d = c0 / c3;
  const double shift = b / 3.0;
  const double p = c - b * b / 3.0;
  const double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
  const double disc = q * q / 4.0 + p * p * p / 27.0;

  if (disc > 0.0) {
    const double sq = std::sqrt(disc);
    const double u = std::cbrt(-q / 2.0 + sq);
    const double v = std::cbrt(-q / 2.0 - sq);
    out.push(u + v - shift);
  } else if (p == 0.0) {
    out.push(-shift);
  } else {
    const double r = std::sqrt(-p / 3.0);
    const double arg = std::clamp(3.0 * q / (2.0 * p) * std::sqrt(-3.0 / p), -1.0, 1.0);
    const double phi = std::acos(arg) / 3.0;
    for (int k = 0; k < 3; ++k) out.push(2.0 * r * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0) - shift);
  }
  return out;
}

struct BezierDistance {
  double dist = 0.0;
  double t = 0.0;  // parameter of the nearest point; smallest t on ties
};

/// Exact distance from q to the curve segment, from the stationarity cubic
/// d/dt |B(t) - q|^2 = 0 plus both endpoints.
inline BezierDistance bezier_distance(const ControlPoint& q, const ControlPoint& p1, const ControlPoint& p2,
                                      const ControlPoint& p3) {
  const ControlPoint a = p1 - 2.0 * p2 + p3;
  const ControlPoint b = p2 - p1;
  const ControlPoint c = p1 - q;
  const double c3 = dot(a, a);
  const double c2 = 3.0 * dot(a, b);
  const double c1 = 2.0 * dot(b, b) + dot(a, c);
  const double c0 = dot(b, c);

  std::array<double, 5> cand{};
  int n = 0;
  cand[n++] = 0.0;
  cand[n++] = 1.0;
  const CubicRoots roots = solve_cubic(c3, c2, c1, c0);
  for (int i = 0; i < roots.count; ++i) {
    double t = std::clamp(roots.t[i], 0.0, 1.0);
    for (int it = 0; it < 2; ++it) {
      const double f = ((c3 * t + c2) * t + c1) * t + c0;
      const double df = (3.0 * c3 * t + 2.0 * c2) * t + c1;
      if (df == 0.0) break;
      t = std::clamp(t - f / df, 0.0, 1.0);
    }
    cand[n++] = t;
  }
  std::sort(cand.begin(), cand.begin() + n);

  BezierDistance best{INFINITY, 0.0};
  for (int i = 0; i < n; ++i) {
    const double dd = norm(bezier_point(p1, p2, p3, cand[i]) - q);
    if (dd < best.dist) best = {dd, cand[i]};
  }
  return best;
}

struct Bounds {
  double x0, y0, x1, y1;
};

/// Tight axis-aligned bounds of the curve (extremes at endpoints or the
/// per-axis stationary parameter).
inline Bounds bezier_bounds(const ControlPoint& p1, const ControlPoint& p2, const ControlPoint& p3) {
  Bounds bb{std::min(p1.x, p3.x), std::min(p1.y, p3.y), std::max(p1.x, p3.x), std::max(p1.y, p3.y)};
  auto extend = [&](double a0, double a1, double a2, double& lo, double& hi) {
    const double den = a0 - 2.0 * a1 + a2;
    if (den == 0.0) return;
    const double t = (a0 - a1) / den;
    if (t > 0.0 && t < 1.0) {
      const double u = 1.0 - t;
      const double v = u * u * a0 + 2.0 * t * u * a1 + t * t * a2;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  };
  extend(p1.x, p2.x, p3.x, bb.x0, bb.x1);
  extend(p1.y, p2.y, p3.y, bb.y0, bb.y1);
  return bb;
}

}  // namespace strokesynth
