#pragma once

// Shared value types: control points, strokes, stroke sets, raster images
// and the optimizer / transport configurations.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace strokesynth {

// Error kinds map onto CLI exit codes (1 for Validation/Io, 2 for Unsupported).
enum class ErrorKind { Validation, Io, Unsupported };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(const std::string& what) { throw Error(ErrorKind::Validation, what); }

struct ControlPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const ControlPoint&, const ControlPoint&) = default;
};

inline ControlPoint operator+(ControlPoint a, ControlPoint b) { return {a.x + b.x, a.y + b.y}; }
inline ControlPoint operator-(ControlPoint a, ControlPoint b) { return {a.x - b.x, a.y - b.y}; }
inline ControlPoint operator*(double s, ControlPoint a) { return {s * a.x, s * a.y}; }
inline double dot(ControlPoint a, ControlPoint b) { return a.x * b.x + a.y * b.y; }
inline double norm(ControlPoint a) { return std::hypot(a.x, a.y); }

struct Rgba {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
  double a = 1.0;

  double& operator[](std::size_t i) { return i == 0 ? r : i == 1 ? g : i == 2 ? b : a; }
  double operator[](std::size_t i) const { return i == 0 ? r : i == 1 ? g : i == 2 ? b : a; }

  friend bool operator==(const Rgba&, const Rgba&) = default;
};

/// One quadratic Bezier paint stroke: p1 -> p3 with control point p2.
struct Stroke {
  std::array<ControlPoint, 3> points{};
  Rgba color{};
  double width = 1.0;

  friend bool operator==(const Stroke&, const Stroke&) = default;
};

/// Painting order is list order.
struct StrokeSet {
  std::vector<Stroke> strokes;
  int canvas_width = 0;
  int canvas_height = 0;

  std::size_t size() const noexcept { return strokes.size(); }
  double diagonal() const { return std::hypot(double(canvas_width), double(canvas_height)); }
  double max_width() const { return diagonal() / 4.0; }

  friend bool operator==(const StrokeSet&, const StrokeSet&) = default;
};

inline constexpr double kMinStrokeWidth = 0.5;

/// Dense row-major image, interleaved channels, values nominally in [0,1].
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, int channels, double fill = 0.0)
      : width_(width), height_(height), channels_(channels) {
    if (width < 0 || height < 0) fail("RasterImage: negative dimensions");
    if (channels != 1 && channels != 3) fail("RasterImage: channels must be 1 or 3");
    data_.assign(std::size_t(width) * std::size_t(height) * std::size_t(channels), fill);
  }
  RasterImage(int width, int height, int channels, std::vector<double> data)
      : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    if (channels != 1 && channels != 3) fail("RasterImage: channels must be 1 or 3");
    if (data_.size() != std::size_t(width) * std::size_t(height) * std::size_t(channels))
      fail("RasterImage: data length does not match width*height*channels");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept { return std::size_t(width_) * std::size_t(height_); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  double at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_shape(const RasterImage& o) const noexcept {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return (std::size_t(y) * std::size_t(width_) + std::size_t(x)) * std::size_t(channels_) + std::size_t(c);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 3;
  std::vector<double> data_;
};

struct OptimConfig {
  double lr_points = 1.0;
  double lr_width = 0.1;
  double lr_color = 0.05;
  int steps = 250;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const {
    if (!(lr_points > 0 && lr_width > 0 && lr_color > 0)) fail("OptimConfig: learning rates must be > 0");
    if (steps < 0) fail("OptimConfig: steps must be >= 0");
    if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1))
      fail("OptimConfig: Adam betas must lie in [0,1)");
    if (!(adam_eps > 0)) fail("OptimConfig: adam_eps must be > 0");
  }
};

enum class OtCost { SqEuclidean, Euclidean };

struct SinkhornConfig {
  int grid_size = 64;
  double reg = 0.01;
  int max_iters = 200;
  double marginal_tol = 1e-6;
  OtCost cost = OtCost::SqEuclidean;
  // Conjugate-gradient settings for the plan-cost gradient.
  double adjoint_tol = 1e-8;
  int adjoint_max_iters = 500;

  void validate() const {
    if (grid_size < 2) fail("SinkhornConfig: grid_size must be >= 2");
    if (!(reg > 0)) fail("SinkhornConfig: reg must be > 0");
    if (max_iters < 1) fail("SinkhornConfig: max_iters must be >= 1");
    if (!(marginal_tol > 0)) fail("SinkhornConfig: marginal_tol must be > 0");
  }
};

// ---------------------------------------------------------------------------
// Parameter groups

/// Optimizer view of a StrokeSet: three groups with independent learning rates.
/// points: per stroke (p1.x, p1.y, p2.x, p2.y, p3.x, p3.y); colors: per stroke (r, g, b, a).
struct FlatParams {
  std::vector<double> points;
  std::vector<double> widths;
  std::vector<double> colors;

  friend bool operator==(const FlatParams&, const FlatParams&) = default;
};

inline constexpr std::size_t kPointsPerStroke = 6;
inline constexpr std::size_t kColorsPerStroke = 4;

inline FlatParams flatten_params(const StrokeSet& s) {
  FlatParams f;
  f.points.reserve(s.size() * kPointsPerStroke);
  f.widths.reserve(s.size());
  f.colors.reserve(s.size() * kColorsPerStroke);
  for (const Stroke& st : s.strokes) {
    for (const ControlPoint& p : st.points) {
      f.points.push_back(p.x);
      f.points.push_back(p.y);
    }
    f.widths.push_back(st.width);
    for (std::size_t c = 0; c < kColorsPerStroke; ++c) f.colors.push_back(st.color[c]);
  }
  return f;
}

/// Writes the flat groups back into a StrokeSet shaped like `like`.
inline StrokeSet unflatten_params(const FlatParams& f, const StrokeSet& like) {
  const std::size_t n = like.size();
  if (f.points.size() != n * kPointsPerStroke || f.widths.size() != n || f.colors.size() != n * kColorsPerStroke)
    fail("unflatten_params: parameter group sizes do not match the stroke count");
  StrokeSet out = like;
  for (std::size_t i = 0; i < n; ++i) {
    Stroke& st = out.strokes[i];
    for (std::size_t k = 0; k < 3; ++k) {
      st.points[k].x = f.points[i * kPointsPerStroke + 2 * k];
      st.points[k].y = f.points[i * kPointsPerStroke + 2 * k + 1];
    }
    st.width = f.widths[i];
    for (std::size_t c = 0; c < kColorsPerStroke; ++c) st.color[c] = f.colors[i * kColorsPerStroke + c];
  }
  return out;
}

namespace detail {
inline void require_finite(double v, std::size_t stroke, const char* field) {
  if (!std::isfinite(v))
    fail("non-finite parameter at stroke " + std::to_string(stroke) + ", field " + field);
}
}  // namespace detail

/// Projects every stroke back into its valid domain. Control points are left alone.
inline StrokeSet clamp_params(StrokeSet s) {
  const double wmax = std::max(kMinStrokeWidth, s.max_width());
  for (std::size_t i = 0; i < s.strokes.size(); ++i) {
    Stroke& st = s.strokes[i];
    static constexpr const char* kPointFields[] = {"p1.x", "p1.y", "p2.x", "p2.y", "p3.x", "p3.y"};
    for (std::size_t k = 0; k < 3; ++k) {
      detail::require_finite(st.points[k].x, i, kPointFields[2 * k]);
      detail::require_finite(st.points[k].y, i, kPointFields[2 * k + 1]);
    }
    detail::require_finite(st.width, i, "width");
    static constexpr const char* kColorFields[] = {"color.r", "color.g", "color.b", "color.a"};
    for (std::size_t c = 0; c < kColorsPerStroke; ++c) {
      detail::require_finite(st.color[c], i, kColorFields[c]);
      st.color[c] = std::clamp(st.color[c], 0.0, 1.0);
    }
    st.width = std::clamp(st.width, kMinStrokeWidth, wmax);
  }
  return s;
}

}  // namespace strokesynth
