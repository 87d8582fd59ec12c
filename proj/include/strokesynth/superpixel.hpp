#pragma once

// SLIC superpixels: localized k-means over (CIELAB, xy) with grid seeding,
// followed by connectivity enforcement.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

#include "core.hpp"
#include "parallel.hpp"

namespace strokesynth {

struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<int> labels;  // row-major
  int region_count = 0;

  int at(int x, int y) const { return labels[std::size_t(y) * std::size_t(width) + std::size_t(x)]; }
  std::size_t pixel_count() const noexcept { return labels.size(); }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

// ---------------------------------------------------------------------------
// Color

struct Lab {
  double l, a, b;
};

inline Lab srgb_to_lab(double r, double g, double b) {
  auto lin = [](double c) { return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4); };
  const double rl = lin(r), gl = lin(g), bl = lin(b);
  // sRGB -> XYZ, D65
  const double x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
  const double y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
  const double z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
  constexpr double xn = 0.95047, yn = 1.0, zn = 1.08883;
  auto f = [](double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
  };
  const double fx = f(x / xn), fy = f(y / yn), fz = f(z / zn);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

inline RasterImage rgb_to_lab(const RasterImage& img) {
  if (img.channels() != 3) fail("rgb_to_lab: expected a 3-channel RGB image");
  RasterImage out(img.width(), img.height(), 3);
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const Lab lab = srgb_to_lab(src[3 * i], src[3 * i + 1], src[3 * i + 2]);
    dst[3 * i] = lab.l;
    dst[3 * i + 1] = lab.a;
    dst[3 * i + 2] = lab.b;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Connectivity

/// Splits every label into its 4-connected components, folds components
/// smaller than (pixels / expected_regions) / 4 into their largest adjacent
/// component, and renumbers labels densely in row-major first-seen order.
inline LabelMap enforce_connectivity(const LabelMap& lm, int expected_regions = 0) {
  const int w = lm.width, h = lm.height;
  const std::size_t n = lm.pixel_count();
  if (n == 0) return lm;
  if (expected_regions <= 0) expected_regions = std::max(1, lm.region_count);

  // 4-connected components of equal label.
  std::vector<int> comp(n, -1);
  std::vector<std::size_t> comp_size;
  std::vector<std::size_t> queue;
  queue.reserve(n);
  for (std::size_t start = 0; start < n; ++start) {
    if (comp[start] >= 0) continue;
    const int id = int(comp_size.size());
    const int label = lm.labels[start];
    queue.clear();
    queue.push_back(start);
    comp[start] = id;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t p = queue[head];
      const int x = int(p % std::size_t(w)), y = int(p / std::size_t(w));
      const int nx[4] = {x - 1, x + 1, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
        const std::size_t np = std::size_t(ny[k]) * std::size_t(w) + std::size_t(nx[k]);
        if (comp[np] < 0 && lm.labels[np] == label) {
          comp[np] = id;
          queue.push_back(np);
        }
      }
    }
    comp_size.push_back(queue.size());
  }
  const std::size_t ncomp = comp_size.size();

  std::vector<std::set<int>> adjacent(ncomp);
  auto link = [&](int a, int b) {
    adjacent[std::size_t(a)].insert(b);
    adjacent[std::size_t(b)].insert(a);
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int c = comp[std::size_t(y) * std::size_t(w) + std::size_t(x)];
      if (x + 1 < w) {
        const int d = comp[std::size_t(y) * std::size_t(w) + std::size_t(x + 1)];
        if (d != c) link(c, d);
      }
      if (y + 1 < h) {
        const int d = comp[std::size_t(y + 1) * std::size_t(w) + std::size_t(x)];
        if (d != c) link(c, d);
      }
    }

  // Union-find; the root of a group is its smallest component id.
  std::vector<int> parent(ncomp);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int c) {
    while (parent[std::size_t(c)] != c) {
      parent[std::size_t(c)] = parent[std::size_t(parent[std::size_t(c)])];
      c = parent[std::size_t(c)];
    }
    return c;
  };
  std::vector<std::size_t> group_size = comp_size;
  const double threshold = double(n) / double(expected_regions) / 4.0;

  for (int c = 0; c < int(ncomp); ++c) {
    const int root = find(c);
    if (double(group_size[std::size_t(root)]) >= threshold) continue;
    int best = -1;
    for (int nb : adjacent[std::size_t(root)]) {
      const int r = find(nb);
      if (r == root) continue;
      if (best < 0 || group_size[std::size_t(r)] > group_size[std::size_t(best)] ||
          (group_size[std::size_t(r)] == group_size[std::size_t(best)] && r < best))
        best = r;
    }
    if (best < 0) continue;
    const int keep = std::min(root, best), drop = std::max(root, best);
    parent[std::size_t(drop)] = keep;
    group_size[std::size_t(keep)] += group_size[std::size_t(drop)];
    adjacent[std::size_t(keep)].insert(adjacent[std::size_t(drop)].begin(), adjacent[std::size_t(drop)].end());
    adjacent[std::size_t(drop)].clear();
  }

  LabelMap out{w, h, std::vector<int>(n, -1), 0};
  std::vector<int> dense(ncomp, -1);
  for (std::size_t p = 0; p < n; ++p) {
    const int r = find(comp[p]);
    if (dense[std::size_t(r)] < 0) dense[std::size_t(r)] = out.region_count++;
    out.labels[p] = dense[std::size_t(r)];
  }
  return out;
}

// ---------------------------------------------------------------------------
// SLIC

struct SlicParams {
  int regions = 100;
  double compactness = 10.0;
  int iterations = 10;
};

namespace detail {

struct SlicCenter {
  double l, a, b, x, y;
};

/// Grid shape with ny rows and nx columns, nx * ny close to k.
inline std::pair<int, int> slic_grid(int k, int w, int h) {
  int ny = std::max(1, int(std::floor(std::sqrt(double(k) * double(h) / double(w)))));
  ny = std::min(ny, h);
  int nx = std::max(1, int(std::lround(double(k) / double(ny))));
  nx = std::min(nx, w);
  return {nx, ny};
}

}  // namespace detail

inline LabelMap slic_segment(const RasterImage& img, const SlicParams& params) {
  if (img.empty() || img.width() == 0 || img.height() == 0) fail("slic_segment: empty image");
  const int k = params.regions;
  if (k < 1) fail("slic_segment: region count must be >= 1");
  if (std::size_t(k) > img.pixel_count()) fail("slic_segment: region count exceeds the pixel count");
  if (params.iterations < 1) fail("slic_segment: iterations must be >= 1");
  if (!(params.compactness > 0)) fail("slic_segment: compactness must be > 0");

  RasterImage rgb = img;
  if (img.channels() == 1) {
    rgb = RasterImage(img.width(), img.height(), 3);
    for (std::size_t i = 0; i < img.pixel_count(); ++i)
      for (std::size_t c = 0; c < 3; ++c) rgb.data()[3 * i + c] = img.data()[i];
  }
  const RasterImage lab = rgb_to_lab(rgb);
  const int w = img.width(), h = img.height();
  const std::size_t n = img.pixel_count();
  auto L = [&](int x, int y, int c) { return lab.at(x, y, c); };

  auto gradient = [&](int x, int y) {
    const int xl = std::max(0, x - 1), xr = std::min(w - 1, x + 1);
    const int yu = std::max(0, y - 1), yd = std::min(h - 1, y + 1);
    double g = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double gx = L(xr, y, c) - L(xl, y, c);
      const double gy = L(x, yd, c) - L(x, yu, c);
      g += gx * gx + gy * gy;
    }
    return g;
  };

  const auto [nx, ny] = detail::slic_grid(k, w, h);
  const double step_x = double(w) / nx, step_y = double(h) / ny;
  std::vector<detail::SlicCenter> centers;
  centers.reserve(std::size_t(nx) * std::size_t(ny));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int cx = std::min(w - 1, int((i + 0.5) * step_x));
      const int cy = std::min(h - 1, int((j + 0.5) * step_y));
      // Move to the lowest-gradient pixel of the 3x3 neighborhood (center wins ties).
      int bx = cx, by = cy;
      double bg = gradient(cx, cy);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int x = cx + dx, y = cy + dy;
          if (x < 0 || y < 0 || x >= w || y >= h) continue;
          const double g = gradient(x, y);
          if (g < bg) bg = g, bx = x, by = y;
        }
      centers.push_back({L(bx, by, 0), L(bx, by, 1), L(bx, by, 2), double(bx), double(by)});
    }

  // Every pixel starts in its grid cell so unreached pixels still carry a label.
  std::vector<int> labels(n);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int gi = std::min(nx - 1, int(x / step_x));
      const int gj = std::min(ny - 1, int(y / step_y));
      labels[std::size_t(y) * std::size_t(w) + std::size_t(x)] = gj * nx + gi;
    }

  const double S = std::sqrt(double(n) / double(k));
  const double spatial = (params.compactness / S) * (params.compactness / S);
  const int radius = int(std::ceil(std::max({S, step_x, step_y})));
  std::vector<double> dist(n);

  for (int iter = 0; iter < params.iterations; ++iter) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    // Rows are independent; centers are visited in label order so ties go to
    // the lowest label.
    std::vector<std::vector<int>> row_centers(std::size_t(h), std::vector<int>{});
    for (int c = 0; c < int(centers.size()); ++c) {
      const int cy = int(std::lround(centers[std::size_t(c)].y));
      for (int y = std::max(0, cy - radius); y <= std::min(h - 1, cy + radius); ++y)
        row_centers[std::size_t(y)].push_back(c);
    }
    parallel_for(std::size_t(h), [&](std::size_t yi) {
      const int y = int(yi);
      for (int c : row_centers[yi]) {
        const auto& ctr = centers[std::size_t(c)];
        const int cx = int(std::lround(ctr.x));
        for (int x = std::max(0, cx - radius); x <= std::min(w - 1, cx + radius); ++x) {
          const double dl = L(x, y, 0) - ctr.l, da = L(x, y, 1) - ctr.a, db = L(x, y, 2) - ctr.b;
          const double dx = x - ctr.x, dy = y - ctr.y;
          const double d = dl * dl + da * da + db * db + spatial * (dx * dx + dy * dy);
          const std::size_t p = yi * std::size_t(w) + std::size_t(x);
          if (d < dist[p]) {
            dist[p] = d;
            labels[p] = c;
          }
        }
      }
    });

    std::vector<detail::SlicCenter> sum(centers.size(), {0, 0, 0, 0, 0});
    std::vector<std::size_t> count(centers.size(), 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int c = labels[std::size_t(y) * std::size_t(w) + std::size_t(x)];
        auto& s = sum[std::size_t(c)];
        s.l += L(x, y, 0), s.a += L(x, y, 1), s.b += L(x, y, 2), s.x += x, s.y += y;
        ++count[std::size_t(c)];
      }
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (count[c] == 0) continue;
      const double inv = 1.0 / double(count[c]);
      centers[c] = {sum[c].l * inv, sum[c].a * inv, sum[c].b * inv, sum[c].x * inv, sum[c].y * inv};
    }
  }

  LabelMap raw{w, h, std::move(labels), int(centers.size())};
  return enforce_connectivity(raw, k);
}

inline LabelMap slic_segment(const RasterImage& img, int regions, double compactness = 10.0, int iterations = 10) {
  return slic_segment(img, SlicParams{regions, compactness, iterations});
}

}  // namespace strokesynth
