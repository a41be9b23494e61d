#pragma once

#include "strokenet/geometry.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace strokenet {

// Row-major planes indexed (y, x). Pixel (y, x) samples at (x + 0.5, y + 0.5).
using Plane = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using LabelPlane = Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MaskPlane = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ImageSize {
  int width = 0;
  int height = 0;
};

// Half-open integer rectangle [x0, x1) x [y0, y1).
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  bool operator==(const Rect&) const = default;
};

// Interleaved 8-bit RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
};

inline Point pixel_center(int y, int x) { return Point(x + 0.5, y + 0.5); }

// Pixels whose centres fall inside the polygon (even-odd rule), clipped to
// the image.
std::vector<std::pair<int, int>> polygon_pixels(const Polygon& poly, ImageSize size);

MaskPlane rasterize_polygon(const Polygon& poly, ImageSize size);

// 8-connected components of a binary mask; background is -1, components are
// numbered from 0 in raster-scan order of their first pixel.
LabelPlane connected_components(const MaskPlane& mask, int* count);

// Tight bounding rectangle of the non-zero pixels; empty Rect when none.
Rect mask_bounds(const MaskPlane& mask);

// Deterministic random source: the mapping from engine output to values is
// fixed here rather than delegated to library distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Inclusive range.
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(engine_() % span);
  }
  double normal() {
    // Box-Muller on two fixed uniforms.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
  bool bernoulli(double p) { return uniform() < p; }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace strokenet
