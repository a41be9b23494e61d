#include "strokenet/raster.hpp"

#include <algorithm>
#include <cmath>

namespace strokenet {

std::vector<std::pair<int, int>> polygon_pixels(const Polygon& poly, ImageSize size) {
  std::vector<std::pair<int, int>> out;
  if (poly.size() < 3) return out;
  double minx = poly[0].x(), maxx = minx, miny = poly[0].y(), maxy = miny;
  for (const auto& p : poly) {
    minx = std::min(minx, p.x());
    maxx = std::max(maxx, p.x());
    miny = std::min(miny, p.y());
    maxy = std::max(maxy, p.y());
  }
  const int x0 = std::max(0, static_cast<int>(std::floor(minx - 0.5)));
  const int x1 = std::min(size.width - 1, static_cast<int>(std::ceil(maxx)));
  const int y0 = std::max(0, static_cast<int>(std::floor(miny - 0.5)));
  const int y1 = std::min(size.height - 1, static_cast<int>(std::ceil(maxy)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (contains(poly, pixel_center(y, x))) out.emplace_back(y, x);
  return out;
}

MaskPlane rasterize_polygon(const Polygon& poly, ImageSize size) {
  MaskPlane m = MaskPlane::Zero(size.height, size.width);
  for (const auto& [y, x] : polygon_pixels(poly, size)) m(y, x) = 1;
  return m;
}

LabelPlane connected_components(const MaskPlane& mask, int* count) {
  const int h = static_cast<int>(mask.rows());
  const int w = static_cast<int>(mask.cols());
  LabelPlane label = LabelPlane::Constant(h, w, -1);
  int next = 0;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask(y, x) == 0 || label(y, x) >= 0) continue;
      label(y, x) = next;
      stack.emplace_back(y, x);
      while (!stack.empty()) {
        auto [cy, cx] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int ny = cy + dy;
            const int nx = cx + dx;
            if (ny < 0 || nx < 0 || ny >= h || nx >= w) continue;
            if (mask(ny, nx) == 0 || label(ny, nx) >= 0) continue;
            label(ny, nx) = next;
            stack.emplace_back(ny, nx);
          }
        }
      }
      ++next;
    }
  }
  if (count != nullptr) *count = next;
  return label;
}

Rect mask_bounds(const MaskPlane& mask) {
  Rect r{static_cast<int>(mask.cols()), static_cast<int>(mask.rows()), 0, 0};
  bool any = false;
  for (int y = 0; y < mask.rows(); ++y) {
    for (int x = 0; x < mask.cols(); ++x) {
      if (mask(y, x) == 0) continue;
      any = true;
      r.x0 = std::min(r.x0, x);
      r.y0 = std::min(r.y0, y);
      r.x1 = std::max(r.x1, x + 1);
      r.y1 = std::max(r.y1, y + 1);
    }
  }
  return any ? r : Rect{};
}

}  // namespace strokenet
