#include "strokenet/labels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace strokenet {

GeometryMaps GeometryMaps::zeros(ImageSize size) {
  GeometryMaps m;
  const auto h = size.height;
  const auto w = size.width;
  m.ta = Plane::Zero(h, w);
  m.tca = Plane::Zero(h, w);
  m.h1 = Plane::Zero(h, w);
  m.h2 = Plane::Zero(h, w);
  m.sin_theta = Plane::Zero(h, w);
  m.cos_theta = Plane::Zero(h, w);
  m.height = Plane::Zero(h, w);
  m.valid_mask = MaskPlane::Zero(h, w);
  return m;
}

bool is_valid_text_polygon(const Polygon& polygon) {
  return polygon.size() >= 4 && polygon.size() % 2 == 0 && is_simple(polygon);
}

std::pair<Polygon, Polygon> polygon_sides(const Polygon& polygon) {
  const std::size_t k = polygon.size() / 2;
  Polygon top(polygon.begin(), polygon.begin() + static_cast<std::ptrdiff_t>(k));
  Polygon bottom(polygon.rbegin(), polygon.rbegin() + static_cast<std::ptrdiff_t>(k));
  return {top, bottom};
}

std::pair<double, double> normalize_angle(double raw_sin, double raw_cos) {
  const double n = std::hypot(raw_sin, raw_cos);
  if (n < 1e-8) throw std::domain_error("undefined orientation");
  return {raw_sin / n, raw_cos / n};
}

Polygon shrink_to_tca(const Polygon& polygon, double shrink_ratio, double end_trim) {
  if (shrink_ratio < 0.0 || shrink_ratio >= 0.5)
    throw std::invalid_argument("shrink_to_tca: shrink_ratio must lie in [0, 0.5)");
  if (polygon.size() < 4 || polygon.size() % 2 != 0)
    throw std::invalid_argument("shrink_to_tca: polygon needs an even vertex count >= 4");
  auto [top, bottom] = polygon_sides(polygon);
  const std::size_t k = top.size();

  Polygon st(k), sb(k);
  std::vector<double> arc(k, 0.0);
  std::vector<double> height(k);
  Point prev_center;
  for (std::size_t i = 0; i < k; ++i) {
    st[i] = top[i] + shrink_ratio * (bottom[i] - top[i]);
    sb[i] = bottom[i] + shrink_ratio * (top[i] - bottom[i]);
    height[i] = (top[i] - bottom[i]).norm();
    const Point c = 0.5 * (top[i] + bottom[i]);
    if (i > 0) arc[i] = arc[i - 1] + (c - prev_center).norm();
    prev_center = c;
  }
  if (end_trim <= 0.0) {
    Polygon out = st;
    out.insert(out.end(), sb.rbegin(), sb.rend());
    return out;
  }

  const double total = arc.back();
  const double start = end_trim * height.front();
  const double stop = total - end_trim * height.back();
  if (stop <= start) return {};

  auto interp = [&](double s) {
    std::size_t i = 0;
    while (i + 2 < k && arc[i + 1] < s) ++i;
    const double seg = arc[i + 1] - arc[i];
    const double t = seg > 0 ? (s - arc[i]) / seg : 0.0;
    return std::pair<Point, Point>{st[i] + t * (st[i + 1] - st[i]), sb[i] + t * (sb[i + 1] - sb[i])};
  };

  Polygon out_top, out_bottom;
  auto first = interp(start);
  out_top.push_back(first.first);
  out_bottom.push_back(first.second);
  for (std::size_t i = 0; i < k; ++i) {
    if (arc[i] > start && arc[i] < stop) {
      out_top.push_back(st[i]);
      out_bottom.push_back(sb[i]);
    }
  }
  auto last = interp(stop);
  out_top.push_back(last.first);
  out_bottom.push_back(last.second);

  Polygon out = out_top;
  out.insert(out.end(), out_bottom.rbegin(), out_bottom.rend());
  return out;
}

namespace {

struct PolylineHit {
  double distance = std::numeric_limits<double>::infinity();
  std::size_t segment = 0;
};

PolylineHit nearest_segment(const Polygon& line, const Point& p) {
  PolylineHit best;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const double d = point_segment_distance(p, line[i], line[i + 1]);
    if (d < best.distance) {
      best.distance = d;
      best.segment = i;
    }
  }
  return best;
}

Polygon clip_to_image(const Polygon& poly, ImageSize size) {
  Polygon out = poly;
  for (auto& p : out) {
    p.x() = std::clamp(p.x(), 0.0, static_cast<double>(size.width));
    p.y() = std::clamp(p.y(), 0.0, static_cast<double>(size.height));
  }
  return out;
}

}  // namespace

LabelResult make_geometry_maps(const std::vector<TextAnnotation>& annotations, ImageSize image_size,
                               const LabelOptions& options) {
  if (image_size.width <= 0 || image_size.height <= 0)
    throw std::invalid_argument("make_geometry_maps: image size must be positive");
  LabelResult result;
  result.maps = GeometryMaps::zeros(image_size);
  result.instance = LabelPlane::Constant(image_size.height, image_size.width, -1);
  GeometryMaps& m = result.maps;

  for (std::size_t idx = 0; idx < annotations.size(); ++idx) {
    const Polygon poly = clip_to_image(annotations[idx].polygon, image_size);
    if (poly.size() < 4 || poly.size() % 2 != 0) {
      result.warnings.push_back("instance " + std::to_string(idx) + ": polygon needs an even vertex count >= 4");
      continue;
    }
    if (area(poly) < 1.0) {
      result.warnings.push_back("instance " + std::to_string(idx) + ": degenerate polygon skipped");
      continue;
    }
    const auto [top, bottom] = polygon_sides(poly);
    for (const auto& [y, x] : polygon_pixels(poly, image_size)) {
      const Point c = pixel_center(y, x);
      const PolylineHit up = nearest_segment(top, c);
      const PolylineHit down = nearest_segment(bottom, c);
      const Point dir = top[up.segment + 1] - top[up.segment];
      double s = 0.0, co = 1.0;
      if (dir.norm() > 1e-12) std::tie(s, co) = normalize_angle(dir.y(), dir.x());
      m.ta(y, x) = 1.0;
      m.h1(y, x) = up.distance;
      m.h2(y, x) = down.distance;
      m.height(y, x) = up.distance + down.distance;
      m.sin_theta(y, x) = s;
      m.cos_theta(y, x) = co;
      m.valid_mask(y, x) = 1;
      result.instance(y, x) = static_cast<int>(idx);
    }
    const Polygon tca = shrink_to_tca(poly, options.shrink_ratio, options.end_trim);
    if (tca.size() < 3) continue;
    for (const auto& [y, x] : polygon_pixels(tca, image_size)) {
      if (result.instance(y, x) == static_cast<int>(idx)) m.tca(y, x) = 1.0;
    }
  }
  return result;
}

Rect outer_rectangle(const MaskPlane& region) {
  Rect r = mask_bounds(region);
  if (r.empty()) throw std::invalid_argument("outer_rectangle: empty region");
  return r;
}

Rect outer_rectangle(const Polygon& polygon, ImageSize size) {
  if (polygon.empty()) throw std::invalid_argument("outer_rectangle: empty polygon");
  double minx = polygon[0].x(), maxx = minx, miny = polygon[0].y(), maxy = miny;
  for (const auto& p : polygon) {
    minx = std::min(minx, p.x());
    maxx = std::max(maxx, p.x());
    miny = std::min(miny, p.y());
    maxy = std::max(maxy, p.y());
  }
  Rect r{static_cast<int>(std::floor(minx)), static_cast<int>(std::floor(miny)),
         static_cast<int>(std::ceil(maxx)), static_cast<int>(std::ceil(maxy))};
  r.x0 = std::clamp(r.x0, 0, size.width);
  r.x1 = std::clamp(r.x1, 0, size.width);
  r.y0 = std::clamp(r.y0, 0, size.height);
  r.y1 = std::clamp(r.y1, 0, size.height);
  if (r.empty()) throw std::invalid_argument("outer_rectangle: polygon outside image");
  return r;
}

}  // namespace strokenet
