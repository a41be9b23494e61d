#pragma once

// Planar polygon primitives. Image coordinates: x to the right, y down.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace strokenet {

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
using Polygon2 = std::vector<Point2<Scalar>>;

using Point = Point2<double>;
using Polygon = Polygon2<double>;

template <typename Scalar>
Scalar cross(const Point2<Scalar>& a, const Point2<Scalar>& b) {
  return a.x() * b.y() - a.y() * b.x();
}

// Shoelace signed area; positive for clockwise order on screen (y down).
template <typename Scalar>
Scalar signed_area(const Polygon2<Scalar>& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return Scalar(0);
  Scalar s(0);
  for (std::size_t i = 0; i < n; ++i) s += cross(poly[i], poly[(i + 1) % n]);
  return s / Scalar(2);
}

template <typename Scalar>
Scalar area(const Polygon2<Scalar>& poly) {
  return std::abs(signed_area(poly));
}

// Even-odd point-in-polygon test.
template <typename Scalar>
bool contains(const Polygon2<Scalar>& poly, const Point2<Scalar>& p) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const Scalar xc = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < xc) inside = !inside;
    }
  }
  return inside;
}

template <typename Scalar>
Scalar point_segment_distance(const Point2<Scalar>& p, const Point2<Scalar>& a, const Point2<Scalar>& b) {
  const Point2<Scalar> ab = b - a;
  const Scalar len2 = ab.squaredNorm();
  Scalar t = len2 > Scalar(0) ? (p - a).dot(ab) / len2 : Scalar(0);
  t = std::clamp(t, Scalar(0), Scalar(1));
  return (p - (a + t * ab)).norm();
}

// Proper or touching intersection of closed segments.
template <typename Scalar>
bool segments_intersect(const Point2<Scalar>& p1, const Point2<Scalar>& p2, const Point2<Scalar>& q1,
                        const Point2<Scalar>& q2) {
  auto orient = [](const Point2<Scalar>& a, const Point2<Scalar>& b, const Point2<Scalar>& c) {
    const Scalar v = cross<Scalar>(b - a, c - a);
    return (v > 0) - (v < 0);
  };
  auto on_segment = [](const Point2<Scalar>& a, const Point2<Scalar>& b, const Point2<Scalar>& c) {
    return std::min(a.x(), b.x()) <= c.x() && c.x() <= std::max(a.x(), b.x()) &&
           std::min(a.y(), b.y()) <= c.y() && c.y() <= std::max(a.y(), b.y());
  };
  const int o1 = orient(p1, p2, q1);
  const int o2 = orient(p1, p2, q2);
  const int o3 = orient(q1, q2, p1);
  const int o4 = orient(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

// True when no two non-adjacent edges meet and the area is positive.
template <typename Scalar>
bool is_simple(const Polygon2<Scalar>& poly) {
  const std::size_t n = poly.size();
  if (n < 3 || area(poly) <= Scalar(0)) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a1 = poly[i];
    const auto& a2 = poly[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(a1, a2, poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

// Andrew's monotone chain; counter-clockwise in math orientation, collinear
// points dropped.
template <typename Scalar>
Polygon2<Scalar> convex_hull(Polygon2<Scalar> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point2<Scalar>& a, const Point2<Scalar>& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  Polygon2<Scalar> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross<Scalar>(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross<Scalar>(hull[k - 1] - hull[k - 2], pts[i - 1] - hull[k - 2]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

// Sutherland-Hodgman clip of `subject` by the convex polygon `clip`.
template <typename Scalar>
Polygon2<Scalar> clip_convex(const Polygon2<Scalar>& subject, Polygon2<Scalar> clip) {
  if (subject.size() < 3 || clip.size() < 3) return {};
  if (signed_area(clip) < 0) std::reverse(clip.begin(), clip.end());
  Polygon2<Scalar> out = subject;
  const std::size_t m = clip.size();
  for (std::size_t e = 0; e < m && !out.empty(); ++e) {
    const Point2<Scalar>& a = clip[e];
    const Point2<Scalar>& b = clip[(e + 1) % m];
    const Point2<Scalar> ab = b - a;
    auto side = [&](const Point2<Scalar>& p) { return cross<Scalar>(ab, p - a); };
    Polygon2<Scalar> in = std::move(out);
    out.clear();
    for (std::size_t i = 0; i < in.size(); ++i) {
      const Point2<Scalar>& cur = in[i];
      const Point2<Scalar>& prev = in[(i + in.size() - 1) % in.size()];
      const Scalar sc = side(cur);
      const Scalar sp = side(prev);
      if (sc >= 0) {
        if (sp < 0) out.push_back(prev + (cur - prev) * (sp / (sp - sc)));
        out.push_back(cur);
      } else if (sp >= 0) {
        out.push_back(prev + (cur - prev) * (sp / (sp - sc)));
      }
    }
  }
  return out;
}

template <typename Scalar>
Scalar convex_intersection_area(const Polygon2<Scalar>& a, const Polygon2<Scalar>& b) {
  return area(clip_convex(a, b));
}

template <typename Scalar>
Scalar convex_iou(const Polygon2<Scalar>& a, const Polygon2<Scalar>& b) {
  const Scalar inter = convex_intersection_area(a, b);
  const Scalar uni = area(a) + area(b) - inter;
  return uni > Scalar(0) ? inter / uni : Scalar(0);
}

// Degrees to an exact (cos, sin) pair for multiples of 90.
inline std::pair<double, double> rotation_degrees(double degrees) {
  double d = std::fmod(degrees, 360.0);
  if (d < 0) d += 360.0;
  if (d == 0.0) return {1.0, 0.0};
  if (d == 90.0) return {0.0, 1.0};
  if (d == 180.0) return {-1.0, 0.0};
  if (d == 270.0) return {0.0, -1.0};
  const double r = d * 3.14159265358979323846 / 180.0;
  return {std::cos(r), std::sin(r)};
}

}  // namespace strokenet
