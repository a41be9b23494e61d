#include "strokenet/proposals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace strokenet {

Polygon Proposal::quad() const {
  const Point d = direction() * (0.5 * width);
  const Point top = up() * h1;
  const Point bottom = -up() * h2;
  return {center - d + top, center + d + top, center + d + bottom, center - d + bottom};
}

namespace {

struct ComponentView {
  const LabelPlane& labels;
  int id;

  bool inside(const Point& p) const {
    const int x = static_cast<int>(std::floor(p.x()));
    const int y = static_cast<int>(std::floor(p.y()));
    if (x < 0 || y < 0 || y >= labels.rows() || x >= labels.cols()) return false;
    return labels(y, x) == id;
  }
};

std::pair<int, int> pixel_of(const Point& p, const GeometryMaps& m) {
  const int x = std::clamp(static_cast<int>(std::floor(p.x())), 0, m.width() - 1);
  const int y = std::clamp(static_cast<int>(std::floor(p.y())), 0, m.rows() - 1);
  return {y, x};
}

Point direction_at(const GeometryMaps& m, const Point& p) {
  const auto [y, x] = pixel_of(p, m);
  const double s = m.sin_theta(y, x);
  const double c = m.cos_theta(y, x);
  const double n = std::hypot(s, c);
  if (n < 1e-8) return Point(1.0, 0.0);
  return Point(c / n, s / n);
}

// Moves p to the middle of the component's cross-section along the normal.
Point recenter(const Point& p, const Point& dir, const ComponentView& comp, double limit) {
  const Point n(dir.y(), -dir.x());
  constexpr double step = 0.5;
  double plus = 0.0;
  while (plus + step <= limit && comp.inside(p + (plus + step) * n)) plus += step;
  double minus = 0.0;
  while (minus + step <= limit && comp.inside(p - (minus + step) * n)) minus += step;
  return p + 0.5 * (plus - minus) * n;
}

std::vector<Point> trace(const Point& start, Point dir, const GeometryMaps& m, const ComponentView& comp,
                         std::size_t max_steps, double limit) {
  std::vector<Point> pts;
  Point p = start;
  for (std::size_t i = 0; i < max_steps; ++i) {
    const Point q = p + dir;
    if (!comp.inside(q)) break;
    Point nd = direction_at(m, q);
    if (nd.dot(dir) < 0) nd = -nd;
    const Point r = recenter(q, nd, comp, limit);
    if (!comp.inside(r)) break;
    pts.push_back(r);
    p = r;
    dir = nd;
  }
  return pts;
}

}  // namespace

std::vector<Proposal> extract_text_proposals(const GeometryMaps& pred, const ExtractOptions& opt) {
  if (opt.ta_thresh <= 0 || opt.ta_thresh >= 1 || opt.tca_thresh <= 0 || opt.tca_thresh >= 1)
    throw std::invalid_argument("extract_text_proposals: thresholds must lie in (0, 1)");
  const int h = pred.rows();
  const int w = pred.width();
  MaskPlane mask = MaskPlane::Zero(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      mask(y, x) = (pred.tca(y, x) >= opt.tca_thresh && pred.ta(y, x) >= opt.ta_thresh) ? 1 : 0;
  int count = 0;
  const LabelPlane labels = connected_components(mask, &count);

  std::vector<std::vector<std::pair<int, int>>> pixels(static_cast<std::size_t>(count));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (labels(y, x) >= 0) pixels[static_cast<std::size_t>(labels(y, x))].emplace_back(y, x);

  std::vector<Proposal> out;
  for (int id = 0; id < count; ++id) {
    const auto& px = pixels[static_cast<std::size_t>(id)];
    ComponentView comp{labels, id};
    Point centroid = Point::Zero();
    for (const auto& [y, x] : px) centroid += pixel_center(y, x);
    centroid /= static_cast<double>(px.size());
    Point start = pixel_center(px.front().first, px.front().second);
    double best = (start - centroid).squaredNorm();
    for (const auto& [y, x] : px) {
      const double d = (pixel_center(y, x) - centroid).squaredNorm();
      if (d < best) {
        best = d;
        start = pixel_center(y, x);
      }
    }
    const double limit = static_cast<double>(h + w);
    const Point dir0 = direction_at(pred, start);
    start = recenter(start, dir0, comp, limit);
    if (!comp.inside(start)) start = pixel_center(px.front().first, px.front().second);

    const std::size_t max_steps = px.size() + 16;
    std::vector<Point> fwd = trace(start, dir0, pred, comp, max_steps, limit);
    std::vector<Point> bwd = trace(start, -dir0, pred, comp, max_steps, limit);
    std::vector<Point> line(bwd.rbegin(), bwd.rend());
    line.push_back(start);
    line.insert(line.end(), fwd.begin(), fwd.end());

    std::vector<double> arc(line.size(), 0.0);
    double mean_h = 0.0;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i > 0) arc[i] = arc[i - 1] + (line[i] - line[i - 1]).norm();
      const auto [y, x] = pixel_of(line[i], pred);
      mean_h += pred.h1(y, x) + pred.h2(y, x);
    }
    mean_h /= static_cast<double>(line.size());
    const double length = arc.back();
    const double stride = std::max(1.0, opt.stride_factor * mean_h);
    const int segments = static_cast<int>(std::lround(length / stride));

    auto at_arc = [&](double s) {
      std::size_t i = 0;
      while (i + 2 < line.size() && arc[i + 1] < s) ++i;
      if (line.size() == 1) return line[0];
      const double seg = arc[i + 1] - arc[i];
      const double t = seg > 0 ? std::clamp((s - arc[i]) / seg, 0.0, 1.0) : 0.0;
      return Point(line[i] + t * (line[i + 1] - line[i]));
    };

    const int n = segments > 0 ? segments + 1 : 1;
    const double spacing = segments > 0 ? length / segments : stride;
    for (int i = 0; i < n; ++i) {
      const Point c = segments > 0 ? at_arc(spacing * i) : at_arc(0.5 * length);
      const auto [y, x] = pixel_of(c, pred);
      Proposal p;
      p.center = c;
      const Point d = direction_at(pred, c);
      p.cos_theta = d.x();
      p.sin_theta = d.y();
      // heights belong to the pixel centre; carry them over to c along up
      const double off = (c - pixel_center(y, x)).dot(p.up());
      p.h1 = std::max(pred.h1(y, x) - off, 0.5);
      p.h2 = std::max(pred.h2(y, x) + off, 0.5);
      p.width = spacing;
      p.level = ProposalLevel::text;
      p.score = pred.tca(y, x);
      p.component = id;
      out.push_back(p);
    }
  }
  return out;
}

std::vector<Proposal> extract_text_proposals(const GeometryMaps& pred, double ta_thresh, double tca_thresh) {
  ExtractOptions opt;
  opt.ta_thresh = ta_thresh;
  opt.tca_thresh = tca_thresh;
  return extract_text_proposals(pred, opt);
}

double mean_inside(const Plane& plane, const Polygon& quad) {
  const ImageSize size{static_cast<int>(plane.cols()), static_cast<int>(plane.rows())};
  const auto px = polygon_pixels(quad, size);
  if (px.empty()) {
    Point c = Point::Zero();
    for (const auto& p : quad) c += p;
    c /= static_cast<double>(quad.size());
    const int x = std::clamp(static_cast<int>(std::floor(c.x())), 0, size.width - 1);
    const int y = std::clamp(static_cast<int>(std::floor(c.y())), 0, size.height - 1);
    return plane(y, x);
  }
  double s = 0.0;
  for (const auto& [y, x] : px) s += plane(y, x);
  return s / static_cast<double>(px.size());
}

std::vector<Proposal> shrink_to_stroke_proposals(const std::vector<Proposal>& text_props, const Plane& stroke_map,
                                                 double shrink, double keep_thresh) {
  if (shrink <= 0.0 || shrink >= 1.0)
    throw std::invalid_argument("shrink_to_stroke_proposals: shrink must lie in (0, 1)");
  std::vector<Proposal> out;
  for (const auto& t : text_props) {
    Proposal s = t;
    s.h1 *= shrink;
    s.h2 *= shrink;
    s.width *= shrink;
    s.level = ProposalLevel::stroke;
    const double m = mean_inside(stroke_map, s.quad());
    if (m > keep_thresh) {
      s.score = m;
      out.push_back(s);
    }
  }
  return out;
}

std::vector<Proposal> nms(const std::vector<Proposal>& props, double iou_thresh) {
  if (iou_thresh <= 0.0 || iou_thresh >= 1.0) throw std::invalid_argument("nms: threshold must lie in (0, 1)");
  std::vector<std::size_t> order(props.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = props[a];
    const auto& pb = props[b];
    return std::make_tuple(-pa.score, pa.center.x(), pa.center.y()) <
           std::make_tuple(-pb.score, pb.center.x(), pb.center.y());
  });
  std::vector<Polygon> quads(props.size());
  for (std::size_t i = 0; i < props.size(); ++i) quads[i] = props[i].quad();
  std::vector<char> suppressed(props.size(), 0);
  std::vector<Proposal> kept;
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    const std::size_t i = order[oi];
    if (suppressed[i]) continue;
    kept.push_back(props[i]);
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const std::size_t j = order[oj];
      if (!suppressed[j] && convex_iou(quads[i], quads[j]) > iou_thresh) suppressed[j] = 1;
    }
  }
  return kept;
}

std::vector<Proposal> boundary_filter(const std::vector<Proposal>& props, ImageSize size, double max_outside) {
  const Polygon image{Point(0, 0), Point(size.width, 0), Point(size.width, size.height), Point(0, size.height)};
  std::vector<Proposal> out;
  for (const auto& p : props) {
    const Polygon q = p.quad();
    const double a = area(q);
    if (a <= 0.0) continue;
    const double inside = convex_intersection_area(q, image);
    if ((a - inside) / a <= max_outside) out.push_back(p);
  }
  return out;
}

int LocalGraph::local_index(int proposal) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i] == proposal) return static_cast<int>(i);
  return -1;
}

namespace {

// Indices of `candidates` sorted by squared distance to `from`, ties by index.
std::vector<int> nearest(const Point& from, std::vector<int> candidates, const std::vector<Proposal>& props) {
  std::sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    const double da = (props[static_cast<std::size_t>(a)].center - from).squaredNorm();
    const double db = (props[static_cast<std::size_t>(b)].center - from).squaredNorm();
    return da < db || (da == db && a < b);
  });
  return candidates;
}

}  // namespace

GraphMatrices graph_matrices(const Eigen::MatrixXd& adjacency_raw) {
  const Eigen::Index n = adjacency_raw.rows();
  if (n == 0 || adjacency_raw.cols() != n) throw std::invalid_argument("graph_matrices: need a square non-empty matrix");
  const Eigen::MatrixXd a_hat = adjacency_raw + Eigen::MatrixXd::Identity(n, n);
  const Eigen::VectorXd deg = a_hat.rowwise().sum();
  GraphMatrices out;
  out.adjacency = deg.cwiseInverse().asDiagonal() * a_hat;
  const Eigen::VectorXd inv_sqrt = deg.cwiseSqrt().cwiseInverse();
  out.laplacian = inv_sqrt.asDiagonal() * a_hat * inv_sqrt.asDiagonal();
  return out;
}

GraphMatrices graph_matrices(const LocalGraph& g) { return graph_matrices(g.adjacency_raw); }

LocalGraph build_local_graph(int pivot, const std::vector<Proposal>& all_props, const GraphOptions& options) {
  if (all_props.empty()) throw std::invalid_argument("build_local_graph: no proposals");
  if (pivot < 0 || pivot >= static_cast<int>(all_props.size()))
    throw std::out_of_range("build_local_graph: pivot index");
  const int n = static_cast<int>(all_props.size());
  LocalGraph g;
  g.pivot = pivot;

  std::vector<int> others;
  for (int i = 0; i < n; ++i)
    if (i != pivot) others.push_back(i);
  std::vector<int> by_pivot = nearest(all_props[static_cast<std::size_t>(pivot)].center, others, all_props);
  const std::size_t k1 = std::min<std::size_t>(static_cast<std::size_t>(options.hop1), by_pivot.size());
  g.hop1.assign(by_pivot.begin(), by_pivot.begin() + static_cast<std::ptrdiff_t>(k1));

  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  taken[static_cast<std::size_t>(pivot)] = 1;
  for (int h : g.hop1) taken[static_cast<std::size_t>(h)] = 1;
  std::vector<int> remaining;
  for (int i = 0; i < n; ++i)
    if (!taken[static_cast<std::size_t>(i)]) remaining.push_back(i);

  std::vector<std::pair<int, int>> edges;
  for (int h : g.hop1) edges.emplace_back(pivot, h);
  std::vector<char> in_hop2(static_cast<std::size_t>(n), 0);
  for (int h : g.hop1) {
    std::vector<int> near = nearest(all_props[static_cast<std::size_t>(h)].center, remaining, all_props);
    const std::size_t k2 = std::min<std::size_t>(static_cast<std::size_t>(options.hop2), near.size());
    for (std::size_t i = 0; i < k2; ++i) {
      const int j = near[i];
      edges.emplace_back(h, j);
      if (!in_hop2[static_cast<std::size_t>(j)]) {
        in_hop2[static_cast<std::size_t>(j)] = 1;
        g.hop2.push_back(j);
      }
    }
  }

  g.nodes.push_back(pivot);
  g.nodes.insert(g.nodes.end(), g.hop1.begin(), g.hop1.end());
  g.nodes.insert(g.nodes.end(), g.hop2.begin(), g.hop2.end());
  const int m = g.size();
  g.adjacency_raw = Eigen::MatrixXd::Zero(m, m);
  for (const auto& [a, b] : edges) {
    const int ia = g.local_index(a);
    const int ib = g.local_index(b);
    g.adjacency_raw(ia, ib) = 1.0;
    g.adjacency_raw(ib, ia) = 1.0;
  }
  const GraphMatrices mats = graph_matrices(g.adjacency_raw);
  g.adjacency = mats.adjacency;
  g.laplacian = mats.laplacian;
  return g;
}

HeteroGraph attach_stroke_nodes(const LocalGraph& text_graph, const std::vector<Proposal>& text_props,
                                const std::vector<Proposal>& stroke_props, int max_links) {
  HeteroGraph hg;
  hg.base = text_graph;
  hg.stroke_links.resize(text_graph.nodes.size());
  std::vector<int> all(stroke_props.size());
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t i = 0; i < text_graph.nodes.size(); ++i) {
    const Proposal& t = text_props[static_cast<std::size_t>(text_graph.nodes[i])];
    const Polygon q = t.quad();
    std::vector<int> inside;
    for (int s : all)
      if (contains(q, stroke_props[static_cast<std::size_t>(s)].center)) inside.push_back(s);
    inside = nearest(t.center, inside, stroke_props);
    if (static_cast<int>(inside.size()) > max_links) inside.resize(static_cast<std::size_t>(max_links));
    hg.stroke_links[i] = std::move(inside);
  }
  return hg;
}

std::vector<std::vector<int>> knn_lists(const std::vector<Point>& points, int k) {
  const int n = static_cast<int>(points.size());
  std::vector<std::vector<int>> out(points.size());
  for (int i = 0; i < n; ++i) {
    std::vector<int> others;
    for (int j = 0; j < n; ++j)
      if (j != i) others.push_back(j);
    std::sort(others.begin(), others.end(), [&](int a, int b) {
      const double da = (points[static_cast<std::size_t>(a)] - points[static_cast<std::size_t>(i)]).squaredNorm();
      const double db = (points[static_cast<std::size_t>(b)] - points[static_cast<std::size_t>(i)]).squaredNorm();
      return da < db || (da == db && a < b);
    });
    if (static_cast<int>(others.size()) > k) others.resize(static_cast<std::size_t>(k));
    out[static_cast<std::size_t>(i)] = std::move(others);
  }
  return out;
}

}  // namespace strokenet
