#include "strokenet/grouping.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>

namespace strokenet {

namespace bg = boost::geometry;

std::vector<std::pair<int, int>> accept_links(const std::vector<LinkDecision>& decisions, double thresh) {
  // key (a, b) with a < b; value per direction: (sum, count)
  struct Dir {
    double sum = 0.0;
    int count = 0;
  };
  std::map<std::pair<int, int>, std::array<Dir, 2>> pairs;
  for (const auto& d : decisions) {
    if (d.pivot == d.neighbor) continue;
    const int a = std::min(d.pivot, d.neighbor);
    const int b = std::max(d.pivot, d.neighbor);
    Dir& dir = pairs[{a, b}][d.pivot == a ? 0 : 1];
    dir.sum += d.prob;
    ++dir.count;
  }
  std::vector<std::pair<int, int>> out;
  for (const auto& [key, dirs] : pairs) {
    bool ok = true;
    for (const Dir& d : dirs)
      if (d.count > 0 && d.sum / d.count < thresh) ok = false;
    if (ok) out.push_back(key);
  }
  return out;
}

std::vector<std::vector<int>> group_bfs(int n, const std::vector<std::pair<int, int>>& links) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const auto& [a, b] : links) {
    if (a < 0 || b < 0 || a >= n || b >= n) throw std::out_of_range("link outside node range");
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> comps;
  for (int s = 0; s < n; ++s) {
    if (seen[static_cast<std::size_t>(s)]) continue;
    std::vector<int> comp;
    std::deque<int> queue{s};
    seen[static_cast<std::size_t>(s)] = 1;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      comp.push_back(u);
      for (int v : adj[static_cast<std::size_t>(u)]) {
        if (seen[static_cast<std::size_t>(v)]) continue;
        seen[static_cast<std::size_t>(v)] = 1;
        queue.push_back(v);
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

double path_length(const std::vector<Point>& points, const std::vector<int>& order) {
  std::vector<double> seg;
  for (std::size_t i = 1; i < order.size(); ++i)
    seg.push_back((points[static_cast<std::size_t>(order[i])] - points[static_cast<std::size_t>(order[i - 1])]).norm());
  std::sort(seg.begin(), seg.end());
  return std::accumulate(seg.begin(), seg.end(), 0.0);
}

namespace {

std::vector<int> held_karp(const Eigen::MatrixXd& dist) {
  const int n = static_cast<int>(dist.rows());
  const int full = 1 << n;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dp(static_cast<std::size_t>(full) * n, inf);
  std::vector<int> parent(static_cast<std::size_t>(full) * n, -1);
  auto at = [n](int mask, int j) { return static_cast<std::size_t>(mask) * n + j; };
  for (int j = 0; j < n; ++j) dp[at(1 << j, j)] = 0.0;
  for (int mask = 1; mask < full; ++mask) {
    for (int j = 0; j < n; ++j) {
      const double cur = dp[at(mask, j)];
      if (!(mask & (1 << j)) || cur == inf) continue;
      for (int k = 0; k < n; ++k) {
        if (mask & (1 << k)) continue;
        const int next = mask | (1 << k);
        const double cand = cur + dist(j, k);
        if (cand < dp[at(next, k)]) {
          dp[at(next, k)] = cand;
          parent[at(next, k)] = j;
        }
      }
    }
  }
  int end = 0;
  for (int j = 1; j < n; ++j)
    if (dp[at(full - 1, j)] < dp[at(full - 1, end)]) end = j;
  std::vector<int> order;
  int mask = full - 1;
  for (int j = end; j >= 0;) {
    order.push_back(j);
    const int p = parent[at(mask, j)];
    mask &= ~(1 << j);
    j = p;
  }
  std::reverse(order.begin(), order.end());
  return order;
}

std::vector<int> nearest_neighbor_two_opt(const Eigen::MatrixXd& dist) {
  const int n = static_cast<int>(dist.rows());
  std::vector<int> order{0};
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  used[0] = 1;
  for (int step = 1; step < n; ++step) {
    const int last = order.back();
    int best = -1;
    for (int k = 0; k < n; ++k)
      if (!used[static_cast<std::size_t>(k)] && (best < 0 || dist(last, k) < dist(last, best))) best = k;
    used[static_cast<std::size_t>(best)] = 1;
    order.push_back(best);
  }
  // 2-opt on an open path: reversing [i, j] replaces the edges entering i and
  // leaving j.
  bool improved = true;
  while (improved) {
    improved = false;
    for (int i = 0; i < n - 1; ++i) {
      for (int j = i + 1; j < n; ++j) {
        double before = 0.0;
        double after = 0.0;
        if (i > 0) {
          before += dist(order[i - 1], order[i]);
          after += dist(order[i - 1], order[j]);
        }
        if (j < n - 1) {
          before += dist(order[j], order[j + 1]);
          after += dist(order[i], order[j + 1]);
        }
        if (after < before - 1e-12) {
          std::reverse(order.begin() + i, order.begin() + j + 1);
          improved = true;
        }
      }
    }
  }
  return order;
}

bool point_less(const Point& a, const Point& b) {
  return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
}

}  // namespace

std::vector<int> order_min_path(const std::vector<Point>& points, int exact_limit) {
  const int n = static_cast<int>(points.size());
  if (n == 0) return {};
  // Solve on coordinate-sorted points so the answer does not depend on input order.
  std::vector<int> sorted(static_cast<std::size_t>(n));
  std::iota(sorted.begin(), sorted.end(), 0);
  std::stable_sort(sorted.begin(), sorted.end(), [&](int a, int b) {
    return point_less(points[static_cast<std::size_t>(a)], points[static_cast<std::size_t>(b)]);
  });
  if (n == 1) return sorted;
  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      dist(i, j) = (points[static_cast<std::size_t>(sorted[static_cast<std::size_t>(i)])] -
                    points[static_cast<std::size_t>(sorted[static_cast<std::size_t>(j)])])
                       .norm();
  std::vector<int> local = n <= exact_limit ? held_karp(dist) : nearest_neighbor_two_opt(dist);
  std::vector<int> order;
  for (int i : local) order.push_back(sorted[static_cast<std::size_t>(i)]);
  if (point_less(points[static_cast<std::size_t>(order.back())], points[static_cast<std::size_t>(order.front())]))
    std::reverse(order.begin(), order.end());
  return order;
}

std::vector<Proposal> extend_chain_ends(std::vector<Proposal> ordered, double factor, double slack) {
  if (ordered.empty()) return ordered;
  auto ext = [&](const Proposal& p) { return factor * p.height() + slack; };
  if (ordered.size() == 1) {
    ordered.front().width += 2.0 * ext(ordered.front());
    return ordered;
  }
  auto push_out = [&](Proposal& end, const Proposal& inner) {
    Point d = end.direction();
    if (d.dot(end.center - inner.center) < 0.0) d = -d;
    end.center += ext(end) * d;
  };
  push_out(ordered.front(), ordered[1]);
  push_out(ordered.back(), ordered[ordered.size() - 2]);
  return ordered;
}

Boundary reconstruct_boundary(const std::vector<Proposal>& ordered) {
  if (ordered.empty()) throw std::invalid_argument("reconstruct_boundary: no nodes");
  Boundary out;
  if (ordered.size() == 1) {
    out.polygon = ordered.front().quad();
    return out;
  }
  const Point ref = ordered.front().up();
  Polygon top;
  Polygon bottom;
  for (const Proposal& p : ordered) {
    Point up = p.up();
    double h1 = p.h1;
    double h2 = p.h2;
    if (up.dot(ref) < 0.0) {
      up = -up;
      std::swap(h1, h2);
    }
    top.push_back(p.center + h1 * up);
    bottom.push_back(p.center - h2 * up);
  }
  out.polygon = top;
  out.polygon.insert(out.polygon.end(), bottom.rbegin(), bottom.rend());
  if (!is_simple(out.polygon)) {
    out.polygon = convex_hull(out.polygon);
    out.hull_fallback = true;
  }
  return out;
}

namespace {

using BgPoint = bg::model::d2::point_xy<double>;
using BgPolygon = bg::model::polygon<BgPoint>;
using BgMulti = bg::model::multi_polygon<BgPolygon>;

BgPolygon to_bg(const Polygon& poly) {
  BgPolygon out;
  for (const Point& p : poly) bg::append(out.outer(), BgPoint(p.x(), p.y()));
  bg::correct(out);
  if (!bg::is_valid(out)) {
    BgPolygon hull;
    bg::convex_hull(out, hull);
    return hull;
  }
  return out;
}

}  // namespace

double polygon_iou(const Polygon& a, const Polygon& b) {
  if (a.size() < 3 || b.size() < 3) return 0.0;
  const BgPolygon pa = to_bg(a);
  const BgPolygon pb = to_bg(b);
  BgMulti inter;
  bg::intersection(pa, pb, inter);
  const double i = bg::area(inter);
  const double u = bg::area(pa) + bg::area(pb) - i;
  return u > 0.0 ? std::clamp(i / u, 0.0, 1.0) : 0.0;
}

EvalReport& EvalReport::operator+=(const EvalReport& other) {
  num_pred += other.num_pred;
  num_gt += other.num_gt;
  matches.insert(matches.end(), other.matches.begin(), other.matches.end());
  finalize();
  return *this;
}

void EvalReport::finalize() {
  const double m = static_cast<double>(matches.size());
  precision = num_pred > 0 ? m / num_pred : 0.0;
  recall = num_gt > 0 ? m / num_gt : 0.0;
  hmean = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

EvalReport evaluate(const std::vector<Polygon>& preds, const std::vector<Polygon>& gts, double iou_thresh) {
  std::vector<Match> cand;
  for (std::size_t i = 0; i < preds.size(); ++i)
    for (std::size_t j = 0; j < gts.size(); ++j) {
      const double iou = polygon_iou(preds[i], gts[j]);
      if (iou >= iou_thresh) cand.push_back({static_cast<int>(i), static_cast<int>(j), iou});
    }
  std::sort(cand.begin(), cand.end(), [](const Match& a, const Match& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    return a.gt != b.gt ? a.gt < b.gt : a.pred < b.pred;
  });
  std::vector<char> pred_used(preds.size(), 0);
  std::vector<char> gt_used(gts.size(), 0);
  EvalReport r;
  r.num_pred = static_cast<int>(preds.size());
  r.num_gt = static_cast<int>(gts.size());
  for (const Match& m : cand) {
    if (pred_used[static_cast<std::size_t>(m.pred)] || gt_used[static_cast<std::size_t>(m.gt)]) continue;
    pred_used[static_cast<std::size_t>(m.pred)] = 1;
    gt_used[static_cast<std::size_t>(m.gt)] = 1;
    r.matches.push_back(m);
  }
  r.finalize();
  return r;
}

EvalReport evaluate(const std::vector<TextInstance>& preds, const std::vector<TextAnnotation>& gts,
                    double iou_thresh) {
  std::vector<Polygon> p;
  std::vector<Polygon> g;
  for (const auto& x : preds) p.push_back(x.polygon);
  for (const auto& x : gts) g.push_back(x.polygon);
  return evaluate(p, g, iou_thresh);
}

}  // namespace strokenet
