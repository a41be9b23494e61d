#pragma once

// Slow, obviously-correct reference implementations used to cross-check the
// library: all-pairs NMS, exhaustive KNN hops, union-find grouping and
// permutation search for min-path ordering.

#include "strokenet/grouping.hpp"
#include "strokenet/proposals.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>

#include <algorithm>
#include <numeric>
#include <tuple>
#include <vector>

namespace strokenet::oracle {

namespace bg = boost::geometry;
using BgPoint = bg::model::d2::point_xy<double>;
using BgPolygon = bg::model::polygon<BgPoint>;

inline BgPolygon to_bg(const Polygon& p) {
  BgPolygon out;
  for (const Point& q : p) bg::append(out.outer(), BgPoint(q.x(), q.y()));
  bg::correct(out);
  return out;
}

inline double iou(const Polygon& a, const Polygon& b) {
  const BgPolygon pa = to_bg(a);
  const BgPolygon pb = to_bg(b);
  std::vector<BgPolygon> inter;
  bg::intersection(pa, pb, inter);
  double ia = 0.0;
  for (const auto& p : inter) ia += bg::area(p);
  const double uni = bg::area(pa) + bg::area(pb) - ia;
  return uni > 0.0 ? ia / uni : 0.0;
}

// A box survives iff no higher-ranked survivor overlaps it above the
// threshold; the IoU matrix is computed in full first.
inline std::vector<Proposal> nms(const std::vector<Proposal>& props, double thresh) {
  const std::size_t n = props.size();
  std::vector<std::size_t> rank(n);
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
    return std::make_tuple(-props[a].score, props[a].center.x(), props[a].center.y()) <
           std::make_tuple(-props[b].score, props[b].center.x(), props[b].center.y());
  });
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m[i][j] = i == j ? 1.0 : iou(props[i].quad(), props[j].quad());
  std::vector<char> alive(n, 0);
  std::vector<Proposal> out;
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = rank[r];
    bool ok = true;
    for (std::size_t q = 0; q < r; ++q)
      if (alive[rank[q]] && m[rank[q]][i] > thresh) ok = false;
    alive[i] = ok;
    if (ok) out.push_back(props[i]);
  }
  return out;
}

// Indices of `candidates` sorted by (squared distance to c, index).
inline std::vector<int> sorted_by_distance(const Point& c, std::vector<int> candidates, const std::vector<Point>& pts) {
  std::vector<std::tuple<double, int>> keyed;
  for (int i : candidates) keyed.emplace_back((pts[static_cast<std::size_t>(i)] - c).squaredNorm(), i);
  std::sort(keyed.begin(), keyed.end());
  std::vector<int> out;
  for (const auto& [d, i] : keyed) out.push_back(i);
  return out;
}

struct Hops {
  std::vector<int> hop1;
  std::vector<int> hop2;  // first-appearance order over hop1
};

inline Hops hops(int pivot, const std::vector<Point>& pts, int k1, int k2) {
  const int n = static_cast<int>(pts.size());
  std::vector<int> others;
  for (int i = 0; i < n; ++i)
    if (i != pivot) others.push_back(i);
  Hops h;
  auto s = sorted_by_distance(pts[static_cast<std::size_t>(pivot)], others, pts);
  h.hop1.assign(s.begin(), s.begin() + std::min<std::ptrdiff_t>(k1, static_cast<std::ptrdiff_t>(s.size())));
  std::vector<int> rest;
  for (int i : others)
    if (std::find(h.hop1.begin(), h.hop1.end(), i) == h.hop1.end()) rest.push_back(i);
  for (int a : h.hop1) {
    auto near = sorted_by_distance(pts[static_cast<std::size_t>(a)], rest, pts);
    for (int k = 0; k < k2 && k < static_cast<int>(near.size()); ++k)
      if (std::find(h.hop2.begin(), h.hop2.end(), near[static_cast<std::size_t>(k)]) == h.hop2.end())
        h.hop2.push_back(near[static_cast<std::size_t>(k)]);
  }
  return h;
}

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(static_cast<std::size_t>(n)) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int x) {
    while (parent_[static_cast<std::size_t>(x)] != x) x = parent_[static_cast<std::size_t>(x)] = parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(x)])];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }

 private:
  std::vector<int> parent_;
};

// Components sorted by smallest member, members ascending.
inline std::vector<std::vector<int>> components(int n, const std::vector<std::pair<int, int>>& edges) {
  UnionFind uf(n);
  for (const auto& [a, b] : edges) uf.unite(a, b);
  std::vector<std::vector<int>> groups;
  std::vector<int> slot(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    const int r = uf.find(i);
    if (slot[static_cast<std::size_t>(r)] < 0) {
      slot[static_cast<std::size_t>(r)] = static_cast<int>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(slot[static_cast<std::size_t>(r)])].push_back(i);
  }
  return groups;
}

// Path length with segments summed smallest first (reversal symmetric).
inline double open_length(const std::vector<Point>& pts, const std::vector<int>& order) {
  std::vector<double> seg;
  for (std::size_t i = 1; i < order.size(); ++i)
    seg.push_back((pts[static_cast<std::size_t>(order[i])] - pts[static_cast<std::size_t>(order[i - 1])]).norm());
  std::sort(seg.begin(), seg.end());
  double s = 0.0;
  for (double d : seg) s += d;
  return s;
}

// Every permutation; the winner starts at the end with the smaller (x, y).
inline std::vector<int> min_path(const std::vector<Point>& pts) {
  std::vector<int> perm(pts.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_len = open_length(pts, perm);
  while (std::next_permutation(perm.begin(), perm.end())) {
    const double len = open_length(pts, perm);
    if (len < best_len) {
      best_len = len;
      best = perm;
    }
  }
  if (best.size() > 1) {
    const Point& a = pts[static_cast<std::size_t>(best.front())];
    const Point& b = pts[static_cast<std::size_t>(best.back())];
    if (std::make_pair(b.x(), b.y()) < std::make_pair(a.x(), a.y())) std::reverse(best.begin(), best.end());
  }
  return best;
}

}  // namespace strokenet::oracle
