#pragma once

// Linkage decisions -> connected groups -> ordered chains -> polygons, and
// polygon-IoU detection scoring.

#include "strokenet/labels.hpp"
#include "strokenet/proposals.hpp"

#include <string>
#include <utility>
#include <vector>

namespace strokenet {

struct TextInstance {
  std::vector<Proposal> ordered_nodes;
  Polygon polygon;
  double score = 0.0;
  bool hull_fallback = false;
};

// P(linked) for the pair evaluated with `pivot` as the graph centre.
struct LinkDecision {
  int pivot = -1;
  int neighbor = -1;
  double prob = 0.0;
};

// Undirected accepted pairs (a < b), sorted. A pair needs prob >= thresh in
// every direction that was evaluated; repeated evaluations of one direction
// are averaged.
std::vector<std::pair<int, int>> accept_links(const std::vector<LinkDecision>& decisions, double thresh = 0.5);

// Connected components over nodes [0, n). Components are sorted by their
// smallest member and list members in ascending order.
std::vector<std::vector<int>> group_bfs(int n, const std::vector<std::pair<int, int>>& links);

// Open path length with segment lengths summed smallest first, so a path and
// its reverse give identical values.
double path_length(const std::vector<Point>& points, const std::vector<int>& order);

// Order of `points` minimising the open path length. Exact for up to
// `exact_limit` points, nearest neighbour + 2-opt beyond. The returned path
// starts at the end with the smaller (x, y).
std::vector<int> order_min_path(const std::vector<Point>& points, int exact_limit = 10);

// Moves the chain end nodes outward along their writing direction by
// factor * height + slack (single nodes grow on both sides).
std::vector<Proposal> extend_chain_ends(std::vector<Proposal> ordered, double factor, double slack = 0.5);

struct Boundary {
  Polygon polygon;
  bool hull_fallback = false;
};

// Upper midpoints in order, then lower midpoints reversed. Nodes are first
// flipped to share the first node's upper side. A self-intersecting result
// is replaced by its convex hull.
Boundary reconstruct_boundary(const std::vector<Proposal>& ordered);

// IoU of two simple polygons (either orientation).
double polygon_iou(const Polygon& a, const Polygon& b);

struct Match {
  int pred = -1;
  int gt = -1;
  double iou = 0.0;
};

struct EvalReport {
  double recall = 0.0;
  double precision = 0.0;
  double hmean = 0.0;
  int num_pred = 0;
  int num_gt = 0;
  std::vector<Match> matches;

  EvalReport& operator+=(const EvalReport& other);
  void finalize();
};

// Greedy one-to-one matching by descending IoU; pairs need IoU >= thresh.
EvalReport evaluate(const std::vector<Polygon>& preds, const std::vector<Polygon>& gts, double iou_thresh = 0.5);
EvalReport evaluate(const std::vector<TextInstance>& preds, const std::vector<TextAnnotation>& gts,
                    double iou_thresh = 0.5);

}  // namespace strokenet
