#pragma once

// Rotated-box proposals extracted from geometry maps and the pivot-centred
// local graphs built over them.

#include "strokenet/labels.hpp"

#include <Eigen/Core>

#include <vector>

namespace strokenet {

enum class ProposalLevel { text, stroke };

struct Proposal {
  Point center = Point::Zero();
  double h1 = 0.0;  // centre to upper edge
  double h2 = 0.0;  // centre to lower edge
  double sin_theta = 0.0;
  double cos_theta = 1.0;
  double width = 0.0;  // extent along the writing direction
  ProposalLevel level = ProposalLevel::text;
  double score = 0.0;
  int component = -1;  // source TCA component
  int instance = -1;   // ground-truth instance when known

  double height() const { return h1 + h2; }
  Point direction() const { return Point(cos_theta, sin_theta); }
  // Unit normal pointing at the upper edge (y grows downward).
  Point up() const { return Point(sin_theta, -cos_theta); }
  // Corners: top-left, top-right, bottom-right, bottom-left along writing.
  Polygon quad() const;
};

struct ExtractOptions {
  double ta_thresh = 0.5;
  double tca_thresh = 0.5;
  double stride_factor = 0.5;  // sample spacing in units of mean local height
};

// Traces the centre line of every connected TCA component and samples it at
// a stride of stride_factor * local height, end points included.
std::vector<Proposal> extract_text_proposals(const GeometryMaps& pred, const ExtractOptions& options);
std::vector<Proposal> extract_text_proposals(const GeometryMaps& pred, double ta_thresh, double tca_thresh);

// Mean of `plane` over pixels whose centres fall in the polygon; the pixel
// under the polygon centroid stands in when no centre is covered.
double mean_inside(const Plane& plane, const Polygon& quad);

// One shrunken stroke box per text box, kept when the stroke map is dense
// enough inside it.
std::vector<Proposal> shrink_to_stroke_proposals(const std::vector<Proposal>& text_props, const Plane& stroke_map,
                                                 double shrink, double keep_thresh = 0.5);

// Greedy rotated-box NMS. Order: score descending, then centre x, then y.
// A box is suppressed when its IoU with a kept box exceeds iou_thresh.
std::vector<Proposal> nms(const std::vector<Proposal>& props, double iou_thresh);

// Drops proposals whose quadrilateral lies outside the image by more than
// max_outside of its area.
std::vector<Proposal> boundary_filter(const std::vector<Proposal>& props, ImageSize size,
                                      double max_outside = 0.2);

struct LocalGraph {
  int pivot = -1;
  std::vector<int> nodes;  // proposal indices: pivot, hop1..., hop2...
  std::vector<int> hop1;
  std::vector<int> hop2;
  Eigen::MatrixXd adjacency_raw;  // symmetric 0/1 over local node order, no self loops
  Eigen::MatrixXd adjacency;      // D^-1 (A + I)
  Eigen::MatrixXd laplacian;      // D^-1/2 (A + I) D^-1/2
  Eigen::MatrixXd edge_attention; // optional, filled by attention layers

  int size() const { return static_cast<int>(nodes.size()); }
  // Local position of a proposal index, -1 if absent.
  int local_index(int proposal) const;
};

struct GraphOptions {
  int hop1 = 8;
  int hop2 = 4;
};

LocalGraph build_local_graph(int pivot, const std::vector<Proposal>& all_props, const GraphOptions& options = {});

struct GraphMatrices {
  Eigen::MatrixXd adjacency;
  Eigen::MatrixXd laplacian;
};

GraphMatrices graph_matrices(const Eigen::MatrixXd& adjacency_raw);
GraphMatrices graph_matrices(const LocalGraph& g);

struct HeteroGraph {
  LocalGraph base;
  // For each local text node, up to three stroke proposal indices ordered by
  // centre distance.
  std::vector<std::vector<int>> stroke_links;
};

HeteroGraph attach_stroke_nodes(const LocalGraph& text_graph, const std::vector<Proposal>& text_props,
                                const std::vector<Proposal>& stroke_props, int max_links = 3);

// k nearest neighbours of every point by Euclidean distance (ties by index).
std::vector<std::vector<int>> knn_lists(const std::vector<Point>& points, int k);

}  // namespace strokenet
