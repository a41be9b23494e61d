#pragma once

// Hierarchical relation graph network: node embeddings, stroke-graph
// attention, two-stage text/stroke aggregation, gated fusion and linkage.
//
// Node features are stored as rows (n x d).

#include "strokenet/params.hpp"
#include "strokenet/proposals.hpp"
#include "strokenet/sapn.hpp"

#include <array>
#include <optional>
#include <utility>
#include <vector>

namespace strokenet {

struct HrgnConfig {
  int geometric_dim = 64;  // multiple of 32
  int content_dim = 32;
  int roi_grid = 4;
  int feature_channels = 32;
  int graph_layers = 1;  // linkage layers; the last one emits P
  int stroke_knn = 8;
  double leaky_slope = 0.2;

  int dim() const { return geometric_dim + content_dim; }
};

// Per-attribute widths of the geometric embedding: x, y, height, width, angle.
std::array<int, 5> geometric_split(int geometric_dim);

// Interleaved (sin, cos) pairs at frequencies 10000^(-2i/d_attr) for the
// centre (relative to origin), total height, width and angle in radians.
Eigen::VectorXd geometric_embedding(const Proposal& p, int geometric_dim = 64, const Point& origin = Point::Zero());

// Feature-map sample locations (x, y in feature pixels) of the RRoI grid,
// row-major over the grid with rows running from the upper edge down.
std::vector<std::array<double, 2>> rroi_points(const Proposal& p, int grid, int stride);

class HrgnParams {
 public:
  HrgnParams() = default;
  // Without strokes the attention, mask and fuse weights are left null.
  HrgnParams(ParamStore& store, const HrgnConfig& cfg, Rng& rng, bool with_strokes = true);
  bool with_strokes() const { return att_w != nullptr; }

  const HrgnConfig& config() const { return cfg_; }

  Param* content_w = nullptr;  // content_dim x (C * grid^2)
  Param* content_b = nullptr;
  Param* att_w = nullptr;      // d x d
  Param* att_a = nullptr;      // 2d x 1
  Param* mask_m = nullptr;     // d x d
  Param* fuse_w = nullptr;     // 1 x 3d
  Param* fuse_b = nullptr;     // 1 x 1
  Param* link_w = nullptr;     // 2d x 2
  std::vector<Param*> layer_w; // 2d x d, one per extra layer

 private:
  HrgnConfig cfg_;
};

// RRoI pooling of every proposal followed by the content projection: n x content_dim.
Var content_embeddings(Tape& t, const FeatureMap& f, const std::vector<Proposal>& props, const HrgnParams& params);

// Attention over directed edges (node, neighbour), softmax within each node.
// Every node in [0, num_nodes) needs at least one edge. `shift` is added to
// every pre-softmax score.
Var gat_attention(Tape& t, const Var& features, const std::vector<std::pair<int, int>>& edges, int num_nodes,
                  const HrgnParams& params, double shift = 0.0);

// sigmoid(sum_k alpha_sk W h_k) for every node.
Var stroke_graph_update(Tape& t, const Var& features, const std::vector<std::pair<int, int>>& edges,
                        const HrgnParams& params, double shift = 0.0, Var* attention_out = nullptr);

// Edges of the stroke graph: self plus k nearest stroke centres.
std::vector<std::pair<int, int>> stroke_graph_edges(const std::vector<Point>& centers, int k);

// Weighted average A H with A the normalised adjacency.
Var agg_text_level(Tape& t, const Eigen::MatrixXd& adjacency, const Var& text_features);

// Text/stroke incidence for the second stage: links[t] lists stroke rows of
// text node t.
struct StrokeIncidence {
  std::vector<int> text;    // per pair
  std::vector<int> stroke;  // per pair
  int num_text = 0;
  std::vector<int> counts;  // links per text node

  static StrokeIncidence from_links(const std::vector<std::vector<int>>& links);
};

// Gate per (text, stroke) pair: sigmoid(F_k M mean(F)) with the mean taken
// over the strokes of the same text node.
Var stroke_soft_mask(Tape& t, const Var& stroke_features, const StrokeIncidence& inc, const HrgnParams& params);
// Per text node: sum_k m_k F_k (zero rows where there are no strokes).
Var agg_stroke_level(Tape& t, const Var& stroke_features, const StrokeIncidence& inc, const Var& gate);
// p a + (1 - p) b per row with p = sigmoid(W [a; a*b; b] + b0). Rows whose
// has_strokes entry is false return a unchanged.
Var gated_fuse(Tape& t, const Var& a, const Var& b, const HrgnParams& params, const std::vector<bool>& has_strokes = {});

struct LinkagePrediction {
  Var logits;             // n x 2
  Var prob;               // n x 2, row softmax
  std::vector<int> rows;  // rows carrying pivot-neighbour decisions
  std::vector<int> labels;  // 1 = same instance, -1 unknown
};

LinkagePrediction linkage_predict(Tape& t, const Var& features, const Eigen::MatrixXd& laplacian,
                                  const HrgnParams& params);

struct LinkageLoss {
  Var value;
  bool empty = false;
  int count = 0;
};

// Mean cross-entropy over every labelled decision row of every graph.
LinkageLoss loss_linkage(Tape& t, const std::vector<LinkagePrediction>& preds);

// One pivot-centred heterogeneous graph worth of inputs.
struct GraphBatch {
  const HeteroGraph* graph = nullptr;
  const std::vector<Proposal>* text_props = nullptr;
  const std::vector<Proposal>* stroke_props = nullptr;
  Var text_content;    // all text proposals x content_dim
  Var stroke_content;  // all stroke proposals x content_dim (may be invalid)
  bool use_strokes = true;
};

struct GraphForward {
  LinkagePrediction linkage;
  Var stage1;
  std::optional<Var> stage2;
  std::optional<Var> stroke_attention;
  std::vector<int> stroke_nodes;  // stroke proposal indices in local order
};

GraphForward hrgn_forward(Tape& t, const GraphBatch& batch, const HrgnParams& params);

}  // namespace strokenet
