#include "strokenet/hrgn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace strokenet {

std::array<int, 5> geometric_split(int geometric_dim) {
  if (geometric_dim <= 0 || geometric_dim % 32 != 0)
    throw std::invalid_argument("geometric embedding width must be a positive multiple of 32");
  const int q = geometric_dim / 16;
  return {4 * q, 4 * q, 3 * q, 3 * q, 2 * q};
}

Eigen::VectorXd geometric_embedding(const Proposal& p, int geometric_dim, const Point& origin) {
  const auto split = geometric_split(geometric_dim);
  const std::array<double, 5> values{p.center.x() - origin.x(), p.center.y() - origin.y(), p.height(), p.width,
                                     std::atan2(p.sin_theta, p.cos_theta)};
  Eigen::VectorXd out(geometric_dim);
  int offset = 0;
  for (std::size_t a = 0; a < values.size(); ++a) {
    const int d = split[a];
    for (int i = 0; i < d / 2; ++i) {
      const double freq = std::pow(10000.0, -2.0 * i / d);
      out(offset + 2 * i) = std::sin(values[a] * freq);
      out(offset + 2 * i + 1) = std::cos(values[a] * freq);
    }
    offset += d;
  }
  return out;
}

std::vector<std::array<double, 2>> rroi_points(const Proposal& p, int grid, int stride) {
  if (!(p.width > 0.0) || !(p.height() > 0.0)) throw std::invalid_argument("zero-area proposal");
  const Point d = p.direction();
  const Point up = p.up();
  std::vector<std::array<double, 2>> pts;
  pts.reserve(static_cast<std::size_t>(grid) * grid);
  for (int gy = 0; gy < grid; ++gy) {
    const double along_up = p.h1 - (gy + 0.5) / grid * p.height();
    for (int gx = 0; gx < grid; ++gx) {
      const double along = ((gx + 0.5) / grid - 0.5) * p.width;
      const Point q = p.center + along * d + along_up * up;
      pts.push_back({q.x() / stride, q.y() / stride});
    }
  }
  return pts;
}

HrgnParams::HrgnParams(ParamStore& store, const HrgnConfig& cfg, Rng& rng, bool with_strokes) : cfg_(cfg) {
  geometric_split(cfg.geometric_dim);
  const int d = cfg.dim();
  const int pooled = cfg.feature_channels * cfg.roi_grid * cfg.roi_grid;
  content_w = &store.add("hrgn.content.weight", xavier_uniform(rng, cfg.content_dim, pooled));
  content_b = &store.add("hrgn.content.bias", Mat::Zero(cfg.content_dim, 1));
  // Stroke-side draws happen either way so the remaining weights match.
  Mat aw = xavier_uniform(rng, d, d);
  Mat aa = xavier_uniform(rng, 2 * d, 1);
  Mat mm = xavier_uniform(rng, d, d);
  Mat fw = xavier_uniform(rng, 1, 3 * d);
  if (with_strokes) {
    att_w = &store.add("hrgn.attention.weight", std::move(aw));
    att_a = &store.add("hrgn.attention.vector", std::move(aa));
    mask_m = &store.add("hrgn.mask.weight", std::move(mm));
    fuse_w = &store.add("hrgn.fuse.weight", std::move(fw));
    fuse_b = &store.add("hrgn.fuse.bias", Mat::Zero(1, 1));
  }
  for (int l = 1; l < cfg.graph_layers; ++l)
    layer_w.push_back(&store.add("hrgn.layer" + std::to_string(l) + ".weight", xavier_uniform(rng, 2 * d, d)));
  link_w = &store.add("hrgn.link.weight", xavier_uniform(rng, 2 * d, 2));
}

Var content_embeddings(Tape& t, const FeatureMap& f, const std::vector<Proposal>& props, const HrgnParams& params) {
  const HrgnConfig& cfg = params.config();
  if (f.channels() != cfg.feature_channels) throw std::invalid_argument("content embedding: channel mismatch");
  if (props.empty()) return t.constant(Mat::Zero(0, cfg.content_dim));
  const int g = cfg.roi_grid * cfg.roi_grid;
  std::vector<std::array<double, 2>> pts;
  pts.reserve(props.size() * static_cast<std::size_t>(g));
  for (const Proposal& p : props) {
    const auto q = rroi_points(p, cfg.roi_grid, f.stride);
    pts.insert(pts.end(), q.begin(), q.end());
  }
  const Var pooled = ad::reshape(ad::sample_bilinear(f.planes, pts), static_cast<Eigen::Index>(f.channels()) * g,
                                 static_cast<Eigen::Index>(props.size()));
  const Var proj = ad::add_col_broadcast(ad::matmul(t.parameter(*params.content_w), pooled),
                                         t.parameter(*params.content_b));
  return ad::transpose(proj);
}

Var gat_attention(Tape& t, const Var& features, const std::vector<std::pair<int, int>>& edges, int num_nodes,
                  const HrgnParams& params, double shift) {
  if (edges.empty()) throw std::invalid_argument("attention needs at least one neighbour");
  std::vector<int> count(static_cast<std::size_t>(num_nodes), 0);
  std::vector<int> src;
  std::vector<int> dst;
  for (const auto& [s, n] : edges) {
    if (s < 0 || s >= num_nodes || n < 0 || n >= features.rows())
      throw std::out_of_range("attention edge outside graph");
    ++count[static_cast<std::size_t>(s)];
    src.push_back(s);
    dst.push_back(n);
  }
  if (std::find(count.begin(), count.end(), 0) != count.end())
    throw std::invalid_argument("attention needs at least one neighbour per node");
  const Eigen::Index d = features.cols();
  const Var z = ad::matmul(features, ad::transpose(t.parameter(*params.att_w)));
  const Var a = t.parameter(*params.att_a);
  const Var self_score = ad::matmul(z, ad::slice_rows(a, 0, d));
  const Var other_score = ad::matmul(z, ad::slice_rows(a, d, d));
  const Var e = ad::leaky_relu(ad::gather_rows(self_score, src) + ad::gather_rows(other_score, dst),
                               params.config().leaky_slope);
  return ad::segment_softmax(e, src, num_nodes, shift);
}

Var stroke_graph_update(Tape& t, const Var& features, const std::vector<std::pair<int, int>>& edges,
                        const HrgnParams& params, double shift, Var* attention_out) {
  const int n = static_cast<int>(features.rows());
  const Var alpha = gat_attention(t, features, edges, n, params, shift);
  if (attention_out) *attention_out = alpha;
  std::vector<int> src;
  std::vector<int> dst;
  for (const auto& [s, k] : edges) {
    src.push_back(s);
    dst.push_back(k);
  }
  const Var z = ad::matmul(features, ad::transpose(t.parameter(*params.att_w)));
  const Var messages = ad::mul_col_broadcast(ad::gather_rows(z, dst), alpha);
  return ad::sigmoid(ad::scatter_add_rows(messages, src, n));
}

std::vector<std::pair<int, int>> stroke_graph_edges(const std::vector<Point>& centers, int k) {
  const int n = static_cast<int>(centers.size());
  const auto knn = knn_lists(centers, std::min(k, std::max(0, n - 1)));
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    edges.emplace_back(i, i);
    for (int j : knn[static_cast<std::size_t>(i)]) edges.emplace_back(i, j);
  }
  return edges;
}

Var agg_text_level(Tape& t, const Eigen::MatrixXd& adjacency, const Var& text_features) {
  if (adjacency.cols() != text_features.rows()) throw std::invalid_argument("adjacency does not match features");
  return ad::matmul(t.constant(adjacency), text_features);
}

StrokeIncidence StrokeIncidence::from_links(const std::vector<std::vector<int>>& links) {
  StrokeIncidence inc;
  inc.num_text = static_cast<int>(links.size());
  for (std::size_t i = 0; i < links.size(); ++i) {
    inc.counts.push_back(static_cast<int>(links[i].size()));
    for (int s : links[i]) {
      inc.text.push_back(static_cast<int>(i));
      inc.stroke.push_back(s);
    }
  }
  return inc;
}

Var stroke_soft_mask(Tape& t, const Var& stroke_features, const StrokeIncidence& inc, const HrgnParams& params) {
  if (inc.text.empty()) throw std::invalid_argument("soft mask needs at least one stroke neighbour");
  const Var linked = ad::gather_rows(stroke_features, inc.stroke);
  Mat pooling = Mat::Zero(inc.num_text, static_cast<Eigen::Index>(inc.text.size()));
  for (std::size_t k = 0; k < inc.text.size(); ++k)
    pooling(inc.text[k], static_cast<Eigen::Index>(k)) = 1.0 / inc.counts[static_cast<std::size_t>(inc.text[k])];
  const Var centre = ad::matmul(t.constant(pooling), linked);
  const Var score =
      ad::row_sum(ad::matmul(linked, t.parameter(*params.mask_m)) * ad::gather_rows(centre, inc.text));
  return ad::sigmoid(score);
}

Var agg_stroke_level(Tape&, const Var& stroke_features, const StrokeIncidence& inc, const Var& gate) {
  if (gate.rows() != static_cast<Eigen::Index>(inc.text.size())) throw std::invalid_argument("gate size mismatch");
  const Var gated = ad::mul_col_broadcast(ad::gather_rows(stroke_features, inc.stroke), gate);
  return ad::scatter_add_rows(gated, inc.text, inc.num_text);
}

Var gated_fuse(Tape& t, const Var& a, const Var& b, const HrgnParams& params, const std::vector<bool>& has_strokes) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("gated_fuse: dimension mismatch");
  const Var joint = ad::concat_cols<Real>({a, a * b, b});
  const Var p = ad::sigmoid(ad::add_row_broadcast(ad::matmul(joint, ad::transpose(t.parameter(*params.fuse_w))),
                                                  t.parameter(*params.fuse_b)));
  Var q = ad::add_scalar(-p, 1.0);
  if (!has_strokes.empty()) {
    if (has_strokes.size() != static_cast<std::size_t>(a.rows())) throw std::invalid_argument("gated_fuse: mask size");
    Mat m(a.rows(), 1);
    for (Eigen::Index i = 0; i < a.rows(); ++i) m(i, 0) = has_strokes[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    q = q * t.constant(m);
  }
  return a + ad::mul_col_broadcast(b - a, q);
}

LinkagePrediction linkage_predict(Tape& t, const Var& features, const Eigen::MatrixXd& laplacian,
                                  const HrgnParams& params) {
  if (laplacian.rows() != features.rows() || laplacian.cols() != features.rows())
    throw std::invalid_argument("laplacian does not match features");
  const Var lap = t.constant(laplacian);
  Var h = features;
  for (Param* w : params.layer_w) h = ad::relu(ad::matmul(ad::concat_cols<Real>({h, ad::matmul(lap, h)}), t.parameter(*w)));
  LinkagePrediction out;
  out.logits = ad::matmul(ad::concat_cols<Real>({h, ad::matmul(lap, h)}), t.parameter(*params.link_w));
  out.prob = ad::softmax_rows(out.logits);
  for (int i = 0; i < static_cast<int>(features.rows()); ++i) out.rows.push_back(i);
  out.labels.assign(out.rows.size(), -1);
  return out;
}

LinkageLoss loss_linkage(Tape& t, const std::vector<LinkagePrediction>& preds) {
  LinkageLoss out;
  std::vector<Var> terms;
  for (const auto& p : preds) {
    std::vector<int> rows;
    Mat pick;
    std::vector<int> labels;
    for (std::size_t i = 0; i < p.rows.size(); ++i) {
      if (p.labels[i] < 0) continue;
      rows.push_back(p.rows[i]);
      labels.push_back(p.labels[i]);
    }
    if (rows.empty()) continue;
    pick = Mat::Zero(2, static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) pick(labels[i], static_cast<Eigen::Index>(i)) = 1.0;
    const Var logp = ad::log_softmax_cols(ad::transpose(ad::gather_rows(p.logits, rows)));
    terms.push_back(ad::sum(logp * t.constant(pick)));
    out.count += static_cast<int>(rows.size());
  }
  if (terms.empty()) {
    out.value = scalar_constant(t, 0.0);
    out.empty = true;
    return out;
  }
  Var total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = total + terms[i];
  out.value = ad::scale(total, -1.0 / out.count);
  return out;
}

namespace {

Mat geometric_rows(const std::vector<Proposal>& props, const std::vector<int>& idx, int dim, const Point& origin) {
  Mat m(static_cast<Eigen::Index>(idx.size()), dim);
  for (std::size_t i = 0; i < idx.size(); ++i)
    m.row(static_cast<Eigen::Index>(i)) = geometric_embedding(props[static_cast<std::size_t>(idx[i])], dim, origin).transpose();
  return m;
}

}  // namespace

GraphForward hrgn_forward(Tape& t, const GraphBatch& batch, const HrgnParams& params) {
  const HrgnConfig& cfg = params.config();
  const HeteroGraph& hg = *batch.graph;
  const LocalGraph& g = hg.base;
  const auto& text = *batch.text_props;
  const Point origin = text[static_cast<std::size_t>(g.pivot)].center;

  const Var text_feats = ad::concat_cols<Real>(
      {t.constant(geometric_rows(text, g.nodes, cfg.geometric_dim, origin)), ad::gather_rows(batch.text_content, g.nodes)});

  GraphForward out;
  out.stage1 = agg_text_level(t, g.adjacency, text_feats);
  Var fused = out.stage1;

  bool any_links = false;
  for (const auto& l : hg.stroke_links) any_links = any_links || !l.empty();
  if (batch.use_strokes && any_links && batch.stroke_props && params.with_strokes()) {
    const auto& strokes = *batch.stroke_props;
    std::map<int, int> local;
    for (const auto& l : hg.stroke_links)
      for (int s : l) local.emplace(s, 0);
    for (auto& [s, pos] : local) {
      pos = static_cast<int>(out.stroke_nodes.size());
      out.stroke_nodes.push_back(s);
    }
    std::vector<std::vector<int>> links(hg.stroke_links.size());
    std::vector<bool> has(hg.stroke_links.size(), false);
    for (std::size_t i = 0; i < links.size(); ++i) {
      for (int s : hg.stroke_links[i]) links[i].push_back(local.at(s));
      has[i] = !links[i].empty();
    }
    std::vector<Point> centers;
    for (int s : out.stroke_nodes) centers.push_back(strokes[static_cast<std::size_t>(s)].center);

    const Var stroke_feats =
        ad::concat_cols<Real>({t.constant(geometric_rows(strokes, out.stroke_nodes, cfg.geometric_dim, origin)),
                               ad::gather_rows(batch.stroke_content, out.stroke_nodes)});
    Var attention;
    const Var updated =
        stroke_graph_update(t, stroke_feats, stroke_graph_edges(centers, cfg.stroke_knn), params, 0.0, &attention);
    out.stroke_attention = attention;
    const StrokeIncidence inc = StrokeIncidence::from_links(links);
    const Var gate = stroke_soft_mask(t, updated, inc, params);
    out.stage2 = agg_stroke_level(t, updated, inc, gate);
    fused = gated_fuse(t, out.stage1, *out.stage2, params, has);
  }

  out.linkage = linkage_predict(t, fused, g.laplacian, params);
  out.linkage.rows.clear();
  out.linkage.labels.clear();
  const int pivot_instance = text[static_cast<std::size_t>(g.pivot)].instance;
  for (std::size_t i = 0; i < g.hop1.size(); ++i) {
    out.linkage.rows.push_back(static_cast<int>(i) + 1);
    const int inst = text[static_cast<std::size_t>(g.hop1[i])].instance;
    out.linkage.labels.push_back(pivot_instance < 0 || inst < 0 ? -1 : (inst == pivot_instance ? 1 : 0));
  }
  return out;
}

}  // namespace strokenet
