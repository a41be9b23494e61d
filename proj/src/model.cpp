#include "strokenet/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace strokenet {

std::string ablation_name(Ablation a) {
  switch (a) {
    case Ablation::tlp: return "tlp";
    case Ablation::tlp_slp: return "tlp_slp";
    case Ablation::tlp_tg: return "tlp_tg";
    case Ablation::full: return "full";
  }
  return "full";
}

std::string ablation_label(Ablation a) {
  switch (a) {
    case Ablation::tlp: return "TLP";
    case Ablation::tlp_slp: return "TLP+SLP";
    case Ablation::tlp_tg: return "TLP+TG*";
    case Ablation::full: return "FULL";
  }
  return "FULL";
}

Ablation parse_ablation(const std::string& s) {
  for (Ablation a : all_ablations())
    if (s == ablation_name(a)) return a;
  throw std::invalid_argument("unknown ablation '" + s + "' (expected tlp, tlp_slp, tlp_tg or full)");
}

const std::vector<Ablation>& all_ablations() {
  static const std::vector<Ablation> all{Ablation::tlp, Ablation::tlp_slp, Ablation::tlp_tg, Ablation::full};
  return all;
}

// ---------------------------------------------------------------------------

json ModelConfig::to_json() const {
  json j;
  j["ablation"] = ablation_name(ablation);
  j["sapn"] = {{"backbone_width", sapn.backbone_width}, {"stride", sapn.stride},
               {"head_hidden", sapn.head_hidden},       {"internal_width", sapn.internal_width},
               {"attention_width", sapn.attention_width}, {"orthogonal_scales", sapn.orthogonal_scales}};
  j["hrgn"] = {{"geometric_dim", hrgn.geometric_dim}, {"content_dim", hrgn.content_dim},
               {"roi_grid", hrgn.roi_grid},           {"graph_layers", hrgn.graph_layers},
               {"stroke_knn", hrgn.stroke_knn},       {"leaky_slope", hrgn.leaky_slope}};
  j["labels"] = {{"shrink_ratio", labels.shrink_ratio}, {"end_trim", labels.end_trim}};
  j["loss"] = {{"lambda1", loss.lambda1}, {"lambda2", loss.lambda2}, {"lambda3", loss.lambda3},
               {"lambda4", loss.lambda4}, {"lambda5", loss.lambda5}, {"linkage_weight", linkage_weight},
               {"ohem_ratio", ohem.negative_ratio}, {"ohem_fallback", ohem.fallback_negatives},
               {"tca_inside_ta", ohem.tca_inside_ta}};
  const auto& in = inference;
  j["inference"] = {{"ta_thresh", in.ta_thresh},         {"tca_thresh", in.tca_thresh},
                    {"nms_iou", in.nms_iou},             {"stroke_shrink", in.stroke_shrink},
                    {"stroke_keep", in.stroke_keep},     {"link_thresh", in.link_thresh},
                    {"hop1", in.hop1},                   {"hop2", in.hop2},
                    {"max_stroke_links", in.max_stroke_links}, {"end_slack", in.end_slack},
                    {"min_area", in.min_area},           {"min_score", in.min_score}};
  return j;
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig c;
  c.ablation = parse_ablation(j.at("ablation").get<std::string>());
  const auto& s = j.at("sapn");
  c.sapn.backbone_width = s.at("backbone_width");
  c.sapn.stride = s.at("stride");
  c.sapn.head_hidden = s.at("head_hidden");
  c.sapn.internal_width = s.at("internal_width");
  c.sapn.attention_width = s.at("attention_width");
  c.sapn.orthogonal_scales = s.at("orthogonal_scales").get<std::vector<int>>();
  const auto& h = j.at("hrgn");
  c.hrgn.geometric_dim = h.at("geometric_dim");
  c.hrgn.content_dim = h.at("content_dim");
  c.hrgn.roi_grid = h.at("roi_grid");
  c.hrgn.graph_layers = h.at("graph_layers");
  c.hrgn.stroke_knn = h.at("stroke_knn");
  c.hrgn.leaky_slope = h.at("leaky_slope");
  c.hrgn.feature_channels = c.sapn.backbone_width;
  const auto& l = j.at("labels");
  c.labels.shrink_ratio = l.at("shrink_ratio");
  c.labels.end_trim = l.at("end_trim");
  const auto& w = j.at("loss");
  c.loss.lambda1 = w.at("lambda1");
  c.loss.lambda2 = w.at("lambda2");
  c.loss.lambda3 = w.at("lambda3");
  c.loss.lambda4 = w.at("lambda4");
  c.loss.lambda5 = w.at("lambda5");
  c.linkage_weight = w.at("linkage_weight");
  c.ohem.negative_ratio = w.at("ohem_ratio");
  c.ohem.fallback_negatives = w.at("ohem_fallback");
  c.ohem.tca_inside_ta = w.at("tca_inside_ta");
  const auto& in = j.at("inference");
  c.inference.ta_thresh = in.at("ta_thresh");
  c.inference.tca_thresh = in.at("tca_thresh");
  c.inference.nms_iou = in.at("nms_iou");
  c.inference.stroke_shrink = in.at("stroke_shrink");
  c.inference.stroke_keep = in.at("stroke_keep");
  c.inference.link_thresh = in.at("link_thresh");
  c.inference.hop1 = in.at("hop1");
  c.inference.hop2 = in.at("hop2");
  c.inference.max_stroke_links = in.at("max_stroke_links");
  c.inference.end_slack = in.at("end_slack");
  c.inference.min_area = in.at("min_area");
  c.inference.min_score = in.at("min_score");
  return c;
}

std::uint64_t ModelConfig::hash() const {
  const json j = to_json();
  const std::string key = json{{"ablation", j["ablation"]}, {"sapn", j["sapn"]}, {"hrgn", j["hrgn"]}}.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : key) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// ---------------------------------------------------------------------------

Polygon flip_polygon(const Polygon& poly, int width) {
  const std::size_t k = poly.size() / 2;
  Polygon out;
  out.reserve(poly.size());
  for (std::size_t i = 0; i < k; ++i) out.emplace_back(width - poly[k - 1 - i].x(), poly[k - 1 - i].y());
  for (std::size_t i = 0; i < k; ++i) out.emplace_back(width - poly[poly.size() - 1 - i].x(), poly[poly.size() - 1 - i].y());
  return out;
}

TrainSample flip_horizontal(const TrainSample& s) {
  TrainSample out;
  const int w = s.image.width;
  out.image = RgbImage(w, s.image.height);
  for (int y = 0; y < s.image.height; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) out.image.at(y, x, c) = s.image.at(y, w - 1 - x, c);
  if (s.stroke_mask.size() > 0) out.stroke_mask = s.stroke_mask.rowwise().reverse();
  for (const auto& a : s.instances) out.instances.push_back({flip_polygon(a.polygon, w), a.word});
  return out;
}

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  total += o.total;
  ta += o.ta;
  tca += o.tca;
  sin += o.sin;
  cos += o.cos;
  h += o.h;
  mse += o.mse;
  ssim += o.ssim;
  linkage += o.linkage;
  strokes += o.strokes;
  links += o.links;
  return *this;
}

LossBreakdown LossBreakdown::scaled(double s) const {
  LossBreakdown r = *this;
  r.total *= s;
  r.ta *= s;
  r.tca *= s;
  r.sin *= s;
  r.cos *= s;
  r.h *= s;
  r.mse *= s;
  r.ssim *= s;
  r.linkage *= s;
  return r;
}

Rect ota_rect(const Polygon& poly, ImageSize size, int stride) {
  Rect r = outer_rectangle(poly, size);
  auto grow = [stride](int& lo, int& hi, int limit) {
    if (hi - lo >= stride) return;
    const int need = stride - (hi - lo);
    lo = std::max(0, lo - need / 2 - need % 2);
    hi = std::min(limit, lo + stride);
    lo = std::max(0, hi - stride);
  };
  grow(r.x0, r.x1, size.width);
  grow(r.y0, r.y1, size.height);
  return r;
}

// ---------------------------------------------------------------------------

Model::Model(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.hrgn.feature_channels = cfg_.sapn.backbone_width;
  // Independent streams so ablations share the initial weights of common parts.
  Rng backbone_rng(seed);
  Rng head_rng(seed + 0x9e3779b97f4a7c15ull);
  Rng stroke_rng(seed + 2 * 0x9e3779b97f4a7c15ull);
  Rng graph_rng(seed + 3 * 0x9e3779b97f4a7c15ull);
  backbone_ = Backbone(store_, cfg_.sapn, backbone_rng);
  head_ = TextHead(store_, cfg_.sapn, head_rng);
  if (uses_stroke_head(cfg_.ablation)) {
    tfd_.emplace(store_, cfg_.sapn, stroke_rng);
    scf_.emplace(store_, cfg_.sapn, stroke_rng);
  }
  if (uses_graph(cfg_.ablation)) hrgn_.emplace(store_, cfg_.hrgn, graph_rng, uses_stroke_graph(cfg_.ablation));
}

namespace {

Mat mask_crop_row(const MaskPlane& mask, const Rect& r) {
  Mat m(1, static_cast<Eigen::Index>(r.width()) * r.height());
  for (int y = 0; y < r.height(); ++y)
    for (int x = 0; x < r.width(); ++x)
      m(0, static_cast<Eigen::Index>(y) * r.width() + x) = mask(r.y0 + y, r.x0 + x) ? 1.0 : 0.0;
  return m;
}

int instance_at(const LabelPlane& inst, const Point& c) {
  const int x = std::clamp(static_cast<int>(std::floor(c.x())), 0, static_cast<int>(inst.cols()) - 1);
  const int y = std::clamp(static_cast<int>(std::floor(c.y())), 0, static_cast<int>(inst.rows()) - 1);
  if (inst(y, x) >= 0) return inst(y, x);
  for (int r = 1; r <= 2; ++r)
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) {
        const int yy = y + dy;
        const int xx = x + dx;
        if (yy < 0 || xx < 0 || yy >= inst.rows() || xx >= inst.cols()) continue;
        if (inst(yy, xx) >= 0) return inst(yy, xx);
      }
  return -1;
}

Plane to_plane(const MaskPlane& m) { return m.cast<double>(); }

}  // namespace

LossGraph Model::build_loss(Tape& t, const TrainSample& sample, const TrainOptions& opt, Rng& rng) const {
  const int h = sample.image.height;
  const int w = sample.image.width;
  const ImageSize size{w, h};
  const Var x = t.constant(image_to_tensor(sample.image), h, w);
  const FeatureMap f = backbone_.forward(t, x);
  const PredictedMaps pred = head_.forward(t, f, h, w);
  const LabelResult lab = make_geometry_maps(sample.instances, size, cfg_.labels);

  std::vector<std::pair<Var, Mat>> strokes;
  if (tfd_ && sample.stroke_mask.size() > 0 && !sample.instances.empty()) {
    std::vector<int> order(sample.instances.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
    for (int idx : order) {
      if (static_cast<int>(strokes.size()) >= opt.max_strokes) break;
      const Rect ota = ota_rect(sample.instances[static_cast<std::size_t>(idx)].polygon, size, f.stride);
      if (ota.width() < f.stride || ota.height() < f.stride) continue;
      const auto cues = tfd_->forward(t, f, ota);
      const Var rgb = t.constant(image_crop_to_tensor(sample.image, ota), ota.height(), ota.width());
      strokes.emplace_back(scf_->forward(t, cues.cues, rgb), mask_crop_row(sample.stroke_mask, ota));
    }
  }

  const SapnLoss sl = loss_sapn(t, pred, lab.maps, strokes, cfg_.loss, cfg_.ohem);
  LossGraph out;
  out.total = sl.total;
  out.parts.ta = cfg_.loss.lambda1 * sl.cls.ta.scalar();
  out.parts.tca = cfg_.loss.lambda2 * sl.cls.tca.scalar();
  out.parts.sin = cfg_.loss.lambda3 * sl.reg.sin.scalar();
  out.parts.cos = cfg_.loss.lambda3 * sl.reg.cos.scalar();
  out.parts.h = sl.reg.h.scalar();
  if (sl.stroke) {
    out.parts.mse = cfg_.loss.lambda4 * sl.stroke->mse.scalar();
    out.parts.ssim = cfg_.loss.lambda5 * sl.stroke->ssim.scalar();
    out.parts.strokes = static_cast<int>(strokes.size());
  }

  if (hrgn_) {
    std::vector<Proposal> props = extract_text_proposals(lab.maps, 0.5, 0.5);
    for (Proposal& p : props) {
      p.instance = instance_at(lab.instance, p.center);
      if (opt.jitter > 0.0) {
        const double hh = p.height();
        p.center += opt.jitter * hh * Point(rng.normal(), rng.normal());
        p.h1 *= std::max(0.5, 1.0 + opt.jitter * rng.normal());
        p.h2 *= std::max(0.5, 1.0 + opt.jitter * rng.normal());
        const double a = std::atan2(p.sin_theta, p.cos_theta) + 0.5 * opt.jitter * rng.normal();
        p.sin_theta = std::sin(a);
        p.cos_theta = std::cos(a);
      }
    }
    if (props.size() >= 2) {
      std::vector<Proposal> stroke_props;
      if (uses_stroke_graph(cfg_.ablation) && sample.stroke_mask.size() > 0)
        stroke_props = shrink_to_stroke_proposals(props, to_plane(sample.stroke_mask), cfg_.inference.stroke_shrink,
                                                  cfg_.inference.stroke_keep);
      GraphBatch batch;
      batch.text_props = &props;
      batch.stroke_props = &stroke_props;
      batch.text_content = content_embeddings(t, f, props, *hrgn_);
      if (!stroke_props.empty()) batch.stroke_content = content_embeddings(t, f, stroke_props, *hrgn_);
      batch.use_strokes = !stroke_props.empty();

      std::vector<int> pivots(props.size());
      std::iota(pivots.begin(), pivots.end(), 0);
      for (std::size_t i = pivots.size(); i > 1; --i)
        std::swap(pivots[i - 1], pivots[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
      if (static_cast<int>(pivots.size()) > opt.max_pivots) pivots.resize(static_cast<std::size_t>(opt.max_pivots));

      std::vector<LinkagePrediction> preds;
      for (int pivot : pivots) {
        HeteroGraph hg;
        hg.base = build_local_graph(pivot, props, {cfg_.inference.hop1, cfg_.inference.hop2});
        if (hg.base.hop1.empty()) continue;
        if (batch.use_strokes)
          hg = attach_stroke_nodes(hg.base, props, stroke_props, cfg_.inference.max_stroke_links);
        else
          hg.stroke_links.assign(hg.base.nodes.size(), {});
        batch.graph = &hg;
        preds.push_back(hrgn_forward(t, batch, *hrgn_).linkage);
      }
      const LinkageLoss ll = loss_linkage(t, preds);
      if (!ll.empty) {
        out.total = out.total + ad::scale(ll.value, cfg_.linkage_weight);
        out.parts.linkage = cfg_.linkage_weight * ll.value.scalar();
        out.parts.links = ll.count;
      }
    }
  }
  out.parts.total = out.total.scalar();
  return out;
}

Plane Model::stroke_crop(const RgbImage& image, const Rect& ota) const {
  if (!tfd_) throw std::logic_error("model has no stroke head");
  Tape t;
  const Var x = t.constant(image_to_tensor(image), image.height, image.width);
  const FeatureMap f = backbone_.forward(t, x);
  const auto cues = tfd_->forward(t, f, ota);
  const Var rgb = t.constant(image_crop_to_tensor(image, ota), ota.height(), ota.width());
  const Mat v = scf_->forward(t, cues.cues, rgb).value();
  Plane p(ota.height(), ota.width());
  for (int y = 0; y < ota.height(); ++y)
    for (int xx = 0; xx < ota.width(); ++xx) p(y, xx) = v(0, static_cast<Eigen::Index>(y) * ota.width() + xx);
  return p;
}

InferenceResult Model::infer(const RgbImage& image) const {
  const InferenceOptions& io = cfg_.inference;
  const int h = image.height;
  const int w = image.width;
  const ImageSize size{w, h};
  Tape t;
  const Var x = t.constant(image_to_tensor(image), h, w);
  const FeatureMap f = backbone_.forward(t, x);
  const PredictedMaps pred = head_.forward(t, f, h, w);

  InferenceResult res;
  res.maps = pred.to_maps();
  res.stroke_map = Plane::Zero(h, w);
  std::vector<Proposal> props = extract_text_proposals(res.maps, io.ta_thresh, io.tca_thresh);
  props = nms(boundary_filter(props, size), io.nms_iou);
  res.text_props = props;
  if (props.empty()) return res;

  // Stroke map over each text component's region.
  if (tfd_) {
    std::map<int, Polygon> regions;
    for (const Proposal& p : props) {
      const Polygon q = p.quad();
      auto& r = regions[p.component];
      r.insert(r.end(), q.begin(), q.end());
    }
    for (const auto& [comp, pts] : regions) {
      Rect ota;
      try {
        ota = ota_rect(pts, size, f.stride);
      } catch (const std::invalid_argument&) {
        continue;
      }
      if (ota.width() < f.stride || ota.height() < f.stride) continue;
      const auto cues = tfd_->forward(t, f, ota);
      const Var rgb = t.constant(image_crop_to_tensor(image, ota), ota.height(), ota.width());
      const Mat v = scf_->forward(t, cues.cues, rgb).value();
      for (int y = 0; y < ota.height(); ++y)
        for (int xx = 0; xx < ota.width(); ++xx) {
          double& dst = res.stroke_map(ota.y0 + y, ota.x0 + xx);
          dst = std::max(dst, v(0, static_cast<Eigen::Index>(y) * ota.width() + xx));
        }
    }
  }

  std::vector<std::vector<int>> groups;
  std::map<std::pair<int, int>, double> link_prob;
  if (hrgn_ && props.size() >= 2) {
    std::vector<Proposal> stroke_props;
    if (uses_stroke_graph(cfg_.ablation))
      stroke_props = shrink_to_stroke_proposals(props, res.stroke_map, io.stroke_shrink, io.stroke_keep);
    res.stroke_props = stroke_props;
    GraphBatch batch;
    batch.text_props = &props;
    batch.stroke_props = &stroke_props;
    batch.text_content = content_embeddings(t, f, props, *hrgn_);
    if (!stroke_props.empty()) batch.stroke_content = content_embeddings(t, f, stroke_props, *hrgn_);
    batch.use_strokes = !stroke_props.empty();
    std::vector<LinkDecision> decisions;
    for (int pivot = 0; pivot < static_cast<int>(props.size()); ++pivot) {
      HeteroGraph hg;
      hg.base = build_local_graph(pivot, props, {io.hop1, io.hop2});
      if (hg.base.hop1.empty()) continue;
      if (batch.use_strokes)
        hg = attach_stroke_nodes(hg.base, props, stroke_props, io.max_stroke_links);
      else
        hg.stroke_links.assign(hg.base.nodes.size(), {});
      batch.graph = &hg;
      const GraphForward gf = hrgn_forward(t, batch, *hrgn_);
      const Mat& prob = gf.linkage.prob.value();
      for (std::size_t i = 0; i < hg.base.hop1.size(); ++i)
        decisions.push_back({pivot, hg.base.hop1[i], prob(static_cast<Eigen::Index>(i) + 1, 1)});
    }
    res.links = decisions;
    for (const auto& d : decisions) {
      auto key = std::minmax(d.pivot, d.neighbor);
      auto [it, fresh] = link_prob.emplace(key, d.prob);
      if (!fresh) it->second = 0.5 * (it->second + d.prob);
    }
    groups = group_bfs(static_cast<int>(props.size()), accept_links(decisions, io.link_thresh));
  } else {
    std::map<int, std::vector<int>> by_comp;
    for (int i = 0; i < static_cast<int>(props.size()); ++i) by_comp[props[static_cast<std::size_t>(i)].component].push_back(i);
    for (auto& [c, members] : by_comp) groups.push_back(members);
  }

  for (const auto& g : groups) {
    std::vector<Point> centers;
    for (int i : g) centers.push_back(props[static_cast<std::size_t>(i)].center);
    const std::vector<int> order = order_min_path(centers);
    std::vector<Proposal> chain;
    for (int k : order) chain.push_back(props[static_cast<std::size_t>(g[static_cast<std::size_t>(k)])]);
    chain = extend_chain_ends(chain, cfg_.labels.end_trim, io.end_slack);
    const Boundary b = reconstruct_boundary(chain);
    if (area(b.polygon) < io.min_area) continue;
    TextInstance inst;
    inst.ordered_nodes = chain;
    inst.polygon = b.polygon;
    inst.hull_fallback = b.hull_fallback;
    double s = 0.0;
    int n = 0;
    if (!link_prob.empty()) {
      for (std::size_t a = 0; a < g.size(); ++a)
        for (std::size_t c = a + 1; c < g.size(); ++c) {
          auto it = link_prob.find(std::minmax(g[a], g[c]));
          if (it != link_prob.end() && it->second >= io.link_thresh) {
            s += it->second;
            ++n;
          }
        }
    }
    if (n == 0) {
      for (const Proposal& p : chain) s += p.score;
      n = static_cast<int>(chain.size());
    }
    inst.score = s / n;
    if (inst.score < io.min_score) continue;
    res.hull_fallbacks += b.hull_fallback ? 1 : 0;
    res.instances.push_back(std::move(inst));
  }
  return res;
}

}  // namespace strokenet
