#include "suites.hpp"

#include "gradcheck.hpp"
#include "oracles.hpp"

#include "strokenet/config.hpp"
#include "strokenet/hrgn.hpp"
#include "strokenet/sapn.hpp"
#include "strokenet/synth.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace strokenet::testing {

bool all_pass(const std::vector<Check>& checks) {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return !checks.empty();
}

std::string failures(const std::vector<Check>& checks) {
  std::ostringstream os;
  for (const auto& c : checks)
    if (!c.pass) os << c.name << " (" << c.value << ") " << c.detail << "; ";
  return os.str();
}

namespace {

SapnConfig tiny_sapn() {
  SapnConfig c;
  c.backbone_width = 4;
  c.stride = 2;
  c.head_hidden = 4;
  c.internal_width = 4;
  c.attention_width = 2;
  c.orthogonal_scales = {3, 5};
  return c;
}

HrgnConfig tiny_hrgn() {
  HrgnConfig c;
  c.geometric_dim = 32;
  c.content_dim = 4;
  c.roi_grid = 2;
  c.feature_channels = 4;
  c.graph_layers = 2;
  return c;
}

Param& input(std::vector<std::unique_ptr<Param>>& keep, const std::string& name, Mat value) {
  keep.push_back(std::make_unique<Param>(name, std::move(value)));
  return *keep.back();
}

std::vector<Param*> with(std::vector<Param*> ps, std::initializer_list<Param*> extra) {
  ps.insert(ps.end(), extra.begin(), extra.end());
  return ps;
}

Check grad_entry(const std::string& name, const std::vector<Param*>& params, const LossFn& loss, Rng& rng) {
  const GradCheck g = gradcheck(params, loss, rng);
  return {name, g.max_rel_err <= kGradTolerance, g.max_rel_err, g.worst};
}

// Probe whose weights are fixed by `seed`, so every evaluation sees the same ones.
Var probe(Tape& t, const Var& v, std::uint64_t seed) {
  Rng r(seed);
  return random_probe(t, v, r);
}

Proposal random_proposal(Rng& rng, double lo, double hi) {
  Proposal p;
  p.center = Point(rng.uniform(lo, hi), rng.uniform(lo, hi));
  p.h1 = rng.uniform(2.0, 5.0);
  p.h2 = rng.uniform(2.0, 5.0);
  const double a = rng.uniform(-0.6, 0.6);
  p.sin_theta = std::sin(a);
  p.cos_theta = std::cos(a);
  p.width = rng.uniform(2.0, 6.0);
  p.score = rng.uniform();
  return p;
}

std::vector<std::pair<int, int>> random_edges(Rng& rng, int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i) {
    e.emplace_back(i, i);
    const int k = rng.uniform_int(1, 3);
    for (int j = 0; j < k; ++j) e.emplace_back(i, rng.uniform_int(0, n - 1));
  }
  return e;
}

}  // namespace

std::vector<Check> gradient_checks(std::uint64_t seed) {
  std::vector<Check> out;
  Rng rng(seed);
  const SapnConfig sc = tiny_sapn();
  const HrgnConfig hc = tiny_hrgn();
  const int d = hc.dim();

  ParamStore store;
  Backbone backbone(store, sc, rng);
  ParamStore head_store;
  TextHead head(head_store, sc, rng);
  ParamStore tfd_store;
  TextFeatureDistillation tfd(tfd_store, sc, rng);
  ParamStore scf_store;
  StrokeCuesFiltration scf(scf_store, sc, rng);
  ParamStore g_store;
  HrgnParams hp(g_store, hc, rng);
  std::vector<std::unique_ptr<Param>> keep;
  const std::uint64_t ps = rng.next();
  // Zero-initialised biases put ReLU inputs exactly on the kink wherever a
  // receptive field is dead; shift every weight to a generic point.
  for (ParamStore* s : {&store, &head_store, &tfd_store, &scf_store, &g_store})
    for (Param* p : s->all()) p->value += random_mat(rng, p->value.rows(), p->value.cols(), -0.1, 0.1);

  {
    Param& img = input(keep, "image", random_mat(rng, 3, 64, -0.5, 0.5));
    out.push_back(grad_entry("backbone", with(store.all(), {&img}), [&](Tape& t) {
      return probe(t, backbone.forward(t, t.parameter(img, 8, 8)).planes, ps);
    }, rng));
  }
  {
    Param& feat = input(keep, "features", random_mat(rng, 4, 16));
    out.push_back(grad_entry("text head", with(head_store.all(), {&feat}), [&](Tape& t) {
      const PredictedMaps p = head.forward(t, {t.parameter(feat, 4, 4), 2}, 8, 8);
      return probe(t, p.ta_logp, ps) + probe(t, p.tca_logp, ps + 1) + probe(t, p.h1, ps + 2) +
             probe(t, p.h2, ps + 3) + probe(t, p.cos_theta, ps + 4) + probe(t, p.sin_theta, ps + 5);
    }, rng));
  }
  {
    Param& feat = input(keep, "features", random_mat(rng, 4, 36));
    const Rect ota{1, 2, 10, 11};
    out.push_back(grad_entry("text feature distillation", with(tfd_store.all(), {&feat}), [&](Tape& t) {
      return probe(t, tfd.forward(t, {t.parameter(feat, 6, 6), 2}, ota).cues, ps);
    }, rng));
  }
  {
    Param& cues = input(keep, "cues", random_mat(rng, 4, 30));
    Param& rgb = input(keep, "rgb", random_mat(rng, 3, 30, -0.5, 0.5));
    out.push_back(grad_entry("stroke cue filtration", with(scf_store.all(), {&cues, &rgb}), [&](Tape& t) {
      return probe(t, scf.forward(t, t.parameter(cues, 5, 6), t.parameter(rgb, 5, 6)), ps);
    }, rng));
  }

  // Losses on a 6 x 6 map.
  const int H = 6, W = 6, N = H * W;
  GeometryMaps gt = GeometryMaps::zeros({W, H});
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const bool text = x >= 1 && x <= 4 && y >= 2 && y <= 4;
      gt.ta(y, x) = text ? 1.0 : 0.0;
      gt.tca(y, x) = text && y == 3 ? 1.0 : 0.0;
      gt.h1(y, x) = text ? rng.uniform(2.0, 8.0) : 0.0;
      gt.h2(y, x) = text ? rng.uniform(2.0, 8.0) : 0.0;
      const double a = rng.uniform(-1.0, 1.0);
      gt.sin_theta(y, x) = text ? std::sin(a) : 0.0;
      gt.cos_theta(y, x) = text ? std::cos(a) : 0.0;
    }
  Param& ta = input(keep, "ta_logits", random_mat(rng, 2, N, -2.0, 2.0));
  Param& tca = input(keep, "tca_logits", random_mat(rng, 2, N, -2.0, 2.0));
  Param& hl = input(keep, "h_logits", random_mat(rng, 2, N, 0.5, 2.5));
  Param& ang = input(keep, "angle", random_mat(rng, 2, N, -1.5, 1.5));
  auto maps = [&](Tape& t) {
    PredictedMaps p;
    p.height = H;
    p.width = W;
    p.ta_logp = ad::log_softmax_cols(t.parameter(ta, H, W));
    p.tca_logp = ad::log_softmax_cols(t.parameter(tca, H, W));
    const Var h = ad::exp(t.parameter(hl, H, W));
    p.h1 = ad::slice_rows(h, 0, 1);
    p.h2 = ad::slice_rows(h, 1, 1);
    const Var a = t.parameter(ang, H, W);
    p.sin_theta = ad::slice_rows(a, 0, 1);
    p.cos_theta = ad::slice_rows(a, 1, 1);
    return p;
  };
  LossWeights lw;
  OhemOptions oo;
  oo.negative_ratio = 2.0;
  out.push_back(grad_entry("classification loss (OHEM TA + TCA)", {&ta, &tca}, [&](Tape& t) {
    return loss_cls(t, maps(t), gt, lw, oo).total;
  }, rng));
  out.push_back(grad_entry("sin loss", {&ang}, [&](Tape& t) { return loss_reg(t, maps(t), gt, lw).sin; }, rng));
  out.push_back(grad_entry("cos loss", {&ang}, [&](Tape& t) { return loss_reg(t, maps(t), gt, lw).cos; }, rng));
  out.push_back(grad_entry("height loss", {&hl}, [&](Tape& t) { return loss_reg(t, maps(t), gt, lw).h; }, rng));

  Param& stroke_logits = input(keep, "stroke_logits", random_mat(rng, 1, 30, -2.0, 2.0));
  Mat stroke_gt(1, 30);
  for (int i = 0; i < 30; ++i) stroke_gt(0, i) = rng.bernoulli(0.4) ? 1.0 : 0.0;
  out.push_back(grad_entry("stroke MSE loss", {&stroke_logits}, [&](Tape& t) {
    return loss_stroke(t, ad::sigmoid(t.parameter(stroke_logits, 5, 6)), stroke_gt, lw).mse;
  }, rng));
  out.push_back(grad_entry("stroke SSIM loss", {&stroke_logits}, [&](Tape& t) {
    return loss_stroke(t, ad::sigmoid(t.parameter(stroke_logits, 5, 6)), stroke_gt, lw).ssim;
  }, rng));

  // Graph blocks.
  const int n = 6;
  Param& feats = input(keep, "node_features", random_mat(rng, n, d));
  const auto edges = random_edges(rng, n);
  out.push_back(grad_entry("GAT attention", {hp.att_w, hp.att_a, &feats}, [&](Tape& t) {
    return probe(t, gat_attention(t, t.parameter(feats), edges, n, hp), ps);
  }, rng));
  out.push_back(grad_entry("stroke graph update", {hp.att_w, hp.att_a, &feats}, [&](Tape& t) {
    return probe(t, stroke_graph_update(t, t.parameter(feats), edges, hp), ps);
  }, rng));

  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) raw(0, i) = raw(i, 0) = 1.0;
  raw(1, 2) = raw(2, 1) = 1.0;
  const GraphMatrices gm = graph_matrices(raw);
  out.push_back(grad_entry("text-level aggregation", {&feats}, [&](Tape& t) {
    return probe(t, agg_text_level(t, gm.adjacency, t.parameter(feats)), ps);
  }, rng));

  const int m = 5;
  Param& sfeats = input(keep, "stroke_features", random_mat(rng, m, d, -0.5, 0.5));
  std::vector<std::vector<int>> links(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (i == 3) continue;  // a text node without strokes
    const int k = rng.uniform_int(1, 3);
    for (int j = 0; j < k; ++j) links[static_cast<std::size_t>(i)].push_back(rng.uniform_int(0, m - 1));
  }
  const StrokeIncidence inc = StrokeIncidence::from_links(links);
  out.push_back(grad_entry("stroke soft mask", {hp.mask_m, &sfeats}, [&](Tape& t) {
    return probe(t, stroke_soft_mask(t, t.parameter(sfeats), inc, hp), ps);
  }, rng));
  out.push_back(grad_entry("stroke-level aggregation", {hp.mask_m, &sfeats}, [&](Tape& t) {
    const Var f = t.parameter(sfeats);
    return probe(t, agg_stroke_level(t, f, inc, stroke_soft_mask(t, f, inc, hp)), ps);
  }, rng));

  Param& fa = input(keep, "fuse_a", random_mat(rng, n, d));
  Param& fb = input(keep, "fuse_b", random_mat(rng, n, d));
  const std::vector<bool> has{true, true, false, true, false, true};
  out.push_back(grad_entry("gated fusion", {hp.fuse_w, hp.fuse_b, &fa, &fb}, [&](Tape& t) {
    return probe(t, gated_fuse(t, t.parameter(fa), t.parameter(fb), hp, has), ps);
  }, rng));

  std::vector<Param*> link_params = hp.layer_w;
  link_params.push_back(hp.link_w);
  link_params.push_back(&feats);
  out.push_back(grad_entry("linkage prediction", link_params, [&](Tape& t) {
    return probe(t, linkage_predict(t, t.parameter(feats), gm.laplacian, hp).prob, ps);
  }, rng));
  out.push_back(grad_entry("linkage loss", link_params, [&](Tape& t) {
    LinkagePrediction p = linkage_predict(t, t.parameter(feats), gm.laplacian, hp);
    p.rows = {1, 2, 3, 4};
    p.labels = {1, 0, 1, -1};
    LinkagePrediction q = linkage_predict(t, t.parameter(feats), gm.laplacian, hp);
    q.rows = {1, 5};
    q.labels = {0, 0};
    return loss_linkage(t, {p, q}).value;
  }, rng));

  // RRoI content embedding and a whole heterogeneous graph pass.
  Param& fmap = input(keep, "feature_map", random_mat(rng, 4, 100));
  std::vector<Proposal> props;
  for (int i = 0; i < 10; ++i) props.push_back(random_proposal(rng, 4.0, 16.0));
  for (int i = 0; i < 10; ++i) props[static_cast<std::size_t>(i)].instance = i % 3;
  out.push_back(grad_entry("content embedding", {hp.content_w, hp.content_b, &fmap}, [&](Tape& t) {
    return probe(t, content_embeddings(t, {t.parameter(fmap, 10, 10), 2}, props, hp), ps);
  }, rng));

  std::vector<Proposal> strokes = shrink_to_stroke_proposals(props, Plane::Ones(20, 20), 0.8, 0.5);
  HeteroGraph hg = attach_stroke_nodes(build_local_graph(0, props, {4, 2}), props, strokes, 3);
  out.push_back(grad_entry("graph forward to linkage loss", g_store.all(), [&](Tape& t) {
    const FeatureMap f{t.parameter(fmap, 10, 10), 2};
    GraphBatch b;
    b.graph = &hg;
    b.text_props = &props;
    b.stroke_props = &strokes;
    b.text_content = content_embeddings(t, f, props, hp);
    b.stroke_content = content_embeddings(t, f, strokes, hp);
    const GraphForward gf = hrgn_forward(t, b, hp);
    return loss_linkage(t, {gf.linkage}).value;
  }, rng));
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Check> oracle_checks(std::uint64_t seed, const OracleCounts& counts) {
  Rng rng(seed);
  std::vector<Check> out;

  int bad = 0;
  std::string detail;
  for (int s = 0; s < counts.nms_sets; ++s) {
    const int n = rng.uniform_int(1, 30);
    std::vector<Proposal> props;
    const int clusters = rng.uniform_int(1, 4);
    std::vector<Point> centres;
    for (int c = 0; c < clusters; ++c) centres.emplace_back(rng.uniform(10, 90), rng.uniform(10, 90));
    for (int i = 0; i < n; ++i) {
      Proposal p;
      p.center = centres[static_cast<std::size_t>(rng.uniform_int(0, clusters - 1))] +
                 Point(rng.uniform(-6, 6), rng.uniform(-6, 6));
      p.h1 = rng.uniform(2, 8);
      p.h2 = rng.uniform(2, 8);
      const double a = rng.uniform(0, 2 * std::numbers::pi);
      p.sin_theta = std::sin(a);
      p.cos_theta = std::cos(a);
      p.width = rng.uniform(3, 15);
      p.score = rng.bernoulli(0.2) ? 0.5 : rng.uniform();  // some tied scores
      props.push_back(p);
    }
    const double thr = rng.uniform(0.1, 0.7);
    const auto got = nms(props, thr);
    const auto want = oracle::nms(props, thr);
    bool same = got.size() == want.size();
    for (std::size_t i = 0; same && i < got.size(); ++i)
      same = got[i].center == want[i].center && got[i].score == want[i].score;
    if (!same) {
      ++bad;
      detail = "set " + std::to_string(s) + ": kept " + std::to_string(got.size()) + " vs " + std::to_string(want.size());
    }
  }
  out.push_back({"NMS vs all-pairs brute force", bad == 0, static_cast<double>(bad), detail});

  bad = 0;
  detail.clear();
  for (int s = 0; s < counts.knn_clouds; ++s) {
    const int n = rng.uniform_int(2, 60);
    std::vector<Proposal> props(static_cast<std::size_t>(n));
    std::vector<Point> pts;
    for (auto& p : props) {
      p.center = rng.bernoulli(0.1) && !pts.empty() ? pts[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(pts.size()) - 1))]
                                                     : Point(std::round(rng.uniform(0, 50)), std::round(rng.uniform(0, 50)));
      pts.push_back(p.center);
    }
    const int pivot = rng.uniform_int(0, n - 1);
    const LocalGraph g = build_local_graph(pivot, props, {8, 4});
    const oracle::Hops h = oracle::hops(pivot, pts, 8, 4);
    bool same = g.hop1 == h.hop1 && g.hop2 == h.hop2;
    const auto lists = knn_lists(pts, 5);
    for (int i = 0; i < n && same; ++i) {
      std::vector<int> others;
      for (int j = 0; j < n; ++j)
        if (j != i) others.push_back(j);
      auto sorted = oracle::sorted_by_distance(pts[static_cast<std::size_t>(i)], others, pts);
      sorted.resize(std::min<std::size_t>(5, sorted.size()));
      same = lists[static_cast<std::size_t>(i)] == sorted;
    }
    if (!same) {
      ++bad;
      detail = "cloud " + std::to_string(s);
    }
  }
  out.push_back({"KNN hop sets vs exhaustive sort", bad == 0, static_cast<double>(bad), detail});

  bad = 0;
  detail.clear();
  for (int s = 0; s < counts.graphs; ++s) {
    const int n = rng.uniform_int(1, 40);
    const int e = rng.uniform_int(0, 2 * n);
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < e; ++i) edges.emplace_back(rng.uniform_int(0, n - 1), rng.uniform_int(0, n - 1));
    if (group_bfs(n, edges) != oracle::components(n, edges)) {
      ++bad;
      detail = "graph " + std::to_string(s);
    }
  }
  out.push_back({"group_bfs vs union-find", bad == 0, static_cast<double>(bad), detail});

  bad = 0;
  detail.clear();
  for (int s = 0; s < counts.paths; ++s) {
    const int n = 1 + s % 7;
    std::vector<Point> pts;
    for (int i = 0; i < n; ++i) pts.emplace_back(rng.uniform(0, 100), rng.uniform(0, 100));
    if (order_min_path(pts) != oracle::min_path(pts)) {
      ++bad;
      detail = "instance " + std::to_string(s) + " (n=" + std::to_string(n) + ")";
    }
  }
  out.push_back({"order_min_path vs exhaustive permutations", bad == 0, static_cast<double>(bad), detail});
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Check> identity_checks(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Check> out;

  {
    SapnConfig sc;
    ParamStore store;
    Backbone bb(store, sc, rng);
    TextHead head(store, sc, rng);
    RgbImage img(32, 32);
    for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    Tape t;
    const FeatureMap f = bb.forward(t, t.constant(image_to_tensor(img), 32, 32));
    const GeometryMaps m = head.forward(t, f, 32, 32).to_maps();
    const double worst = (m.sin_theta.square() + m.cos_theta.square() - 1.0).abs().maxCoeff();
    out.push_back({"sin^2 + cos^2 = 1 on every pixel", worst <= 1e-6, worst, ""});
  }

  const HrgnConfig hc = tiny_hrgn();
  ParamStore store;
  HrgnParams hp(store, hc, rng);
  const int n = 7;
  {
    Tape t;
    const Var feats = t.constant(random_mat(rng, n, hc.dim(), -3.0, 3.0));
    const auto edges = random_edges(rng, n);
    const Mat alpha = gat_attention(t, feats, edges, n, hp).value();
    std::vector<double> sums(static_cast<std::size_t>(n), 0.0);
    for (std::size_t k = 0; k < edges.size(); ++k) sums[static_cast<std::size_t>(edges[k].first)] += alpha(static_cast<Eigen::Index>(k), 0);
    double worst = 0.0;
    for (double s : sums) worst = std::max(worst, std::abs(s - 1.0));
    out.push_back({"GAT coefficients sum to 1 per node", worst <= 1e-9, worst, ""});

    Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) raw(0, i) = raw(i, 0) = 1.0;
    const Mat prob = linkage_predict(t, feats, graph_matrices(raw).laplacian, hp).prob.value();
    const double lw = (prob.rowwise().sum().array() - 1.0).abs().maxCoeff();
    out.push_back({"linkage softmax rows sum to 1", lw <= 1e-9, lw, ""});
  }
  {
    Tape t;
    LossWeights w;
    Mat x = random_mat(rng, 1, 48, 0.0, 1.0);
    Mat b(1, 48);
    for (int i = 0; i < 48; ++i) b(0, i) = rng.bernoulli(0.3) ? 1.0 : 0.0;
    double ssim = 0.0, mse = 0.0;
    for (const Mat* m : {&x, &b}) {
      const StrokeLoss l = loss_stroke(t, t.constant(*m, 6, 8), *m, w);
      ssim = std::max(ssim, std::abs(l.ssim.scalar()));
      mse = std::max(mse, std::abs(l.mse.scalar()));
    }
    out.push_back({"SSIM loss of identical maps is exactly 0", ssim == 0.0, ssim, ""});
    out.push_back({"MSE loss of identical maps is exactly 0", mse == 0.0, mse, ""});
  }
  {
    Tape t;
    const Mat a = random_mat(rng, n, hc.dim(), -2.0, 2.0);
    const Mat b = random_mat(rng, n, hc.dim(), -2.0, 2.0);
    std::vector<bool> has;
    for (int i = 0; i < n; ++i) has.push_back(i % 3 != 0);
    const Mat f = gated_fuse(t, t.constant(a), t.constant(b), hp, has).value();
    int outside = 0;
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      const double lo = std::min(a.data()[i], b.data()[i]);
      const double hi = std::max(a.data()[i], b.data()[i]);
      if (f.data()[i] < lo || f.data()[i] > hi) ++outside;
    }
    out.push_back({"gated fusion lies between its inputs", outside == 0, static_cast<double>(outside), ""});
  }
  return out;
}

// ---------------------------------------------------------------------------

Check geometry_round_trip(std::uint64_t seed, int rectangles, double min_iou) {
  Rng rng(seed);
  const ImageSize size{160, 160};
  const LabelOptions lo;
  double worst = 1.0;
  std::string detail;
  for (int r = 0; r < rectangles; ++r) {
    const double h = rng.uniform(15, 40);
    const double w = rng.uniform(1.5 * h, 110);
    const double deg = r < 4 ? 0.0 : rng.uniform(0, 360);
    const auto [c, s] = rotation_degrees(deg);
    const Point d(c, s);
    const Point up(s, -c);
    const double reach = 0.5 * std::abs(w * c) + 0.5 * std::abs(h * s) + 2;
    const double reach_y = 0.5 * std::abs(w * s) + 0.5 * std::abs(h * c) + 2;
    const Point ctr(rng.uniform(reach, size.width - reach), rng.uniform(reach_y, size.height - reach_y));
    const Polygon rect{ctr - d * (w / 2) + up * (h / 2), ctr + d * (w / 2) + up * (h / 2),
                       ctr + d * (w / 2) - up * (h / 2), ctr - d * (w / 2) - up * (h / 2)};
    const LabelResult lab = make_geometry_maps({{rect, "RECT"}}, size, lo);
    const auto props = extract_text_proposals(lab.maps, 0.5, 0.5);
    double iou = 0.0;
    if (!props.empty()) {
      std::vector<Point> centres;
      for (const auto& p : props) centres.push_back(p.center);
      std::vector<Proposal> chain;
      for (int k : order_min_path(centres)) chain.push_back(props[static_cast<std::size_t>(k)]);
      chain = extend_chain_ends(chain, lo.end_trim, InferenceOptions{}.end_slack);
      iou = polygon_iou(reconstruct_boundary(chain).polygon, rect);
    }
    if (iou < worst) {
      worst = iou;
      detail = "rectangle " + std::to_string(r) + " (" + std::to_string(w) + "x" + std::to_string(h) + " at " +
               std::to_string(deg) + " deg)";
    }
  }
  return {"geometry round trip", worst >= min_iou, worst, "worst: " + detail};
}

// ---------------------------------------------------------------------------

GeneratorContract generator_contract(const fs::path& config, int count, const fs::path& dir, std::uint64_t seed) {
  GeneratorContract gc;
  const RunConfig rc = load_config(config);
  const int per = std::max(1, count / static_cast<int>(rc.subsets.size()));
  fs::remove_all(dir);
  const fs::path a = dir / "a";
  const fs::path b = dir / "b";
  generate_dataset(rc.subsets, per, a, seed);
  regenerate_dataset(a / "manifest.json", b);

  std::map<std::string, GenConfig> by_id;
  for (const auto& g : rc.subsets) by_id[g.id] = g;
  for (int i = 0; i < per * static_cast<int>(rc.subsets.size()); ++i) {
    const GenConfig& cfg = rc.subsets[static_cast<std::size_t>(i / per)];
    const SceneSample s = generate_sample(cfg, seed + static_cast<std::uint64_t>(i));
    ++gc.samples;
    // Every stroke pixel centre lies within 1 px of some word quad.
    for (int y = 0; y < s.stroke_mask.rows(); ++y)
      for (int x = 0; x < s.stroke_mask.cols(); ++x) {
        if (!s.stroke_mask(y, x)) continue;
        const Point p = pixel_center(y, x);
        bool inside = false;
        for (const auto& inst : s.instances) {
          const Polygon& q = inst.polygon;
          if (contains(q, p)) inside = true;
          for (std::size_t k = 0; k < q.size() && !inside; ++k)
            if (point_segment_distance(p, q[k], q[(k + 1) % q.size()]) <= 1.0) inside = true;
          if (inside) break;
        }
        if (!inside) ++gc.mask_pixels_outside;
      }
    // Parameters inside the configured ranges.
    const std::string alphabet = cfg.alphabet();
    const int words = static_cast<int>(s.params.size());
    if (words + s.dropped < cfg.words_lo || words + s.dropped > cfg.words_hi) ++gc.range_violations;
    for (const WordParams& w : s.params) {
      bool ok = w.size >= cfg.size_lo && w.size <= cfg.size_hi && w.angle >= cfg.angle_lo && w.angle <= cfg.angle_hi &&
                static_cast<int>(w.word.size()) >= cfg.min_word_len &&
                static_cast<int>(w.word.size()) <= cfg.max_word_len &&
                std::find(cfg.font_set.begin(), cfg.font_set.end(), w.font) != cfg.font_set.end();
      for (char ch : w.word) ok = ok && alphabet.find(ch) != std::string::npos;
      if (!ok) {
        ++gc.range_violations;
        gc.notes.push_back("sample " + std::to_string(i) + " word " + w.word);
      }
    }
    for (const auto& inst : s.instances)
      for (const Point& q : inst.polygon)
        if (q.x() < 0 || q.y() < 0 || q.x() > cfg.width || q.y() > cfg.height) ++gc.range_violations;
  }
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a);
    if (!fs::exists(b / rel) || read_text(entry.path()) != read_text(b / rel)) {
      ++gc.differing_files;
      gc.notes.push_back("differs: " + rel.string());
    }
  }
  return gc;
}

}  // namespace strokenet::testing
