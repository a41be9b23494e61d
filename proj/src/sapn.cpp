#include "strokenet/sapn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace strokenet {

Mat image_to_tensor(const RgbImage& image) {
  return image_crop_to_tensor(image, Rect{0, 0, image.width, image.height});
}

Mat image_crop_to_tensor(const RgbImage& image, const Rect& rect) {
  if (rect.x0 < 0 || rect.y0 < 0 || rect.x1 > image.width || rect.y1 > image.height || rect.empty())
    throw std::out_of_range("image crop outside image");
  Mat m(3, static_cast<Eigen::Index>(rect.width()) * rect.height());
  for (int y = 0; y < rect.height(); ++y)
    for (int x = 0; x < rect.width(); ++x)
      for (int c = 0; c < 3; ++c)
        m(c, static_cast<Eigen::Index>(y) * rect.width() + x) =
            image.at(rect.y0 + y, rect.x0 + x, c) / 255.0 - 0.5;
  return m;
}

// ---------------------------------------------------------------------------

Backbone::Backbone(ParamStore& store, const SapnConfig& cfg, Rng& rng) : stride_(cfg.stride) {
  if (cfg.stride != 1 && cfg.stride != 2 && cfg.stride != 4)
    throw std::invalid_argument("backbone stride must be 1, 2 or 4");
  const int w = cfg.backbone_width;
  auto spec = [](int stride, int dilation) {
    ad::ConvSpec s = ad::ConvSpec::same(3, dilation);
    s.stride = stride;
    return s;
  };
  const int s1 = cfg.stride >= 2 ? 2 : 1;
  const int s2 = cfg.stride >= 4 ? 2 : 1;
  blocks_.push_back(ConvLayer::make(store, "backbone.block1", 3, 16, spec(s1, 1), rng));
  blocks_.push_back(ConvLayer::make(store, "backbone.block2", 16, w, spec(s2, 1), rng));
  blocks_.push_back(ConvLayer::make(store, "backbone.block3", w, w, spec(1, 2), rng));
  blocks_.push_back(ConvLayer::make(store, "backbone.block4", w, w, spec(1, 4), rng));
}

FeatureMap Backbone::forward(Tape& t, const Var& image) const {
  if (image.rows() != 3) throw std::invalid_argument("backbone expects a 3-channel image");
  if (image.height() % stride_ != 0 || image.width() % stride_ != 0)
    throw std::invalid_argument("image extent " + std::to_string(image.width()) + "x" +
                                std::to_string(image.height()) + " not divisible by stride " +
                                std::to_string(stride_));
  Var x = image;
  for (const auto& b : blocks_) x = ad::relu(b(t, x));
  return FeatureMap{x, stride_};
}

// ---------------------------------------------------------------------------

GeometryMaps PredictedMaps::to_maps() const {
  GeometryMaps m = GeometryMaps::zeros({width, height});
  auto plane = [&](const Mat& row) {
    Plane p(height, width);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) p(y, x) = row(0, static_cast<Eigen::Index>(y) * width + x);
    return p;
  };
  m.ta = plane(ta_logp.value().row(1).array().exp().matrix());
  m.tca = plane(tca_logp.value().row(1).array().exp().matrix());
  m.h1 = plane(h1.value());
  m.h2 = plane(h2.value());
  m.cos_theta = plane(cos_theta.value());
  m.sin_theta = plane(sin_theta.value());
  m.height = m.h1 + m.h2;
  m.valid_mask = (m.ta >= 0.5).cast<std::uint8_t>();
  return m;
}

PredictedMaps PredictedMaps::from_maps(Tape& t, const GeometryMaps& maps) {
  const int h = maps.rows();
  const int w = maps.width();
  const Eigen::Index n = static_cast<Eigen::Index>(h) * w;
  auto row = [&](const Plane& p) {
    Mat r(1, n);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) r(0, static_cast<Eigen::Index>(y) * w + x) = p(y, x);
    return r;
  };
  auto logp = [&](const Plane& p) {
    Mat r(2, n);
    const Mat pr = row(p);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double q = std::clamp(pr(0, i), 1e-12, 1.0 - 1e-12);
      r(0, i) = std::log1p(-q);
      r(1, i) = std::log(q);
    }
    return r;
  };
  PredictedMaps out;
  out.height = h;
  out.width = w;
  out.ta_logp = t.constant(logp(maps.ta), h, w);
  out.tca_logp = t.constant(logp(maps.tca), h, w);
  out.h1 = t.constant(row(maps.h1), h, w);
  out.h2 = t.constant(row(maps.h2), h, w);
  out.cos_theta = t.constant(row(maps.cos_theta), h, w);
  out.sin_theta = t.constant(row(maps.sin_theta), h, w);
  return out;
}

TextHead::TextHead(ParamStore& store, const SapnConfig& cfg, Rng& rng) {
  hidden_ = ConvLayer::make(store, "head.conv1", cfg.backbone_width, cfg.head_hidden, ad::ConvSpec::same(3), rng);
  out_ = ConvLayer::make(store, "head.conv2", cfg.head_hidden, 8, ad::ConvSpec::same(1), rng);
  // Start near unit orientation and ~8 px half-heights.
  out_.bias->value(4, 0) = std::log(8.0);
  out_.bias->value(5, 0) = std::log(8.0);
  out_.bias->value(6, 0) = 1.0;
}

PredictedMaps TextHead::forward(Tape& t, const FeatureMap& f, int out_h, int out_w) const {
  Var logits = out_(t, ad::relu(hidden_(t, f.planes)));
  if (logits.height() != out_h || logits.width() != out_w) logits = ad::resize_bilinear(logits, out_h, out_w);
  PredictedMaps p;
  p.height = out_h;
  p.width = out_w;
  p.ta_logp = ad::log_softmax_cols(ad::slice_rows(logits, 0, 2));
  p.tca_logp = ad::log_softmax_cols(ad::slice_rows(logits, 2, 2));
  p.h1 = ad::exp(ad::slice_rows(logits, 4, 1));
  p.h2 = ad::exp(ad::slice_rows(logits, 5, 1));
  const Var c = ad::slice_rows(logits, 6, 1);
  const Var s = ad::slice_rows(logits, 7, 1);
  const Var r = ad::sqrt(ad::add_scalar(c * c + s * s, 1e-16));
  p.cos_theta = ad::divide(c, r);
  p.sin_theta = ad::divide(s, r);
  return p;
}

// ---------------------------------------------------------------------------

TextFeatureDistillation::TextFeatureDistillation(ParamStore& store, const SapnConfig& cfg, Rng& rng) {
  const int c = cfg.backbone_width;
  const int ci = cfg.internal_width;
  reduce_ = ConvLayer::make(store, "tfd.reduce", 2 * c, ci, ad::ConvSpec::same(3), rng);
  refine_ = ConvLayer::make(store, "tfd.refine", ci, ci, ad::ConvSpec::same(3), rng);
  const int hidden = std::max(1, ci / 4);
  mlp_in_ = LinearLayer::make(store, "tfd.mlp_in", ci, hidden, rng);
  mlp_out_ = LinearLayer::make(store, "tfd.mlp_out", hidden, ci, rng);
}

TextFeatureDistillation::Output TextFeatureDistillation::forward(Tape& t, const FeatureMap& f, const Rect& ota,
                                                                 const std::optional<Mat>& forced_attention) const {
  const int s = f.stride;
  if (ota.width() < s || ota.height() < s) throw std::invalid_argument("OTA smaller than one feature cell");
  const int cx0 = ota.x0 / s;
  const int cy0 = ota.y0 / s;
  const int cx1 = std::min(f.width(), (ota.x1 + s - 1) / s);
  const int cy1 = std::min(f.height(), (ota.y1 + s - 1) / s);
  if (cx1 <= cx0 || cy1 <= cy0 || cx1 * s < ota.x1 || cy1 * s < ota.y1)
    throw std::out_of_range("OTA outside feature map");
  const int hc = cy1 - cy0;
  const int wc = cx1 - cx0;

  const Var crop = ad::crop(f.planes, cy0, cx0, hc, wc);
  const Var context = ad::broadcast_spatial(ad::row_mean(crop), hc, wc);
  const Var g = ad::relu(refine_(t, ad::relu(reduce_(t, ad::concat_rows<Real>({crop, context})))));

  Var up = s > 1 ? ad::resize_bilinear(g, hc * s, wc * s) : g;
  up = ad::crop(up, ota.y0 - cy0 * s, ota.x0 - cx0 * s, ota.height(), ota.width());

  Var attention;
  if (forced_attention) {
    attention = t.constant(*forced_attention);
  } else {
    auto mlp = [&](const Var& v) { return mlp_out_(t, ad::relu(mlp_in_(t, v))); };
    attention = ad::sigmoid(mlp(ad::row_mean(g)) + mlp(ad::row_max(g)));
  }
  return {ad::mul_col_broadcast(up, attention), attention};
}

// ---------------------------------------------------------------------------

StrokeCuesFiltration::StrokeCuesFiltration(ParamStore& store, const SapnConfig& cfg, Rng& rng) {
  const int ca = cfg.attention_width;
  for (int k : cfg.orthogonal_scales) {
    ad::ConvSpec row;
    row.kernel_h = 1;
    row.kernel_w = k;
    row.pad_h = 0;
    row.pad_w = k / 2;
    row.replicate = true;
    ad::ConvSpec col = row;
    col.kernel_h = k;
    col.kernel_w = 1;
    col.pad_h = k / 2;
    col.pad_w = 0;
    rows_.push_back(ConvLayer::make(store, "scf.row" + std::to_string(k), 3, ca, row, rng));
    cols_.push_back(ConvLayer::make(store, "scf.col" + std::to_string(k), ca, ca, col, rng));
  }
  fuse_ = ConvLayer::make(store, "scf.fuse", ca * static_cast<int>(rows_.size()), 1, ad::ConvSpec::same(1), rng);
  project_ = ConvLayer::make(store, "scf.project", cfg.internal_width, 1, ad::ConvSpec::same(1), rng);
}

std::vector<Var> StrokeCuesFiltration::orthogonal_responses(Tape& t, const Var& ota_rgb) const {
  std::vector<Var> out;
  for (std::size_t i = 0; i < rows_.size(); ++i) out.push_back(cols_[i](t, ad::relu(rows_[i](t, ota_rgb))));
  return out;
}

Var StrokeCuesFiltration::spatial_attention(Tape& t, const Var& ota_rgb) const {
  std::vector<Var> parts;
  for (const Var& r : orthogonal_responses(t, ota_rgb)) parts.push_back(ad::relu(r));
  return ad::sigmoid(fuse_(t, ad::concat_rows(parts)));
}

Var StrokeCuesFiltration::forward(Tape& t, const Var& rough_cues, const Var& ota_rgb,
                                  const std::optional<Mat>& forced_attention) const {
  if (rough_cues.height() != ota_rgb.height() || rough_cues.width() != ota_rgb.width())
    throw std::invalid_argument("stroke cues and RGB crop are misaligned");
  const Var attention = forced_attention ? t.constant(*forced_attention, ota_rgb.height(), ota_rgb.width())
                                         : spatial_attention(t, ota_rgb);
  const Var aggregated = ad::mul_row_broadcast(rough_cues, attention) + rough_cues;
  return ad::sigmoid(project_(t, aggregated));
}

// ---------------------------------------------------------------------------

namespace {

Mat plane_row(const Plane& p) {
  Mat r(1, p.size());
  for (Eigen::Index y = 0; y < p.rows(); ++y)
    for (Eigen::Index x = 0; x < p.cols(); ++x) r(0, y * p.cols() + x) = p(y, x);
  return r;
}

Mat one_hot(const Mat& positive) {
  Mat m(2, positive.cols());
  m.row(1) = positive.row(0);
  m.row(0) = (1.0 - positive.row(0).array()).matrix();
  return m;
}

std::vector<int> where(const Mat& row, double thresh) {
  std::vector<int> idx;
  for (Eigen::Index i = 0; i < row.cols(); ++i)
    if (row(0, i) > thresh) idx.push_back(static_cast<int>(i));
  return idx;
}

Var masked_mean(Tape& t, const Var& row, const std::vector<int>& idx) {
  if (idx.empty()) return scalar_constant(t, 0.0);
  return ad::mean(ad::gather_cols(row, idx));
}

}  // namespace

std::vector<int> ohem_selection(const Mat& ta_logp, const Plane& gt_ta, const OhemOptions& opt) {
  const Mat gt = plane_row(gt_ta);
  std::vector<int> positives;
  std::vector<int> negatives;
  for (Eigen::Index i = 0; i < gt.cols(); ++i)
    (gt(0, i) > 0.5 ? positives : negatives).push_back(static_cast<int>(i));
  std::stable_sort(negatives.begin(), negatives.end(),
                   [&](int a, int b) { return -ta_logp(0, a) > -ta_logp(0, b); });
  const std::size_t want = positives.empty()
                               ? static_cast<std::size_t>(opt.fallback_negatives)
                               : static_cast<std::size_t>(std::llround(opt.negative_ratio * positives.size()));
  negatives.resize(std::min(want, negatives.size()));
  std::vector<int> sel = positives;
  sel.insert(sel.end(), negatives.begin(), negatives.end());
  std::sort(sel.begin(), sel.end());
  return sel;
}

ClsLoss loss_cls(Tape& t, const PredictedMaps& pred, const GeometryMaps& gt, const LossWeights& w,
                 const OhemOptions& opt) {
  if (gt.rows() != pred.height || gt.width() != pred.width) throw std::invalid_argument("loss_cls: shape mismatch");
  const Mat ta = plane_row(gt.ta);
  const Mat tca = plane_row(gt.tca);
  const Var ta_picked = ad::col_sum(pred.ta_logp * t.constant(one_hot(ta)));
  const Var tca_picked = ad::col_sum(pred.tca_logp * t.constant(one_hot(tca)));

  ClsLoss out;
  out.ta = -masked_mean(t, ta_picked, ohem_selection(pred.ta_logp.value(), gt.ta, opt));
  std::vector<int> tca_pixels;
  if (opt.tca_inside_ta) {
    tca_pixels = where(ta, 0.5);
  } else {
    tca_pixels.resize(static_cast<std::size_t>(ta.cols()));
    std::iota(tca_pixels.begin(), tca_pixels.end(), 0);
  }
  out.tca = -masked_mean(t, tca_picked, tca_pixels);
  out.total = ad::scale(out.ta, w.lambda1) + ad::scale(out.tca, w.lambda2);
  return out;
}

RegLoss loss_reg(Tape& t, const PredictedMaps& pred, const GeometryMaps& gt, const LossWeights& w) {
  if (gt.rows() != pred.height || gt.width() != pred.width) throw std::invalid_argument("loss_reg: shape mismatch");
  RegLoss out;
  const std::vector<int> n = where(plane_row(gt.tca), 0.5);
  if (n.empty()) {
    out.sin = out.cos = out.h = out.total = scalar_constant(t, 0.0);
    out.empty = true;
    return out;
  }
  auto gathered = [&](const Plane& p) {
    const Mat row = plane_row(p);
    Mat g(1, static_cast<Eigen::Index>(n.size()));
    for (std::size_t i = 0; i < n.size(); ++i) g(0, static_cast<Eigen::Index>(i)) = row(0, n[i]);
    return g;
  };
  const Mat gt_sin = gathered(gt.sin_theta);
  const Mat gt_cos = gathered(gt.cos_theta);
  const Mat gt_h1 = gathered(gt.h1).cwiseMax(0.5);
  const Mat gt_h2 = gathered(gt.h2).cwiseMax(0.5);
  const Mat weight = (gathered(gt.h1) + gathered(gt.h2)).array().log1p().matrix();

  out.sin = ad::mean(ad::smooth_l1(ad::gather_cols(pred.sin_theta, n) - t.constant(gt_sin)));
  out.cos = ad::mean(ad::smooth_l1(ad::gather_cols(pred.cos_theta, n) - t.constant(gt_cos)));
  auto height_term = [&](const Var& h, const Mat& target) {
    const Var ratio = ad::add_scalar(ad::divide(ad::gather_cols(h, n), t.constant(target)), -1.0);
    return ad::sum(ad::smooth_l1(ratio) * t.constant(weight));
  };
  out.h = ad::scale(height_term(pred.h1, gt_h1) + height_term(pred.h2, gt_h2),
                    1.0 / (2.0 * static_cast<double>(n.size())));
  out.total = ad::scale(out.sin + out.cos, w.lambda3) + out.h;
  return out;
}

StrokeLoss loss_stroke(Tape& t, const Var& pred, const Mat& gt, const LossWeights& w) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) throw std::invalid_argument("loss_stroke: shape mismatch");
  const SsimStats k;
  const Var g = t.constant(gt);
  StrokeLoss out;
  out.mse = ad::mean(ad::square(pred - g));

  const Var mu_p = ad::mean(pred);
  const Var mu_g = ad::mean(g);
  const Var dp = pred - expand(mu_p, pred.rows(), pred.cols());
  const Var dg = g - expand(mu_g, pred.rows(), pred.cols());
  const Var var_p = ad::mean(dp * dp);
  const Var var_g = ad::mean(dg * dg);
  const Var cov = ad::mean(dp * dg);
  const Var num = ad::add_scalar(ad::scale(mu_p * mu_g, 2.0), k.c1) * ad::add_scalar(ad::scale(cov, 2.0), k.c2);
  const Var den = ad::add_scalar(mu_p * mu_p + mu_g * mu_g, k.c1) * ad::add_scalar(var_p + var_g, k.c2);
  out.ssim = ad::add_scalar(-ad::divide(num, den), 1.0);
  out.total = ad::scale(out.mse, w.lambda4) + ad::scale(out.ssim, w.lambda5);
  return out;
}

SsimStats ssim_stats(const Mat& pred, const Mat& gt) {
  SsimStats s;
  const double n = static_cast<double>(pred.size());
  s.mu_p = pred.sum() / n;
  s.mu_g = gt.sum() / n;
  const Eigen::ArrayXXd dp = pred.array() - s.mu_p;
  const Eigen::ArrayXXd dg = gt.array() - s.mu_g;
  s.sigma_p = std::sqrt((dp * dp).sum() / n);
  s.sigma_g = std::sqrt((dg * dg).sum() / n);
  s.sigma_pg = (dp * dg).sum() / n;
  return s;
}

SapnLoss loss_sapn(Tape& t, const PredictedMaps& pred, const GeometryMaps& gt,
                   const std::vector<std::pair<Var, Mat>>& strokes, const LossWeights& w, const OhemOptions& opt) {
  SapnLoss out;
  out.cls = loss_cls(t, pred, gt, w, opt);
  out.reg = loss_reg(t, pred, gt, w);
  out.total = out.cls.total + out.reg.total;
  if (!strokes.empty()) {
    StrokeLoss acc;
    const double inv = 1.0 / static_cast<double>(strokes.size());
    for (std::size_t i = 0; i < strokes.size(); ++i) {
      StrokeLoss s = loss_stroke(t, strokes[i].first, strokes[i].second, w);
      if (i == 0) {
        acc.mse = ad::scale(s.mse, inv);
        acc.ssim = ad::scale(s.ssim, inv);
      } else {
        acc.mse = acc.mse + ad::scale(s.mse, inv);
        acc.ssim = acc.ssim + ad::scale(s.ssim, inv);
      }
    }
    acc.total = ad::scale(acc.mse, w.lambda4) + ad::scale(acc.ssim, w.lambda5);
    out.total = out.total + acc.total;
    out.stroke = acc;
  }
  return out;
}

}  // namespace strokenet
