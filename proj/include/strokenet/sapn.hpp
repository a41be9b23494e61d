#pragma once

// Stroke assisted prediction: backbone, text-level head, the stroke branch
// (text feature distillation + stroke cue filtration) and the SAPN losses.

#include "strokenet/labels.hpp"
#include "strokenet/params.hpp"

#include <optional>
#include <vector>

namespace strokenet {

struct FeatureMap {
  Var planes;  // C x (H*W)
  int stride = 1;

  int channels() const { return static_cast<int>(planes.rows()); }
  int height() const { return planes.height(); }
  int width() const { return planes.width(); }
};

struct SapnConfig {
  int backbone_width = 32;
  int stride = 4;          // 1, 2 or 4
  int head_hidden = 16;    // first head conv; the second emits 8 channels
  int internal_width = 32; // TFD/SCF working width
  int attention_width = 8; // per-scale orthogonal conv width
  std::vector<int> orthogonal_scales{3, 5, 7};
};

// 3 x (H*W) tensor scaled to [-0.5, 0.5].
Mat image_to_tensor(const RgbImage& image);
Mat image_crop_to_tensor(const RgbImage& image, const Rect& rect);

class Backbone {
 public:
  Backbone() = default;
  Backbone(ParamStore& store, const SapnConfig& cfg, Rng& rng);
  // image: 3 x (H*W) with spatial extent; H and W must divide by the stride.
  FeatureMap forward(Tape& t, const Var& image) const;
  int stride() const { return stride_; }

 private:
  std::vector<ConvLayer> blocks_;
  int stride_ = 4;
};

// Text-level predictions at input resolution.
struct PredictedMaps {
  Var ta_logp;   // 2 x N log-probabilities, row 1 = text
  Var tca_logp;  // 2 x N
  Var h1;        // 1 x N, pixels
  Var h2;        // 1 x N
  Var cos_theta; // 1 x N, unit pair with sin_theta
  Var sin_theta; // 1 x N
  int height = 0;
  int width = 0;

  GeometryMaps to_maps() const;
  // Builds tape constants reproducing given probability maps (for tests).
  static PredictedMaps from_maps(Tape& t, const GeometryMaps& maps);
};

class TextHead {
 public:
  TextHead() = default;
  TextHead(ParamStore& store, const SapnConfig& cfg, Rng& rng);
  // Returns maps upsampled to out_h x out_w.
  PredictedMaps forward(Tape& t, const FeatureMap& f, int out_h, int out_w) const;

 private:
  ConvLayer hidden_;
  ConvLayer out_;
};

// Channel-wise distillation of OTA features into rough stroke cues at pixel
// resolution of the OTA.
class TextFeatureDistillation {
 public:
  struct Output {
    Var cues;       // C x (h*w), h x w = OTA extent
    Var attention;  // C x 1 channel gate
  };

  TextFeatureDistillation() = default;
  TextFeatureDistillation(ParamStore& store, const SapnConfig& cfg, Rng& rng);
  // forced_attention replaces the sigmoid gate when given (C x 1).
  Output forward(Tape& t, const FeatureMap& f, const Rect& ota,
                 const std::optional<Mat>& forced_attention = std::nullopt) const;

 private:
  ConvLayer reduce_;
  ConvLayer refine_;
  LinearLayer mlp_in_;
  LinearLayer mlp_out_;
};

// Spatial attention from multi-scale orthogonal convolutions over the OTA
// RGB crop, applied to the rough cues and projected to a stroke probability.
class StrokeCuesFiltration {
 public:
  StrokeCuesFiltration() = default;
  StrokeCuesFiltration(ParamStore& store, const SapnConfig& cfg, Rng& rng);

  // One response per scale: k x 1 conv of the 1 x k conv of the RGB crop.
  std::vector<Var> orthogonal_responses(Tape& t, const Var& ota_rgb) const;
  // 1 x (h*w) attention in (0, 1).
  Var spatial_attention(Tape& t, const Var& ota_rgb) const;
  // 1 x (h*w) stroke probability; forced_attention (1 x N) overrides the gate.
  Var forward(Tape& t, const Var& rough_cues, const Var& ota_rgb,
              const std::optional<Mat>& forced_attention = std::nullopt) const;

 private:
  std::vector<ConvLayer> rows_;
  std::vector<ConvLayer> cols_;
  ConvLayer fuse_;
  ConvLayer project_;
};

struct LossWeights {
  double lambda1 = 1.0;  // TA (OHEM)
  double lambda2 = 1.0;  // TCA
  double lambda3 = 1.0;  // angle
  double lambda4 = 1.0;  // stroke MSE
  double lambda5 = 1.0;  // stroke SSIM
};

struct OhemOptions {
  double negative_ratio = 3.0;
  int fallback_negatives = 256;  // kept when there are no positives
  bool tca_inside_ta = true;     // TCA cross-entropy restricted to gt TA
};

struct ClsLoss {
  Var ta;
  Var tca;
  Var total;  // lambda1 * ta + lambda2 * tca
};

struct RegLoss {
  Var sin;
  Var cos;
  Var h;
  Var total;  // lambda3 * (sin + cos) + h
  bool empty = false;
};

struct StrokeLoss {
  Var mse;
  Var ssim;
  Var total;  // lambda4 * mse + lambda5 * ssim
};

struct SsimStats {
  double mu_p = 0, mu_g = 0;
  double sigma_p = 0, sigma_g = 0;
  double sigma_pg = 0;
  double c1 = 0.01 * 0.01;
  double c2 = 0.03 * 0.03;
};

// Pixels selected by OHEM for TA: all positives plus the hardest negatives.
std::vector<int> ohem_selection(const Mat& ta_logp, const Plane& gt_ta, const OhemOptions& opt);

ClsLoss loss_cls(Tape& t, const PredictedMaps& pred, const GeometryMaps& gt, const LossWeights& w,
                 const OhemOptions& opt = {});
RegLoss loss_reg(Tape& t, const PredictedMaps& pred, const GeometryMaps& gt, const LossWeights& w);
StrokeLoss loss_stroke(Tape& t, const Var& pred, const Mat& gt, const LossWeights& w);

SsimStats ssim_stats(const Mat& pred, const Mat& gt);

struct SapnLoss {
  ClsLoss cls;
  RegLoss reg;
  std::optional<StrokeLoss> stroke;
  Var total;
};

SapnLoss loss_sapn(Tape& t, const PredictedMaps& pred, const GeometryMaps& gt,
                   const std::vector<std::pair<Var, Mat>>& strokes, const LossWeights& w,
                   const OhemOptions& opt = {});

}  // namespace strokenet
