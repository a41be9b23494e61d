#pragma once

// Full detector: SAPN heads, optional stroke branch and graph reasoning,
// training losses and the inference pipeline.

#include "strokenet/grouping.hpp"
#include "strokenet/hrgn.hpp"
#include "strokenet/io.hpp"
#include "strokenet/sapn.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace strokenet {

enum class Ablation { tlp, tlp_slp, tlp_tg, full };

std::string ablation_name(Ablation a);   // tlp, tlp_slp, tlp_tg, full
std::string ablation_label(Ablation a);  // TLP, TLP+SLP, TLP+TG*, FULL
Ablation parse_ablation(const std::string& s);
const std::vector<Ablation>& all_ablations();

inline bool uses_stroke_head(Ablation a) { return a == Ablation::tlp_slp || a == Ablation::full; }
inline bool uses_graph(Ablation a) { return a == Ablation::tlp_tg || a == Ablation::full; }
inline bool uses_stroke_graph(Ablation a) { return a == Ablation::full; }

struct InferenceOptions {
  double ta_thresh = 0.5;
  double tca_thresh = 0.5;
  double nms_iou = 0.3;
  double stroke_shrink = 0.8;
  double stroke_keep = 0.5;
  double link_thresh = 0.5;
  int hop1 = 8;
  int hop2 = 4;
  int max_stroke_links = 3;
  double end_slack = 0.5;    // pixels added to the end extension
  double min_area = 30.0;    // smaller instances are dropped
  double min_score = 0.0;
};

struct ModelConfig {
  Ablation ablation = Ablation::full;
  SapnConfig sapn;
  HrgnConfig hrgn;
  LabelOptions labels;
  LossWeights loss;
  OhemOptions ohem;
  double linkage_weight = 1.0;
  InferenceOptions inference;

  json to_json() const;
  static ModelConfig from_json(const json& j);
  // FNV-1a over the parameter-shaping fields.
  std::uint64_t hash() const;
};

struct TrainSample {
  RgbImage image;
  MaskPlane stroke_mask;  // may be empty
  std::vector<TextAnnotation> instances;
};

TrainSample flip_horizontal(const TrainSample& s);
// Reverses the point order of each polygon side after mirroring x.
Polygon flip_polygon(const Polygon& poly, int width);

struct TrainOptions {
  int max_strokes = 3;  // OTA crops per image for the stroke loss
  int max_pivots = 8;   // local graphs per image for the linkage loss
  double jitter = 0.1;  // relative proposal jitter for graph training
};

struct LossBreakdown {
  double total = 0, ta = 0, tca = 0, sin = 0, cos = 0, h = 0, mse = 0, ssim = 0, linkage = 0;
  int strokes = 0;
  int links = 0;

  LossBreakdown& operator+=(const LossBreakdown& o);
  LossBreakdown scaled(double s) const;
};

struct LossGraph {
  Var total;
  LossBreakdown parts;
};

struct InferenceResult {
  std::vector<TextInstance> instances;
  Plane stroke_map;  // full image, zero outside processed regions
  GeometryMaps maps;
  std::vector<Proposal> text_props;
  std::vector<Proposal> stroke_props;
  std::vector<LinkDecision> links;  // every evaluated pivot -> 1-hop pair
  int hull_fallbacks = 0;
};

class Model {
 public:
  Model(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  // Records the per-image loss on `t`.
  LossGraph build_loss(Tape& t, const TrainSample& sample, const TrainOptions& opt, Rng& rng) const;

  InferenceResult infer(const RgbImage& image) const;

  // Stroke probability of one OTA (text region rectangle).
  Plane stroke_crop(const RgbImage& image, const Rect& ota) const;

 private:
  ModelConfig cfg_;
  ParamStore store_;
  Backbone backbone_;
  TextHead head_;
  std::optional<TextFeatureDistillation> tfd_;
  std::optional<StrokeCuesFiltration> scf_;
  std::optional<HrgnParams> hrgn_;
};

// OTA of a polygon: bounding rectangle grown to at least one feature cell
// per side and clipped to the image.
Rect ota_rect(const Polygon& poly, ImageSize size, int stride);

}  // namespace strokenet
