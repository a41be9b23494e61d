#pragma once

// Synthetic scene generator: procedural backgrounds with vector-font words,
// exact stroke masks and word quads.

#include "strokenet/font.hpp"
#include "strokenet/io.hpp"
#include "strokenet/labels.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace strokenet {

enum class Background { plain, procedural };

struct GenConfig {
  std::string id = "default";
  std::vector<int> font_set{0, 1, 2, 3};
  double angle_lo = 0.0;  // degrees within [0, 360]
  double angle_hi = 0.0;
  double size_lo = 15.0;  // cap height, pixels within [5, 80]
  double size_hi = 40.0;
  int min_word_len = 3;
  int max_word_len = 5;
  int alpha_count = 26;  // letters drawn from the first alpha_count of A-Z
  int digit_count = 10;  // digits drawn from the first digit_count of 0-9
  int words_lo = 1;
  int words_hi = 3;
  int width = 128;
  int height = 128;
  Background background = Background::procedural;
  double min_contrast = 30.0;  // 8-bit luminance
  int max_tries = 100;         // placement attempts per word
  double gap = 2.0;            // minimum clearance between quads, pixels

  // Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
  std::string alphabet() const;
  json to_json() const;
  static GenConfig from_json(const json& j);
};

struct WordParams {
  std::string word;
  int font = 0;
  double size = 0.0;
  double angle = 0.0;
};

struct SceneSample {
  RgbImage image;
  MaskPlane stroke_mask;
  std::vector<TextAnnotation> instances;
  std::vector<WordParams> params;  // one per instance
  std::uint64_t seed = 0;
  std::string config_id;
  int dropped = 0;  // words abandoned after max_tries placements
};

// Pure function of (cfg, seed).
SceneSample generate_sample(const GenConfig& cfg, std::uint64_t seed);

struct DatasetSummary {
  int samples = 0;
  int dropped_words = 0;
};

// images/NNNNNN.png, masks/NNNNNN.png, annotations.jsonl, manifest.json.
// Sample i uses seed base_seed + i; configs are laid out one after another.
DatasetSummary generate_dataset(const std::vector<GenConfig>& configs, int count_per_config, const fs::path& out_dir,
                                std::uint64_t base_seed);

// Rebuilds a dataset from a manifest.json written by generate_dataset.
DatasetSummary regenerate_dataset(const fs::path& manifest, const fs::path& out_dir);

// Luminance of an 8-bit RGB triple.
double luminance(double r, double g, double b);

}  // namespace strokenet
