#pragma once

// PNG rasters, annotation records and small file helpers.

#include "strokenet/labels.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace strokenet {

namespace fs = std::filesystem;
using json = nlohmann::json;

void write_png(const fs::path& path, const RgbImage& image);
// Binary mask stored as 8-bit gray, 0 or 255.
void write_png(const fs::path& path, const MaskPlane& mask);
RgbImage read_png_rgb(const fs::path& path);
MaskPlane read_png_mask(const fs::path& path);

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);

// Fixed-point text with `decimals` digits ("0.500000").
std::string fixed(double v, int decimals = 6);

json polygon_to_json(const Polygon& poly);
Polygon polygon_from_json(const json& j);
json instances_to_json(const std::vector<TextAnnotation>& instances);
std::vector<TextAnnotation> instances_from_json(const json& j);

// One line of annotations.jsonl.
struct SampleRecord {
  std::string image;  // relative to the dataset root
  std::string mask;
  std::vector<TextAnnotation> instances;
  std::uint64_t seed = 0;
  std::string config_id;

  json to_json() const;
  static SampleRecord from_json(const json& j);
};

struct DatasetIndex {
  fs::path root;
  std::vector<SampleRecord> samples;
};

DatasetIndex load_dataset(const fs::path& root);

}  // namespace strokenet
