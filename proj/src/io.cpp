#include "strokenet/io.hpp"

#include <png.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace strokenet {

namespace {

void write_png_raw(const fs::path& path, const std::uint8_t* data, int w, int h, png_uint_32 format) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = format;
  if (!png_image_write_to_file(&img, path.c_str(), 0, data, 0, nullptr))
    throw std::runtime_error("cannot write " + path.string() + ": " + img.message);
}

std::vector<std::uint8_t> read_png_raw(const fs::path& path, png_uint_32 format, int& w, int& h) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw std::runtime_error("cannot read " + path.string() + ": " + img.message);
  img.format = format;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw std::runtime_error("cannot decode " + path.string() + ": " + img.message);
  }
  w = static_cast<int>(img.width);
  h = static_cast<int>(img.height);
  return buf;
}

}  // namespace

void write_png(const fs::path& path, const RgbImage& image) {
  write_png_raw(path, image.data.data(), image.width, image.height, PNG_FORMAT_RGB);
}

void write_png(const fs::path& path, const MaskPlane& mask) {
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(mask.size()));
  for (Eigen::Index y = 0; y < mask.rows(); ++y)
    for (Eigen::Index x = 0; x < mask.cols(); ++x)
      buf[static_cast<std::size_t>(y * mask.cols() + x)] = mask(y, x) ? 255 : 0;
  write_png_raw(path, buf.data(), static_cast<int>(mask.cols()), static_cast<int>(mask.rows()), PNG_FORMAT_GRAY);
}

RgbImage read_png_rgb(const fs::path& path) {
  int w = 0;
  int h = 0;
  auto buf = read_png_raw(path, PNG_FORMAT_RGB, w, h);
  RgbImage img(w, h);
  img.data = std::move(buf);
  return img;
}

MaskPlane read_png_mask(const fs::path& path) {
  int w = 0;
  int h = 0;
  const auto buf = read_png_raw(path, PNG_FORMAT_GRAY, w, h);
  MaskPlane m(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m(y, x) = buf[static_cast<std::size_t>(y) * w + x] > 127 ? 1 : 0;
  return m;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string fixed(double v, int decimals) {
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

json polygon_to_json(const Polygon& poly) {
  json out = json::array();
  for (const Point& p : poly) out.push_back({p.x(), p.y()});
  return out;
}

Polygon polygon_from_json(const json& j) {
  Polygon poly;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2) throw std::invalid_argument("polygon vertex must be [x, y]");
    poly.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  return poly;
}

json instances_to_json(const std::vector<TextAnnotation>& instances) {
  json out = json::array();
  for (const auto& a : instances) out.push_back({{"polygon", polygon_to_json(a.polygon)}, {"word", a.word}});
  return out;
}

std::vector<TextAnnotation> instances_from_json(const json& j) {
  std::vector<TextAnnotation> out;
  for (const auto& a : j) out.push_back({polygon_from_json(a.at("polygon")), a.value("word", std::string())});
  return out;
}

json SampleRecord::to_json() const {
  return {{"image", image}, {"mask", mask}, {"instances", instances_to_json(instances)}, {"seed", seed},
          {"config_id", config_id}};
}

SampleRecord SampleRecord::from_json(const json& j) {
  SampleRecord r;
  r.image = j.at("image").get<std::string>();
  r.mask = j.value("mask", std::string());
  r.instances = instances_from_json(j.at("instances"));
  r.seed = j.value("seed", std::uint64_t{0});
  r.config_id = j.value("config_id", std::string());
  return r;
}

DatasetIndex load_dataset(const fs::path& root) {
  DatasetIndex idx;
  idx.root = root;
  std::ifstream in(root / "annotations.jsonl");
  if (!in) throw std::runtime_error("cannot open " + (root / "annotations.jsonl").string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      idx.samples.push_back(SampleRecord::from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error((root / "annotations.jsonl").string() + ":" + std::to_string(lineno) + ": " +
                               e.what());
    }
  }
  return idx;
}

}  // namespace strokenet
