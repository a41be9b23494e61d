#include "strokenet/synth.hpp"

#include "strokenet/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace strokenet {

double luminance(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

void GenConfig::validate() const {
  auto fail = [&](const std::string& what) { throw std::invalid_argument("config '" + id + "': " + what); };
  if (font_set.empty()) fail("font_set is empty");
  for (int f : font_set)
    if (f < 0 || f >= kFontCount) fail("unknown font id " + std::to_string(f));
  if (!(angle_lo <= angle_hi) || angle_lo < 0.0 || angle_hi > 360.0) fail("angle range must lie in [0, 360]");
  if (!(size_lo <= size_hi) || size_lo < 5.0 || size_hi > 80.0) fail("size range must lie in [5, 80]");
  if (min_word_len < 1 || min_word_len > max_word_len) fail("word length range is empty");
  if (alpha_count < 0 || alpha_count > 26 || digit_count < 0 || digit_count > 10 || alpha_count + digit_count == 0)
    fail("alphabet is empty or too large");
  if (words_lo < 0 || words_lo > words_hi) fail("words per image range is empty");
  if (width <= 0 || height <= 0) fail("canvas must be positive");
  if (max_tries < 1) fail("max_tries must be positive");
  if (min_contrast < 0.0 || min_contrast > 127.0) fail("min_contrast must lie in [0, 127]");
}

std::string GenConfig::alphabet() const {
  std::string s;
  for (int i = 0; i < alpha_count; ++i) s.push_back(static_cast<char>('A' + i));
  for (int i = 0; i < digit_count; ++i) s.push_back(static_cast<char>('0' + i));
  return s;
}

json GenConfig::to_json() const {
  return {{"id", id},
          {"font_set", font_set},
          {"angle_range", {angle_lo, angle_hi}},
          {"size_range", {size_lo, size_hi}},
          {"word_len_range", {min_word_len, max_word_len}},
          {"alpha_count", alpha_count},
          {"digit_count", digit_count},
          {"words_per_image", {words_lo, words_hi}},
          {"canvas", {width, height}},
          {"background", background == Background::plain ? "plain" : "procedural"},
          {"min_contrast", min_contrast},
          {"max_tries", max_tries},
          {"gap", gap}};
}

GenConfig GenConfig::from_json(const json& j) {
  GenConfig c;
  c.id = j.at("id").get<std::string>();
  c.font_set = j.at("font_set").get<std::vector<int>>();
  c.angle_lo = j.at("angle_range")[0].get<double>();
  c.angle_hi = j.at("angle_range")[1].get<double>();
  c.size_lo = j.at("size_range")[0].get<double>();
  c.size_hi = j.at("size_range")[1].get<double>();
  c.min_word_len = j.at("word_len_range")[0].get<int>();
  c.max_word_len = j.at("word_len_range")[1].get<int>();
  c.alpha_count = j.at("alpha_count").get<int>();
  c.digit_count = j.at("digit_count").get<int>();
  c.words_lo = j.at("words_per_image")[0].get<int>();
  c.words_hi = j.at("words_per_image")[1].get<int>();
  c.width = j.at("canvas")[0].get<int>();
  c.height = j.at("canvas")[1].get<int>();
  c.background = j.at("background").get<std::string>() == "plain" ? Background::plain : Background::procedural;
  c.min_contrast = j.at("min_contrast").get<double>();
  c.max_tries = j.at("max_tries").get<int>();
  c.gap = j.at("gap").get<double>();
  c.validate();
  return c;
}

namespace {

using Rgb = std::array<double, 3>;

Rgb random_color(Rng& rng) { return {rng.uniform(0, 255), rng.uniform(0, 255), rng.uniform(0, 255)}; }

// Float background planes, rounded once at the end.
struct Canvas {
  int w;
  int h;
  std::vector<double> v;  // (y * w + x) * 3 + c

  Canvas(int width, int height) : w(width), h(height), v(static_cast<std::size_t>(width) * height * 3, 0.0) {}
  double& at(int y, int x, int c) { return v[(static_cast<std::size_t>(y) * w + x) * 3 + c]; }
  double lum(int y, int x) { return luminance(at(y, x, 0), at(y, x, 1), at(y, x, 2)); }
};

void paint_background(Canvas& cv, const GenConfig& cfg, Rng& rng) {
  if (cfg.background == Background::plain) {
    const Rgb c = random_color(rng);
    for (int y = 0; y < cv.h; ++y)
      for (int x = 0; x < cv.w; ++x)
        for (int k = 0; k < 3; ++k) cv.at(y, x, k) = c[static_cast<std::size_t>(k)];
    return;
  }
  const Rgb c0 = random_color(rng);
  const Rgb c1 = random_color(rng);
  const auto [gc, gs] = rotation_degrees(rng.uniform(0.0, 360.0));
  const double span = std::abs(gc) * cv.w + std::abs(gs) * cv.h;
  for (int y = 0; y < cv.h; ++y)
    for (int x = 0; x < cv.w; ++x) {
      const double t = std::clamp(((x + 0.5 - 0.5 * cv.w) * gc + (y + 0.5 - 0.5 * cv.h) * gs) / span + 0.5, 0.0, 1.0);
      for (int k = 0; k < 3; ++k)
        cv.at(y, x, k) = (1 - t) * c0[static_cast<std::size_t>(k)] + t * c1[static_cast<std::size_t>(k)];
    }
  const int blobs = rng.uniform_int(2, 5);
  for (int b = 0; b < blobs; ++b) {
    const double bx = rng.uniform(0, cv.w);
    const double by = rng.uniform(0, cv.h);
    const double r = rng.uniform(8.0, 0.4 * std::max(cv.w, cv.h));
    const double strength = rng.uniform(0.2, 0.6);
    const Rgb c = random_color(rng);
    for (int y = 0; y < cv.h; ++y)
      for (int x = 0; x < cv.w; ++x) {
        const double d2 = (x + 0.5 - bx) * (x + 0.5 - bx) + (y + 0.5 - by) * (y + 0.5 - by);
        const double a = strength * std::exp(-d2 / (2 * r * r));
        for (int k = 0; k < 3; ++k) cv.at(y, x, k) = (1 - a) * cv.at(y, x, k) + a * c[static_cast<std::size_t>(k)];
      }
  }
  const int shapes = rng.uniform_int(1, 3);
  for (int s = 0; s < shapes; ++s) {
    const bool circle = rng.bernoulli(0.5);
    const double cx = rng.uniform(0, cv.w);
    const double cy = rng.uniform(0, cv.h);
    const double rx = rng.uniform(6.0, 0.3 * cv.w);
    const double ry = circle ? rx : rng.uniform(6.0, 0.3 * cv.h);
    const double a = rng.uniform(0.2, 0.5);
    const Rgb c = random_color(rng);
    for (int y = 0; y < cv.h; ++y)
      for (int x = 0; x < cv.w; ++x) {
        const double dx = (x + 0.5 - cx) / rx;
        const double dy = (y + 0.5 - cy) / ry;
        const bool inside = circle ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
        if (!inside) continue;
        for (int k = 0; k < 3; ++k) cv.at(y, x, k) = (1 - a) * cv.at(y, x, k) + a * c[static_cast<std::size_t>(k)];
      }
  }
  for (auto& v : cv.v) v = std::clamp(v + 3.0 * rng.normal(), 0.0, 255.0);
}

Polygon inflate(const Polygon& quad, double gap) {
  const Point along = (quad[1] - quad[0]).normalized();
  const Point down = (quad[3] - quad[0]).normalized();
  return {quad[0] - gap * along - gap * down, quad[1] + gap * along - gap * down,
          quad[2] + gap * along + gap * down, quad[3] - gap * along + gap * down};
}

}  // namespace

SceneSample generate_sample(const GenConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  SceneSample out;
  out.seed = seed;
  out.config_id = cfg.id;
  out.stroke_mask = MaskPlane::Zero(cfg.height, cfg.width);

  Canvas cv(cfg.width, cfg.height);
  paint_background(cv, cfg, rng);

  const std::string alphabet = cfg.alphabet();
  const int words = rng.uniform_int(cfg.words_lo, cfg.words_hi);
  std::vector<Polygon> placed;
  for (int w = 0; w < words; ++w) {
    bool done = false;
    for (int attempt = 0; attempt < cfg.max_tries && !done; ++attempt) {
      WordParams p;
      const int len = rng.uniform_int(cfg.min_word_len, cfg.max_word_len);
      for (int i = 0; i < len; ++i)
        p.word.push_back(alphabet[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(alphabet.size()) - 1))]);
      p.font = cfg.font_set[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(cfg.font_set.size()) - 1))];
      p.size = cfg.size_lo == cfg.size_hi ? cfg.size_lo : rng.uniform(cfg.size_lo, cfg.size_hi);
      p.angle = cfg.angle_lo == cfg.angle_hi ? cfg.angle_lo : rng.uniform(cfg.angle_lo, cfg.angle_hi);
      const RenderedWord r = render_word(p.word, p.font, p.size, p.angle);

      double qx0 = 1e300, qy0 = 1e300, qx1 = -1e300, qy1 = -1e300;
      for (const Point& q : r.quad) {
        qx0 = std::min(qx0, q.x());
        qy0 = std::min(qy0, q.y());
        qx1 = std::max(qx1, q.x());
        qy1 = std::max(qy1, q.y());
      }
      const int ox_lo = static_cast<int>(std::ceil(-qx0));
      const int ox_hi = static_cast<int>(std::floor(cfg.width - qx1));
      const int oy_lo = static_cast<int>(std::ceil(-qy0));
      const int oy_hi = static_cast<int>(std::floor(cfg.height - qy1));
      if (ox_lo > ox_hi || oy_lo > oy_hi) continue;
      const int ox = rng.uniform_int(ox_lo, ox_hi);
      const int oy = rng.uniform_int(oy_lo, oy_hi);
      Polygon quad;
      for (const Point& q : r.quad) quad.push_back(q + Point(ox, oy));
      const Polygon grown = inflate(quad, cfg.gap);
      bool overlap = false;
      for (const Polygon& other : placed) overlap = overlap || convex_intersection_area(grown, other) > 0.0;
      if (overlap) continue;

      // Colour with enough contrast against the background under the ink.
      double bg = 0.0;
      int ink = 0;
      for (int y = 0; y < r.canvas; ++y)
        for (int x = 0; x < r.canvas; ++x) {
          if (!r.mask(y, x)) continue;
          const int iy = y + oy;
          const int ix = x + ox;
          if (iy < 0 || ix < 0 || iy >= cfg.height || ix >= cfg.width) continue;
          bg += cv.lum(iy, ix);
          ++ink;
        }
      if (ink == 0) continue;
      bg /= ink;
      Rgb color{};
      bool found = false;
      for (int k = 0; k < 20 && !found; ++k) {
        color = random_color(rng);
        found = std::abs(luminance(color[0], color[1], color[2]) - bg) >= cfg.min_contrast;
      }
      if (!found) color = bg < 127.5 ? Rgb{255, 255, 255} : Rgb{0, 0, 0};

      for (int y = 0; y < r.canvas; ++y)
        for (int x = 0; x < r.canvas; ++x) {
          const int iy = y + oy;
          const int ix = x + ox;
          if (iy < 0 || ix < 0 || iy >= cfg.height || ix >= cfg.width) continue;
          const double a = r.alpha(y, x);
          if (a > 0.0)
            for (int k = 0; k < 3; ++k)
              cv.at(iy, ix, k) = a * color[static_cast<std::size_t>(k)] + (1 - a) * cv.at(iy, ix, k);
          if (r.mask(y, x)) out.stroke_mask(iy, ix) = 1;
        }
      placed.push_back(quad);
      out.instances.push_back({quad, p.word});
      out.params.push_back(p);
      done = true;
    }
    if (!done) ++out.dropped;
  }

  out.image = RgbImage(cfg.width, cfg.height);
  for (std::size_t i = 0; i < cv.v.size(); ++i)
    out.image.data[i] = static_cast<std::uint8_t>(std::lround(std::clamp(cv.v[i], 0.0, 255.0)));
  return out;
}

namespace {

std::string sample_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06d.png", index);
  return buf;
}

}  // namespace

DatasetSummary generate_dataset(const std::vector<GenConfig>& configs, int count_per_config, const fs::path& out_dir,
                                std::uint64_t base_seed) {
  if (configs.empty()) throw std::invalid_argument("no generator configs");
  if (count_per_config < 0) throw std::invalid_argument("count must be non-negative");
  for (const auto& c : configs) c.validate();
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  if (ec) throw std::runtime_error("cannot create " + (out_dir / "images").string() + ": " + ec.message());
  fs::create_directories(out_dir / "masks", ec);
  if (ec) throw std::runtime_error("cannot create " + (out_dir / "masks").string() + ": " + ec.message());

  const int total = static_cast<int>(configs.size()) * count_per_config;
  std::vector<std::string> lines(static_cast<std::size_t>(total));
  std::vector<int> dropped(static_cast<std::size_t>(total), 0);
  parallel_for(total, [&](int i) {
    const GenConfig& cfg = configs[static_cast<std::size_t>(i / std::max(1, count_per_config))];
    const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(i);
    const SceneSample s = generate_sample(cfg, seed);
    SampleRecord rec;
    rec.image = "images/" + sample_name(i);
    rec.mask = "masks/" + sample_name(i);
    rec.instances = s.instances;
    rec.seed = seed;
    rec.config_id = cfg.id;
    write_png(out_dir / rec.image, s.image);
    write_png(out_dir / rec.mask, s.stroke_mask);
    lines[static_cast<std::size_t>(i)] = rec.to_json().dump();
    dropped[static_cast<std::size_t>(i)] = s.dropped;
  });

  std::string jsonl;
  for (const auto& l : lines) jsonl += l + "\n";
  write_text(out_dir / "annotations.jsonl", jsonl);

  json manifest;
  manifest["format"] = "strokenet-synth/1";
  manifest["base_seed"] = base_seed;
  manifest["count_per_config"] = count_per_config;
  manifest["configs"] = json::array();
  for (const auto& c : configs) manifest["configs"].push_back(c.to_json());
  manifest["samples"] = json::array();
  DatasetSummary summary;
  for (int i = 0; i < total; ++i) {
    manifest["samples"].push_back({{"index", i},
                                   {"seed", base_seed + static_cast<std::uint64_t>(i)},
                                   {"config_id", configs[static_cast<std::size_t>(i / count_per_config)].id},
                                   {"dropped_words", dropped[static_cast<std::size_t>(i)]}});
    summary.dropped_words += dropped[static_cast<std::size_t>(i)];
  }
  summary.samples = total;
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return summary;
}

DatasetSummary regenerate_dataset(const fs::path& manifest_path, const fs::path& out_dir) {
  const json m = json::parse(read_text(manifest_path));
  std::vector<GenConfig> configs;
  for (const auto& c : m.at("configs")) configs.push_back(GenConfig::from_json(c));
  return generate_dataset(configs, m.at("count_per_config").get<int>(), out_dir, m.at("base_seed").get<std::uint64_t>());
}

}  // namespace strokenet
