#include "strokenet/plot.hpp"

#include "strokenet/font.hpp"
#include "strokenet/io.hpp"

#include <algorithm>
#include <cmath>

namespace strokenet {

namespace {

void put(RgbImage& image, int x, int y, const Color& c) {
  if (x < 0 || y < 0 || x >= image.width || y >= image.height) return;
  for (int k = 0; k < 3; ++k) image.at(y, x, k) = c[static_cast<std::size_t>(k)];
}

constexpr std::array<Color, 4> kPalette{{{66, 103, 178}, {221, 132, 82}, {85, 168, 104}, {196, 78, 82}}};

}  // namespace

void draw_line(RgbImage& image, Point a, Point b, const Color& color) {
  const double len = (b - a).norm();
  const int n = std::max(1, static_cast<int>(std::ceil(len * 2.0)));
  for (int i = 0; i <= n; ++i) {
    const Point p = a + (b - a) * (static_cast<double>(i) / n);
    put(image, static_cast<int>(std::floor(p.x())), static_cast<int>(std::floor(p.y())), color);
  }
}

void draw_polygon(RgbImage& image, const Polygon& poly, const Color& color) {
  for (std::size_t i = 0; i < poly.size(); ++i) draw_line(image, poly[i], poly[(i + 1) % poly.size()], color);
}

void fill_rect(RgbImage& image, const Rect& r, const Color& color) {
  for (int y = r.y0; y < r.y1; ++y)
    for (int x = r.x0; x < r.x1; ++x) put(image, x, y, color);
}

RgbImage detection_panels(const RgbImage& image, const std::vector<Polygon>& detections,
                          const std::vector<Polygon>& ground_truth, const Plane& stroke_map) {
  const int w = image.width;
  const int h = image.height;
  RgbImage out(3 * w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double s = stroke_map.size() > 0 ? std::clamp(stroke_map(y, x), 0.0, 1.0) : 0.0;
      const auto gray = static_cast<std::uint8_t>(std::lround(255.0 * s));
      for (int c = 0; c < 3; ++c) {
        const std::uint8_t v = image.at(y, x, c);
        out.at(y, x, c) = v;
        out.at(y, w + x, c) = gray;
        const double tint = c == 2 ? 255.0 : 0.0;
        out.at(y, 2 * w + x, c) = static_cast<std::uint8_t>(std::lround((1.0 - 0.7 * s) * v + 0.7 * s * tint));
      }
    }
  for (const Polygon& g : ground_truth) draw_polygon(out, g, {40, 200, 60});
  for (const Polygon& d : detections) draw_polygon(out, d, {230, 40, 40});
  return out;
}

RgbImage bar_chart(const std::vector<BarSeries>& series, const std::vector<std::string>& value_names) {
  const int bar = 14;
  const int group_gap = 24;
  const int plot_h = 160;
  const int top = 30;
  const int left = 40;
  const std::size_t bars = value_names.size();
  const int group_w = static_cast<int>(bars) * bar;
  const int width = left + static_cast<int>(series.size()) * (group_w + group_gap) + group_gap;
  const int height = top + plot_h + 40;
  RgbImage img(std::max(width, 200), height);
  std::fill(img.data.begin(), img.data.end(), std::uint8_t{255});
  const Color axis{60, 60, 60};
  draw_line(img, Point(left, top), Point(left, top + plot_h), axis);
  draw_line(img, Point(left, top + plot_h), Point(img.width - 4, top + plot_h), axis);
  for (int tick = 0; tick <= 4; ++tick) {
    const double y = top + plot_h - tick * plot_h / 4.0;
    draw_line(img, Point(left - 4, y), Point(left, y), axis);
    draw_text(img, fixed(tick * 0.25, 2), 4, y - 3, 6, axis);
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const int x0 = left + group_gap + static_cast<int>(s) * (group_w + group_gap);
    for (std::size_t b = 0; b < bars && b < series[s].values.size(); ++b) {
      const double v = std::clamp(series[s].values[b], 0.0, 1.0);
      const int bh = static_cast<int>(std::lround(v * plot_h));
      fill_rect(img, {x0 + static_cast<int>(b) * bar, top + plot_h - bh, x0 + static_cast<int>(b + 1) * bar - 2, top + plot_h},
                kPalette[b % kPalette.size()]);
    }
    draw_text(img, series[s].label, x0, top + plot_h + 8, 7, axis);
  }
  int lx = left + 4;
  for (std::size_t b = 0; b < bars; ++b) {
    fill_rect(img, {lx, 8, lx + 8, 16}, kPalette[b % kPalette.size()]);
    draw_text(img, value_names[b], lx + 11, 9, 6, axis);
    lx += 16 + static_cast<int>(value_names[b].size()) * 6;
  }
  return img;
}

}  // namespace strokenet
