#pragma once

// Static figures: detection overlays and the ablation bar chart.

#include "strokenet/raster.hpp"

#include <array>
#include <string>
#include <vector>

namespace strokenet {

using Color = std::array<std::uint8_t, 3>;

void draw_line(RgbImage& image, Point a, Point b, const Color& color);
void draw_polygon(RgbImage& image, const Polygon& poly, const Color& color);
void fill_rect(RgbImage& image, const Rect& r, const Color& color);

// Three panels side by side: input with ground truth (green) and detections
// (red), the stroke probability map, and the stroke map tinted over the input.
RgbImage detection_panels(const RgbImage& image, const std::vector<Polygon>& detections,
                          const std::vector<Polygon>& ground_truth, const Plane& stroke_map);

struct BarSeries {
  std::string label;
  std::vector<double> values;  // in [0, 1]
};

// Grouped bars: one group per series, one bar per value (colours cycle).
RgbImage bar_chart(const std::vector<BarSeries>& series, const std::vector<std::string>& value_names);

}  // namespace strokenet
