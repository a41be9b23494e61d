#pragma once

// Ground-truth geometry for text regions: text area (TA), text centre area
// (TCA), per-pixel distances to the upper/lower text edges and the local
// writing orientation.

#include "strokenet/raster.hpp"

#include <string>
#include <utility>
#include <vector>

namespace strokenet {

// Polygon with 2k vertices: the first k trace the top edge along the writing
// direction, the last k trace the bottom edge back.
struct TextAnnotation {
  Polygon polygon;
  std::string word;
};

struct GeometryMaps {
  Plane ta;         // P(text area)
  Plane tca;        // P(text centre area)
  Plane h1;         // distance to upper edge, pixels
  Plane h2;         // distance to lower edge, pixels
  Plane sin_theta;
  Plane cos_theta;
  Plane height;     // h1 + h2
  MaskPlane valid_mask;

  static GeometryMaps zeros(ImageSize size);
  int width() const { return static_cast<int>(ta.cols()); }
  int rows() const { return static_cast<int>(ta.rows()); }
  ImageSize size() const { return {width(), rows()}; }
};

struct LabelOptions {
  double shrink_ratio = 0.3;  // per side, perpendicular to writing
  double end_trim = 0.5;      // along writing, in units of local height
};

struct LabelResult {
  GeometryMaps maps;
  LabelPlane instance;  // annotation index per TA pixel, -1 elsewhere
  std::vector<std::string> warnings;
};

LabelResult make_geometry_maps(const std::vector<TextAnnotation>& annotations, ImageSize image_size,
                               const LabelOptions& options = {});

// Top and bottom edges paired by index: result.first[i] faces result.second[i].
std::pair<Polygon, Polygon> polygon_sides(const Polygon& polygon);

// Shrinks perpendicular to the writing direction by shrink_ratio of the local
// height on each side, then trims end_trim * local height from both ends.
// Returns an empty polygon when trimming consumes the whole centre line.
Polygon shrink_to_tca(const Polygon& polygon, double shrink_ratio, double end_trim = 0.5);

// Unit-length (sin, cos); throws std::domain_error for a null vector.
std::pair<double, double> normalize_angle(double raw_sin, double raw_cos);

// Tightest axis-aligned rectangle around the non-zero pixels (the OTA).
Rect outer_rectangle(const MaskPlane& region);
// Pixel rectangle covering a polygon's vertices, clipped to the image.
Rect outer_rectangle(const Polygon& polygon, ImageSize size);

bool is_valid_text_polygon(const Polygon& polygon);

}  // namespace strokenet
