#pragma once

// Single-stroke vector font (uppercase Latin, digits, a few symbols) and the
// word rasteriser built on it. Glyph coordinates live in a unit cap box:
// x to the right, y down, 0 = cap line, 1 = baseline.

#include "strokenet/raster.hpp"

#include <array>
#include <string>
#include <vector>

namespace strokenet {

using Stroke = std::vector<Point>;

struct Glyph {
  std::vector<Stroke> strokes;
  double advance = 0.6;  // ink width; spacing is added by the layout
};

enum class FontStyle { plain = 0, condensed = 1, oblique = 2, wide = 3 };

constexpr int kFontCount = 4;

// Throws std::invalid_argument naming the character when it has no glyph.
const Glyph& glyph(char c);
bool has_glyph(char c);

// Word strokes in the word frame, cap height `size` pixels, first glyph at
// x = 0 and the cap line at y = 0.
std::vector<Stroke> layout_word(const std::string& word, int font, double size);

double stroke_width(double size);

struct RenderedWord {
  Plane alpha;        // antialiased coverage on a square canvas
  MaskPlane mask;     // pixels within half the stroke width of a stroke
  Polygon quad;       // TL, TR, BR, BL in canvas pixels
  int canvas = 0;     // side length; the word centre sits at (canvas/2, canvas/2)
};

// Rotation by `angle` degrees maps the writing direction to (cos, sin) in image
// coordinates. The quad is the tight ink box in the word frame grown by the
// stroke radius, then rotated.
RenderedWord render_word(const std::string& word, int font, double size, double angle);

// Draws text in the font onto an image (labels for plots). Unknown
// characters are skipped; lowercase is drawn as uppercase.
void draw_text(RgbImage& image, const std::string& text, double x, double y, double size,
               const std::array<std::uint8_t, 3>& color);

}  // namespace strokenet
