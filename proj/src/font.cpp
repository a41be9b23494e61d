#include "strokenet/font.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace strokenet {

namespace {

using Pts = std::initializer_list<std::pair<double, double>>;

Stroke line(Pts pts) {
  Stroke s;
  for (const auto& [x, y] : pts) s.emplace_back(x, y);
  return s;
}

Glyph make(std::initializer_list<Stroke> strokes, double advance = 0.6) {
  return Glyph{std::vector<Stroke>(strokes), advance};
}

const Stroke kRing = line({{0.15, 0}, {0.45, 0}, {0.6, 0.15}, {0.6, 0.85}, {0.45, 1}, {0.15, 1}, {0, 0.85}, {0, 0.15},
                           {0.15, 0}});
const Stroke kBowlC = line({{0.6, 0.15}, {0.45, 0}, {0.15, 0}, {0, 0.15}, {0, 0.85}, {0.15, 1}, {0.45, 1}, {0.6, 0.85}});
const Stroke kBowlP = line({{0, 1}, {0, 0}, {0.45, 0}, {0.6, 0.12}, {0.6, 0.4}, {0.45, 0.52}, {0, 0.52}});

const std::map<char, Glyph>& table() {
  static const std::map<char, Glyph> glyphs = [] {
    std::map<char, Glyph> g;
    g['A'] = make({line({{0, 1}, {0.3, 0}, {0.6, 1}}), line({{0.1, 0.66}, {0.5, 0.66}})});
    g['B'] = make({line({{0, 1}, {0, 0}, {0.4, 0}, {0.55, 0.1}, {0.55, 0.38}, {0.4, 0.48}, {0, 0.48}}),
                   line({{0.4, 0.48}, {0.6, 0.6}, {0.6, 0.88}, {0.45, 1}, {0, 1}})});
    g['C'] = make({kBowlC});
    g['D'] = make({line({{0, 0}, {0, 1}, {0.4, 1}, {0.6, 0.8}, {0.6, 0.2}, {0.4, 0}, {0, 0}})});
    g['E'] = make({line({{0.55, 0}, {0, 0}, {0, 1}, {0.55, 1}}), line({{0, 0.5}, {0.4, 0.5}})}, 0.55);
    g['F'] = make({line({{0.55, 0}, {0, 0}, {0, 1}}), line({{0, 0.5}, {0.4, 0.5}})}, 0.55);
    {
      Stroke s = kBowlC;
      s.emplace_back(0.6, 0.55);
      s.emplace_back(0.35, 0.55);
      g['G'] = make({s});
    }
    g['H'] = make({line({{0, 0}, {0, 1}}), line({{0.6, 0}, {0.6, 1}}), line({{0, 0.5}, {0.6, 0.5}})});
    g['I'] = make({line({{0, 0}, {0.4, 0}}), line({{0.2, 0}, {0.2, 1}}), line({{0, 1}, {0.4, 1}})}, 0.4);
    g['J'] = make({line({{0.55, 0}, {0.55, 0.8}, {0.35, 1}, {0.15, 1}, {0, 0.8}})}, 0.55);
    g['K'] = make({line({{0, 0}, {0, 1}}), line({{0.6, 0}, {0, 0.6}}), line({{0.2, 0.45}, {0.6, 1}})});
    g['L'] = make({line({{0, 0}, {0, 1}, {0.55, 1}})}, 0.55);
    g['M'] = make({line({{0, 1}, {0, 0}, {0.35, 0.6}, {0.7, 0}, {0.7, 1}})}, 0.7);
    g['N'] = make({line({{0, 1}, {0, 0}, {0.6, 1}, {0.6, 0}})});
    g['O'] = make({kRing});
    g['P'] = make({kBowlP});
    g['Q'] = make({kRing, line({{0.35, 0.7}, {0.6, 1}})});
    g['R'] = make({kBowlP, line({{0.3, 0.52}, {0.6, 1}})});
    g['S'] = make({line({{0.6, 0.12}, {0.45, 0}, {0.15, 0}, {0, 0.12}, {0, 0.38}, {0.15, 0.5}, {0.45, 0.5},
                         {0.6, 0.62}, {0.6, 0.88}, {0.45, 1}, {0.15, 1}, {0, 0.88}})});
    g['T'] = make({line({{0, 0}, {0.6, 0}}), line({{0.3, 0}, {0.3, 1}})});
    g['U'] = make({line({{0, 0}, {0, 0.85}, {0.15, 1}, {0.45, 1}, {0.6, 0.85}, {0.6, 0}})});
    g['V'] = make({line({{0, 0}, {0.3, 1}, {0.6, 0}})});
    g['W'] = make({line({{0, 0}, {0.18, 1}, {0.35, 0.4}, {0.52, 1}, {0.7, 0}})}, 0.7);
    g['X'] = make({line({{0, 0}, {0.6, 1}}), line({{0.6, 0}, {0, 1}})});
    g['Y'] = make({line({{0, 0}, {0.3, 0.5}, {0.6, 0}}), line({{0.3, 0.5}, {0.3, 1}})});
    g['Z'] = make({line({{0, 0}, {0.6, 0}, {0, 1}, {0.6, 1}})});

    g['0'] = make({kRing, line({{0.1, 0.85}, {0.5, 0.15}})});
    g['1'] = make({line({{0.05, 0.2}, {0.25, 0}, {0.25, 1}}), line({{0.05, 1}, {0.45, 1}})}, 0.45);
    g['2'] = make({line({{0, 0.15}, {0.15, 0}, {0.45, 0}, {0.6, 0.15}, {0.6, 0.4}, {0, 1}, {0.6, 1}})});
    g['3'] = make({line({{0, 0.1}, {0.15, 0}, {0.45, 0}, {0.6, 0.12}, {0.6, 0.38}, {0.45, 0.5}, {0.2, 0.5}}),
                   line({{0.45, 0.5}, {0.6, 0.62}, {0.6, 0.88}, {0.45, 1}, {0.15, 1}, {0, 0.9}})});
    g['4'] = make({line({{0.45, 1}, {0.45, 0}, {0, 0.7}, {0.6, 0.7}})});
    g['5'] = make({line({{0.6, 0}, {0, 0}, {0, 0.45}, {0.45, 0.45}, {0.6, 0.6}, {0.6, 0.85}, {0.45, 1}, {0, 1}})});
    g['6'] = make({line({{0.55, 0.05}, {0.4, 0}, {0.15, 0}, {0, 0.2}, {0, 0.85}, {0.15, 1}, {0.45, 1}, {0.6, 0.85},
                         {0.6, 0.6}, {0.45, 0.48}, {0.15, 0.48}, {0, 0.6}})});
    g['7'] = make({line({{0, 0}, {0.6, 0}, {0.2, 1}})});
    g['8'] = make({line({{0.15, 0.5}, {0, 0.38}, {0, 0.12}, {0.15, 0}, {0.45, 0}, {0.6, 0.12}, {0.6, 0.38},
                         {0.45, 0.5}, {0.15, 0.5}, {0, 0.62}, {0, 0.88}, {0.15, 1}, {0.45, 1}, {0.6, 0.88},
                         {0.6, 0.62}, {0.45, 0.5}})});
    g['9'] = make({line({{0.6, 0.4}, {0.45, 0.52}, {0.15, 0.52}, {0, 0.4}, {0, 0.15}, {0.15, 0}, {0.45, 0},
                         {0.6, 0.15}, {0.6, 0.8}, {0.45, 1}, {0.15, 1}, {0.05, 0.95}})});

    g['.'] = make({line({{0.1, 0.95}, {0.1, 1}})}, 0.2);
    g['-'] = make({line({{0, 0.55}, {0.4, 0.55}})}, 0.4);
    g['+'] = make({line({{0, 0.55}, {0.5, 0.55}}), line({{0.25, 0.3}, {0.25, 0.8}})}, 0.5);
    g['*'] = make({line({{0.25, 0.2}, {0.25, 0.7}}), line({{0.03, 0.32}, {0.47, 0.58}}),
                   line({{0.03, 0.58}, {0.47, 0.32}})},
                  0.5);
    g['_'] = make({line({{0, 1}, {0.5, 1}})}, 0.5);
    g[':'] = make({line({{0.1, 0.3}, {0.1, 0.35}}), line({{0.1, 0.95}, {0.1, 1}})}, 0.2);
    g['/'] = make({line({{0, 1}, {0.4, 0}})}, 0.4);
    g[' '] = Glyph{{}, 0.4};
    return g;
  }();
  return glyphs;
}

Point style_point(const Point& p, int font) {
  switch (static_cast<FontStyle>(font)) {
    case FontStyle::plain: return p;
    case FontStyle::condensed: return Point(0.75 * p.x(), p.y());
    case FontStyle::oblique: return Point(p.x() + 0.25 * (1.0 - p.y()), p.y());
    case FontStyle::wide: return Point(1.25 * p.x(), p.y());
  }
  return p;
}

double style_advance(double advance, int font) {
  switch (static_cast<FontStyle>(font)) {
    case FontStyle::condensed: return 0.75 * advance;
    case FontStyle::oblique: return advance + 0.25;
    case FontStyle::wide: return 1.25 * advance;
    default: return advance;
  }
}

double segment_distance(const Point& p, const Point& a, const Point& b) {
  const Point ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

}  // namespace

bool has_glyph(char c) { return table().count(c) != 0; }

const Glyph& glyph(char c) {
  auto it = table().find(c);
  if (it == table().end()) throw std::invalid_argument(std::string("no glyph for character '") + c + "'");
  return it->second;
}

double stroke_width(double size) { return std::max(0.12 * size, 1.0); }

std::vector<Stroke> layout_word(const std::string& word, int font, double size) {
  if (font < 0 || font >= kFontCount) throw std::invalid_argument("unknown font id " + std::to_string(font));
  std::vector<Stroke> out;
  double pen = 0.0;
  for (char c : word) {
    const Glyph& g = glyph(c);
    for (const Stroke& s : g.strokes) {
      Stroke placed;
      for (const Point& p : s) placed.push_back(size * (style_point(p, font) + Point(pen, 0.0)));
      out.push_back(std::move(placed));
    }
    pen += style_advance(g.advance, font) + 0.25;
  }
  return out;
}

RenderedWord render_word(const std::string& word, int font, double size, double angle) {
  if (word.empty()) throw std::invalid_argument("render_word: empty word");
  for (char c : word) glyph(c);
  const std::vector<Stroke> strokes = layout_word(word, font, size);
  const double radius = 0.5 * stroke_width(size);

  Point lo = Point::Constant(std::numeric_limits<double>::infinity());
  Point hi = -lo;
  for (const Stroke& s : strokes)
    for (const Point& p : s) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  if (!std::isfinite(lo.x())) throw std::invalid_argument("render_word: word has no ink");
  lo.array() -= radius;
  hi.array() += radius;
  const Point mid = 0.5 * (lo + hi);

  const auto [c, s] = rotation_degrees(angle);
  const Point along(c, s);
  const Point down(-s, c);
  // Word-frame offset from the box centre to centre-relative canvas coordinates.
  auto place = [&](const Point& p) {
    const Point q = p - mid;
    return Point(q.x() * along.x() + q.y() * down.x(), q.x() * along.y() + q.y() * down.y());
  };

  const double half_diag = 0.5 * (hi - lo).norm();
  const int canvas = 2 * static_cast<int>(std::ceil(half_diag + 2.0));
  const double half = 0.5 * canvas;

  std::vector<std::pair<Point, Point>> segments;
  for (const Stroke& st : strokes) {
    if (st.size() == 1) segments.emplace_back(place(st[0]), place(st[0]));
    for (std::size_t i = 1; i < st.size(); ++i) segments.emplace_back(place(st[i - 1]), place(st[i]));
  }

  RenderedWord out;
  out.canvas = canvas;
  out.alpha = Plane::Zero(canvas, canvas);
  out.mask = MaskPlane::Zero(canvas, canvas);
  for (int y = 0; y < canvas; ++y)
    for (int x = 0; x < canvas; ++x) {
      // Centre-relative pixel centre; symmetric under point reflection.
      const Point p(x + 0.5 - half, y + 0.5 - half);
      double d = std::numeric_limits<double>::infinity();
      for (const auto& [a, b] : segments) d = std::min(d, segment_distance(p, a, b));
      out.alpha(y, x) = std::clamp(radius + 0.5 - d, 0.0, 1.0);
      out.mask(y, x) = d <= radius ? 1 : 0;
    }
  const Point centre(half, half);
  out.quad = {centre + place(lo), centre + place(Point(hi.x(), lo.y())), centre + place(hi),
              centre + place(Point(lo.x(), hi.y()))};
  return out;
}

void draw_text(RgbImage& image, const std::string& text, double x, double y, double size,
               const std::array<std::uint8_t, 3>& color) {
  std::string upper;
  for (char c : text) {
    const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (has_glyph(u)) upper.push_back(u);
  }
  if (upper.empty()) return;
  const double radius = 0.5 * stroke_width(size);
  for (const Stroke& s : layout_word(upper, 0, size)) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Point a = s[i] + Point(x, y);
      const Point b = s[i == 0 ? 0 : i - 1] + Point(x, y);
      const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x(), b.x()) - radius - 1)));
      const int x1 = std::min(image.width - 1, static_cast<int>(std::ceil(std::max(a.x(), b.x()) + radius + 1)));
      const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y(), b.y()) - radius - 1)));
      const int y1 = std::min(image.height - 1, static_cast<int>(std::ceil(std::max(a.y(), b.y()) + radius + 1)));
      for (int py = y0; py <= y1; ++py)
        for (int px = x0; px <= x1; ++px) {
          const double cov = std::clamp(radius + 0.5 - segment_distance(pixel_center(py, px), a, b), 0.0, 1.0);
          if (cov <= 0.0) continue;
          for (int ch = 0; ch < 3; ++ch) {
            const double v = cov * color[static_cast<std::size_t>(ch)] + (1.0 - cov) * image.at(py, px, ch);
            image.at(py, px, ch) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
          }
        }
    }
  }
}

}  // namespace strokenet
