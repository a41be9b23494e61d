#include <doctest.h>

#include "support/shapes.hpp"

#include "strokenet/labels.hpp"

#include <cmath>

using namespace strokenet;
using namespace strokenet::testing;

TEST_SUITE("labels") {
  TEST_CASE("axis-aligned rectangle distances and angle") {
    const LabelResult r = make_geometry_maps({{axis_rect(0, 0, 40, 10), "W"}}, {48, 16});
    // pixel centre (20, 2.5)
    CHECK(r.maps.ta(2, 19) == 1.0);
    CHECK(r.maps.h1(2, 19) == doctest::Approx(2.5));
    CHECK(r.maps.h2(2, 19) == doctest::Approx(7.5));
    CHECK(r.maps.sin_theta(2, 19) == doctest::Approx(0.0));
    CHECK(r.maps.cos_theta(2, 19) == doctest::Approx(1.0));
    CHECK(r.maps.ta(12, 19) == 0.0);
    CHECK(r.instance(2, 19) == 0);
    CHECK(r.instance(12, 19) == -1);
  }

  TEST_CASE("rectangle written downward has sin 1 everywhere") {
    const LabelResult r = make_geometry_maps({{rotated_rect(Point(20, 24), 30, 10, 90), "W"}}, {40, 48});
    int valid = 0;
    for (int y = 0; y < 48; ++y)
      for (int x = 0; x < 40; ++x)
        if (r.maps.valid_mask(y, x)) {
          ++valid;
          CHECK(r.maps.sin_theta(y, x) == doctest::Approx(1.0));
          CHECK(r.maps.cos_theta(y, x) == doctest::Approx(0.0).epsilon(1e-12));
        }
    CHECK(valid > 200);
  }

  TEST_CASE("rotated rectangle matches the canonical-frame oracle") {
    const double deg = 30.0;
    const Point ctr(40, 40);
    const double w = 44, h = 14;
    const LabelResult r = make_geometry_maps({{rotated_rect(ctr, w, h, deg), "W"}}, {80, 80});
    const auto [c, s] = rotation_degrees(deg);
    int checked = 0;
    for (int y = 0; y < 80; ++y)
      for (int x = 0; x < 80; ++x) {
        if (!r.maps.valid_mask(y, x)) continue;
        const Point q = pixel_center(y, x) - ctr;
        const double v = -(q.x() * s - q.y() * c);  // offset along up = (s, -c), negated
        CHECK(r.maps.h1(y, x) == doctest::Approx(h / 2 + v).epsilon(1e-9));
        CHECK(r.maps.h2(y, x) == doctest::Approx(h / 2 - v).epsilon(1e-9));
        CHECK(r.maps.sin_theta(y, x) == doctest::Approx(s));
        CHECK(r.maps.cos_theta(y, x) == doctest::Approx(c));
        ++checked;
      }
    CHECK(checked > 400);
  }

  TEST_CASE("map invariants on several instances") {
    const std::vector<TextAnnotation> anns{{rotated_rect(Point(30, 30), 40, 12, 15), "A"},
                                           {rotated_rect(Point(80, 70), 50, 18, 200), "B"},
                                           {axis_rect(10, 90, 60, 110), "C"}};
    const LabelResult r = make_geometry_maps(anns, {128, 128});
    for (int y = 0; y < 128; ++y)
      for (int x = 0; x < 128; ++x) {
        if (r.maps.tca(y, x) == 1.0) CHECK(r.maps.ta(y, x) == 1.0);
        if (!r.maps.valid_mask(y, x)) continue;
        CHECK(r.maps.h1(y, x) >= 0.0);
        CHECK(r.maps.h2(y, x) >= 0.0);
        const double n = r.maps.sin_theta(y, x) * r.maps.sin_theta(y, x) + r.maps.cos_theta(y, x) * r.maps.cos_theta(y, x);
        CHECK(std::abs(n - 1.0) <= 1e-6);
        CHECK(r.maps.height(y, x) == doctest::Approx(r.maps.h1(y, x) + r.maps.h2(y, x)));
      }
    // Height is the instance height within a pixel.
    CHECK(std::abs(r.maps.height(100, 30) - 20.0) <= 1.0);
  }

  TEST_CASE("degenerate polygon is skipped with a warning") {
    const Polygon flat{Point(1, 1), Point(20, 1), Point(20, 1.02), Point(1, 1.02)};
    const LabelResult r = make_geometry_maps({{flat, "X"}, {axis_rect(2, 10, 30, 20), "Y"}}, {32, 32});
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.maps.ta(1, 5) == 0.0);
    CHECK(r.maps.ta(15, 5) == 1.0);
    CHECK(r.instance(15, 5) == 1);
  }

  TEST_CASE("shrink_to_tca") {
    SUBCASE("zero ratio and no trim is the identity") {
      const Polygon p = rotated_rect(Point(30, 20), 30, 10, 20);
      const Polygon t = shrink_to_tca(p, 0.0, 0.0);
      REQUIRE(t.size() == p.size());
      for (std::size_t i = 0; i < p.size(); ++i) CHECK((t[i] - p[i]).norm() < 1e-9);
    }
    SUBCASE("ratio 0.3 on a 40 x 10 rectangle") {
      const MaskPlane m = rasterize_polygon(shrink_to_tca(axis_rect(0, 0, 40, 10), 0.3, 0.5), {48, 16});
      const Rect b = mask_bounds(m);
      CHECK(b == Rect{5, 3, 35, 7});
    }
    SUBCASE("height 2 gives a thin band or nothing") {
      const Polygon t = shrink_to_tca(axis_rect(0, 0, 40, 2), 0.3, 0.5);
      if (!t.empty()) CHECK(mask_bounds(rasterize_polygon(t, {48, 8})).height() <= 1);
    }
    SUBCASE("trim that consumes the centre line leaves nothing") {
      CHECK(shrink_to_tca(axis_rect(0, 0, 8, 10), 0.3, 0.5).empty());
    }
    SUBCASE("result lies inside the input") {
      const Polygon p = rotated_rect(Point(40, 40), 50, 16, 33);
      for (const Point& q : shrink_to_tca(p, 0.3, 0.5)) CHECK(contains(p, q));
    }
  }

  TEST_CASE("normalize_angle") {
    auto [s, c] = normalize_angle(0.6, 0.8);
    CHECK(s == doctest::Approx(0.6));
    CHECK(c == doctest::Approx(0.8));
    std::tie(s, c) = normalize_angle(3, 4);
    CHECK(s == doctest::Approx(0.6));
    CHECK(c == doctest::Approx(0.8));
    CHECK_THROWS_WITH_AS(normalize_angle(0, 0), doctest::Contains("undefined orientation"), std::domain_error);
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
      const auto once = normalize_angle(rng.uniform(-5, 5), rng.uniform(-5, 5));
      const auto twice = normalize_angle(once.first, once.second);
      CHECK(std::abs(once.first - twice.first) <= 1e-12);
      CHECK(std::abs(once.second - twice.second) <= 1e-12);
    }
  }

  TEST_CASE("outer_rectangle") {
    MaskPlane m = MaskPlane::Zero(20, 20);
    m(7, 5) = 1;
    CHECK(outer_rectangle(m) == Rect{5, 7, 6, 8});
    CHECK(outer_rectangle(MaskPlane::Ones(20, 20)) == Rect{0, 0, 20, 20});
    CHECK_THROWS(outer_rectangle(MaskPlane::Zero(4, 4)));
    const Polygon diamond = rotated_rect(Point(30, 30), 20, 20, 45);
    double lx = 1e9, ly = 1e9, hx = -1e9, hy = -1e9;
    for (const Point& q : diamond) {
      lx = std::min(lx, q.x());
      ly = std::min(ly, q.y());
      hx = std::max(hx, q.x());
      hy = std::max(hy, q.y());
    }
    const Rect r = outer_rectangle(diamond, {64, 64});
    CHECK(r.x0 == static_cast<int>(std::floor(lx)));
    CHECK(r.y0 == static_cast<int>(std::floor(ly)));
    CHECK(r.x1 == static_cast<int>(std::ceil(hx)));
    CHECK(r.y1 == static_cast<int>(std::ceil(hy)));
  }

  TEST_CASE("polygon sides pair top and bottom") {
    const Polygon p{Point(0, 0), Point(10, 0), Point(20, 0), Point(20, 5), Point(10, 5), Point(0, 5)};
    const auto [top, bottom] = polygon_sides(p);
    REQUIRE(top.size() == 3);
    CHECK(bottom[0] == Point(0, 5));
    CHECK(bottom[2] == Point(20, 5));
    CHECK(is_valid_text_polygon(p));
    CHECK_FALSE(is_valid_text_polygon({Point(0, 0), Point(1, 0), Point(1, 1)}));
  }
}
