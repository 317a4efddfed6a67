#include <doctest.h>

#include <random>

#include "opcrecipe/error.hpp"
#include "opcrecipe/geometry.hpp"
#include "opcrecipe/layout_io.hpp"
#include "opcrecipe/raster.hpp"
#include "opcrecipe/synth.hpp"
#include "oracles.hpp"

using namespace opcrecipe;

namespace {

int count_kind(const Polygon& p, CornerKind k) {
    int n = 0;
    for (const auto& c : classify_corners(p)) n += c.kind == k;
    return n;
}

}  // namespace

TEST_CASE("layout parse: rectangle") {
    const auto c = parse_layout("CLIP r 200 200\nPOLY 0 0 0 100 60 100 60 0\n");
    REQUIRE(c.polygons.size() == 1);
    CHECK(c.polygons[0].size() == 4);
    CHECK(area(c.polygons[0]) == 6000);
    CHECK(signed_area2(c.polygons[0].vertices) < 0);
}

TEST_CASE("layout parse: counter-clockwise input normalizes to the same polygon") {
    const auto cw = parse_layout("CLIP r 200 200\nPOLY 0 0 0 100 60 100 60 0\n");
    const auto ccw = parse_layout("CLIP r 200 200\nPOLY 0 0 60 0 60 100 0 100\n");
    CHECK(cw.polygons[0] == ccw.polygons[0]);
}

TEST_CASE("corner kinds") {
    CHECK(count_kind(testing::rect(0, 0, 60, 100), CornerKind::Convex) == 4);
    CHECK(count_kind(testing::rect(0, 0, 60, 100), CornerKind::Concave) == 0);

    const auto l = make_polygon({{0, 0}, {0, 200}, {100, 200}, {100, 100}, {200, 100}, {200, 0}});
    CHECK(l.size() == 6);
    CHECK(count_kind(l, CornerKind::Convex) == 5);
    CHECK(count_kind(l, CornerKind::Concave) == 1);

    const auto u = make_polygon(
        {{0, 0}, {0, 200}, {60, 200}, {60, 60}, {140, 60}, {140, 200}, {200, 200}, {200, 0}});
    CHECK(u.size() == 8);
    CHECK(count_kind(u, CornerKind::Convex) == 6);
    CHECK(count_kind(u, CornerKind::Concave) == 2);
}

TEST_CASE("make_polygon drops duplicates, collinear points and the closing vertex") {
    const auto p = make_polygon({{0, 0}, {0, 50}, {0, 100}, {60, 100}, {60, 100}, {60, 0}, {0, 0}});
    CHECK(p.size() == 4);
    CHECK(area(p) == 6000);
    CHECK(perimeter(p) == 320);
}

TEST_CASE("make_polygon rejects invalid rings") {
    CHECK_THROWS_AS(make_polygon({{0, 0}, {10, 10}, {20, 0}}), GeometryError);
    // Bow tie.
    CHECK_THROWS_AS(make_polygon({{0, 0}, {0, 10}, {10, 10}, {10, 20}, {20, 20}, {20, 10},
                                  {10, 10}, {10, 0}}),
                    GeometryError);
}

TEST_CASE("edges follow clockwise traversal with outward normals") {
    const auto r = testing::rect(0, 0, 60, 100);
    for (const Edge& e : polygon_edges(r)) {
        // The point just outside the edge midpoint is outside the polygon.
        const PointF m = e.at(e.length_nm / 2.0);
        CHECK_FALSE(testing::inside_oracle(r, m.x + 0.5 * e.outward_normal.x, m.y + 0.5 * e.outward_normal.y));
        CHECK(testing::inside_oracle(r, m.x - 0.5 * e.outward_normal.x, m.y - 0.5 * e.outward_normal.y));
    }
}

TEST_CASE("jog detection") {
    // Stepped wire: a 20 nm riser between two horizontal runs.
    const auto s = make_polygon({{0, 0}, {0, 60}, {200, 60}, {200, 80}, {400, 80}, {400, 20}, {200, 20}, {200, 0}});
    const auto jogs = detect_jogs(s, 40);
    CHECK(jogs.size() == 2);
    for (int j : jogs) CHECK(polygon_edge(s, j).length_nm == 20);
    CHECK(detect_jogs(testing::rect(0, 0, 30, 30), 40).empty());
}

TEST_CASE("property: contains agrees with an independent crossing test") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> u(0, 300);
    for (int trial = 0; trial < 50; ++trial) {
        int x0 = u(rng), y0 = u(rng), x1 = x0 + 10 + u(rng), y1 = y0 + 10 + u(rng);
        const auto p = testing::rect(x0, y0, x1, y1);
        for (int k = 0; k < 40; ++k) {
            const double x = u(rng) * 2 + 0.25, y = u(rng) * 2 + 0.25;
            CHECK(contains(p, x, y) == testing::inside_oracle(p, x, y));
        }
    }
}

TEST_CASE("distances") {
    CHECK(distance_point_segment({0, 5}, {3, 0}, {3, 10}) == doctest::Approx(3));
    CHECK(distance_point_segment({0, 0}, {3, 4}, {3, 10}) == doctest::Approx(5));
    CHECK(polygon_distance(testing::rect(0, 0, 10, 10), testing::rect(20, 0, 30, 10)) == doctest::Approx(10));
    CHECK(interiors_overlap(testing::rect(0, 0, 10, 10), testing::rect(5, 5, 15, 15)));
    CHECK_FALSE(interiors_overlap(testing::rect(0, 0, 10, 10), testing::rect(10, 0, 20, 10)));
}

TEST_CASE("validate_clip") {
    CHECK_NOTHROW(validate_clip(testing::clip_of({testing::rect(0, 0, 60, 100)})));
    CHECK_THROWS_AS(validate_clip(testing::clip_of({testing::rect(0, 0, 60, 100)}, 50, 50)), GeometryError);
    CHECK_THROWS_AS(validate_clip(testing::clip_of({testing::rect(0, 0, 60, 100), testing::rect(30, 30, 90, 90)})),
                    GeometryError);
}

TEST_CASE("layout parse errors carry line numbers") {
    CHECK_THROWS_AS(parse_layout("POLY 0 0 0 10 10 10 10 0\n"), ParseError);
    CHECK_THROWS_AS(parse_layout("CLIP a 100 100\nPOLY 0 0 0 x 10 10 10 0\n"), ParseError);
    CHECK_THROWS_AS(parse_layout("CLIP a 100 100\nPOLY 0 0 10\n"), ParseError);
    CHECK_THROWS_AS(parse_layout("CLIP a 100 100\nRECT 0 0 10 10\n"), ParseError);
    try {
        parse_layout("CLIP a 100 100\n\n# comment\nPOLY 0 0 0 x 10 10 10 0\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("4") != std::string::npos);
    }
}

TEST_CASE("property: format/parse round trip on synthetic clips") {
    SynthParams sp;
    for (const auto& c : synth_suite(40, 10, sp)) {
        const auto back = parse_layout(format_layout(c));
        CHECK(back.id == c.id);
        CHECK(back.polygons == c.polygons);
        CHECK(format_layout(back) == format_layout(c));
    }
}

TEST_CASE("raster") {
    CHECK(popcount(rasterize(testing::clip_of({}, 64, 64), 4)) == 0);
    CHECK(popcount(rasterize(testing::clip_of({testing::rect(0, 0, 64, 64)}, 64, 64), 4)) == 256);
    CHECK(popcount(rasterize(testing::clip_of({testing::rect(100, 100, 160, 200)}, 2048, 2048), 4)) == 375);
    CHECK_THROWS_AS(rasterize(testing::clip_of({}, 65, 64), 4), ConfigError);
}

TEST_CASE("property: cell-center raster matches the crossing oracle") {
    SynthParams sp;
    sp.width_nm = sp.height_nm = 640;
    sp.min_shapes = 2;
    sp.max_shapes = 3;
    sp.max_length_nm = 380;
    for (const auto& c : synth_suite(3, 4, sp)) {
        const auto g = rasterize(c, 4);
        for (int r = 0; r < g.rows; ++r)
            for (int col = 0; col < g.cols; ++col) {
                bool in = false;
                for (const auto& p : c.polygons) in = in || testing::inside_oracle(p, col * 4 + 2.0, r * 4 + 2.0);
                REQUIRE(bool(g.at(r, col)) == in);
            }
    }
}

TEST_CASE("coverage raster equals the binary raster on lattice-aligned polygons") {
    const std::vector<Polygon> polys{testing::rect(8, 8, 64, 100)};
    const auto cov = coverage_raster(polys, 128, 128, 4);
    const auto bin = rasterize_polygons(polys, 128, 128, 4);
    for (std::size_t i = 0; i < cov.size(); ++i) CHECK(cov.data[i] == double(bin.data[i]));
    // A 1 nm shift leaves a quarter-covered column.
    const auto half = coverage_raster(std::vector<Polygon>{testing::rect(8, 8, 65, 100)}, 128, 128, 4);
    CHECK(half.at(10, 16) == doctest::Approx(0.25));
}

TEST_CASE("synth determinism and constraints") {
    SynthParams sp;
    CHECK(format_layout(synth_clip(7, sp)) == format_layout(synth_clip(7, sp)));
    sp.min_space_nm = 50;
    for (const auto& c : synth_suite(100, 10, sp)) {
        CHECK_NOTHROW(validate_clip(c));
        for (std::size_t i = 0; i < c.polygons.size(); ++i)
            for (std::size_t j = i + 1; j < c.polygons.size(); ++j) {
                double best = 1e18;
                for (const Edge& a : polygon_edges(c.polygons[i]))
                    for (const Edge& b : polygon_edges(c.polygons[j]))
                        best = std::min(best, distance_segments(a.p0, a.p1, b.p0, b.p1));
                CHECK(best >= 50);
            }
    }
    sp.allow_jogs = false;
    for (const auto& c : synth_suite(200, 10, sp))
        for (const auto& p : c.polygons) CHECK(detect_jogs(p).empty());
}
