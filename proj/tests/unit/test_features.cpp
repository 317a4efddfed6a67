#include <doctest.h>

#include <set>

#include "opcrecipe/error.hpp"
#include "opcrecipe/features.hpp"
#include "oracles.hpp"

using namespace opcrecipe;

namespace {

// Control point at `arclength` on the edge running from a to b.
ControlPoint point_on(const LayoutClip& clip, int polygon, Point a, Point b, int arclength) {
    const Polygon& p = clip.polygons.at(polygon);
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p.vertex(i) == a && p.vertex(i + 1) == b) {
            ControlPoint cp;
            cp.polygon = polygon;
            cp.edge = int(i);
            cp.arclength_nm = arclength;
            return cp;
        }
    FAIL("no such edge");
    return {};
}

FeatureVector labels(const LayoutClip& clip, const ControlPoint& p) {
    return label_point(clip, place_control_points(clip, FragmentPolicy{}), p, builtin_pool());
}

}  // namespace

TEST_CASE("builtin pool") {
    const auto pool = builtin_pool();
    CHECK(pool.features.size() == 24);
    const auto names = pool.names();
    CHECK(std::set<std::string>(names.begin(), names.end()).size() == names.size());
    bool found = false;
    for (const auto& f : pool.features)
        if (f.name == "on_jog_long_edge") {
            found = true;
            CHECK(f.description == "it is on the jog, but on the long edge of the jog");
        }
    CHECK(found);
    for (const auto& n : names) CHECK(has_predicate(n));
    for (const auto& n : reserve_pool().names()) {
        CHECK(has_predicate(n));
        CHECK_FALSE(pool.contains(n));
    }
}

TEST_CASE("isolated wire: orientation, corners and line ends") {
    // Horizontal wire from x 200 to 700, y 400 to 460. Clockwise traversal
    // runs along the top edge from left to right.
    const auto clip = testing::clip_of({testing::rect(200, 400, 700, 460)});
    const auto mid = labels(clip, point_on(clip, 0, {200, 460}, {700, 460}, 250));
    CHECK(mid.get("on_horizontal_edge"));
    CHECK_FALSE(mid.get("on_vertical_edge"));
    CHECK_FALSE(mid.get("near_jog"));
    CHECK_FALSE(mid.get("near_convex_corner"));
    CHECK(mid.get("at_long_path_side"));
    CHECK_FALSE(mid.get("near_ver_dir_has_polygon"));
    CHECK(mid.type_tag == "H");

    const auto corner = labels(clip, point_on(clip, 0, {200, 460}, {700, 460}, 20));
    CHECK(corner.get("near_convex_corner"));
    CHECK_FALSE(corner.get("near_concave_corner"));
    CHECK(corner.get("on_start_corner_seg"));
    CHECK_FALSE(corner.get("on_end_corner_seg"));
    CHECK(corner.type_tag == "CH");

    const auto cap = labels(clip, point_on(clip, 0, {700, 460}, {700, 400}, 30));
    CHECK(cap.get("on_vertical_edge"));
    CHECK(cap.get("at_long_path_end"));
    CHECK_FALSE(cap.get("at_short_path_end"));
    CHECK_FALSE(cap.get("at_long_path_side"));
    CHECK(cap.type_tag == "CV");
}

TEST_CASE("short wire ends") {
    const auto clip = testing::clip_of({testing::rect(400, 400, 600, 460)});
    const auto cap = labels(clip, point_on(clip, 0, {600, 460}, {600, 400}, 30));
    CHECK(cap.get("at_short_path_end"));
    CHECK_FALSE(cap.get("at_long_path_end"));
}

TEST_CASE("neighbours along the normal: near and far bands") {
    const auto near = testing::clip_of({testing::rect(200, 400, 700, 460), testing::rect(200, 520, 700, 580)});
    const auto a = labels(near, point_on(near, 0, {200, 460}, {700, 460}, 250));
    CHECK(a.get("near_ver_dir_has_polygon"));
    CHECK_FALSE(a.get("far_ver_dir_has_polygon"));
    CHECK_FALSE(a.get("near_hor_dir_has_polygon"));
    CHECK(a.get("near_horizontal_edge"));

    const auto far = testing::clip_of({testing::rect(200, 400, 700, 460), testing::rect(200, 660, 700, 720)});
    const auto b = labels(far, point_on(far, 0, {200, 460}, {700, 460}, 250));
    CHECK_FALSE(b.get("near_ver_dir_has_polygon"));
    CHECK(b.get("far_ver_dir_has_polygon"));
    // The wire's own bottom edge is 60 nm away.
    CHECK(b.get("near_horizontal_edge"));

    // Beyond the far band nothing is reported.
    const auto none = testing::clip_of({testing::rect(100, 100, 700, 160), testing::rect(100, 800, 700, 860)});
    const auto c = labels(none, point_on(none, 0, {100, 160}, {700, 160}, 300));
    CHECK_FALSE(c.get("far_ver_dir_has_polygon"));
}

TEST_CASE("neighbours along the edge direction") {
    // Point on the top edge; a block to the right at the same height.
    const auto clip = testing::clip_of({testing::rect(200, 400, 500, 460), testing::rect(560, 380, 620, 520)});
    const auto v = labels(clip, point_on(clip, 0, {200, 460}, {500, 460}, 280));
    CHECK(v.get("near_hor_dir_has_polygon"));
    // The block's corner at (560, 520) is exactly 100 nm away, in front.
    CHECK(v.get("face_convex_corner"));
    const auto w = labels(clip, point_on(clip, 0, {200, 460}, {500, 460}, 200));
    CHECK_FALSE(w.get("face_convex_corner"));
}

TEST_CASE("jogs") {
    // Stepped wire: left run y 400-460, right run y 420-480, riser at x 500.
    const auto clip = testing::clip_of({make_polygon(
        {{200, 400}, {200, 460}, {500, 460}, {500, 480}, {800, 480}, {800, 420}, {500, 420}, {500, 400}})});
    const auto on_long = labels(clip, point_on(clip, 0, {200, 460}, {500, 460}, 250));
    CHECK(on_long.get("near_jog"));
    CHECK(on_long.get("on_jog_long_edge"));
    CHECK_FALSE(on_long.get("on_jog_short_edge"));
    CHECK(on_long.get("near_concave_corner"));
    const auto riser = labels(clip, point_on(clip, 0, {500, 460}, {500, 480}, 10));
    CHECK(riser.get("on_jog_short_edge"));
    const auto far_from_jog = labels(clip, point_on(clip, 0, {200, 460}, {500, 460}, 60));
    CHECK_FALSE(far_from_jog.get("near_jog"));
    CHECK(far_from_jog.get("on_jog_long_edge"));
}

TEST_CASE("facing a jog and a concave corner across a gap") {
    // The lower wire's top edge faces the stepped wire above it.
    const auto clip = testing::clip_of({testing::rect(200, 300, 800, 360), make_polygon(
        {{200, 420}, {200, 480}, {800, 480}, {800, 440}, {500, 440}, {500, 420}})});
    const auto p = labels(clip, point_on(clip, 0, {200, 360}, {800, 360}, 300));
    CHECK(p.get("face_jog"));
    CHECK(p.get("face_concave_corner"));
    CHECK(p.get("face_convex_corner"));
}

TEST_CASE("feature vectors expose type columns and reject unknown names") {
    const auto clip = testing::clip_of({testing::rect(200, 400, 700, 460)});
    const auto v = labels(clip, point_on(clip, 0, {200, 460}, {700, 460}, 250));
    CHECK(v.get("type_H"));
    CHECK_FALSE(v.get("type_CV"));
    CHECK(v.flattened().size() == 28);
    CHECK_THROWS_AS(v.get("nope"), ValidationError);
    FeaturePool bad;
    bad.features = {{"made_up", "no predicate"}};
    CHECK_THROWS_AS(label_point(clip, place_control_points(clip, FragmentPolicy{}),
                                point_on(clip, 0, {200, 460}, {700, 460}, 250), bad),
                    ValidationError);
}

TEST_CASE("property: labels are deterministic and threshold-monotone") {
    const auto clip = testing::clip_of({testing::rect(200, 400, 700, 460), testing::rect(200, 560, 700, 620)});
    const auto layout = place_control_points(clip, FragmentPolicy{});
    FeaturePool wide = builtin_pool();
    wide.thresholds.near_nm = 200;
    for (const auto& p : layout.points) {
        const auto a = label_point(clip, layout, p, builtin_pool());
        CHECK(a == label_point(clip, layout, p, builtin_pool()));
        // Widening the near band never turns a near feature off.
        const auto b = label_point(clip, layout, p, wide);
        for (const char* f : {"near_ver_dir_has_polygon", "near_hor_dir_has_polygon", "near_horizontal_edge",
                              "near_vertical_edge", "near_convex_corner", "near_concave_corner"})
            if (a.get(f)) CHECK(b.get(f));
    }
}

TEST_CASE("movement binning") {
    CHECK(bin_movement(0, 4) == 0);
    CHECK(bin_movement(40, 4) == 4);
    CHECK(bin_movement(-12, 4) == -1);
    CHECK(bin_movement(15, 4) == 2);  // 1.5 rounds away from zero
    CHECK(bin_movement(-15, 4) == -2);
    CHECK_THROWS_AS(bin_movement(41, 4), RangeError);
    CHECK(class_to_offset(1, 4) == 10);
    CHECK(class_to_offset(-4, 4) == -40);
    CHECK_THROWS_AS(class_to_offset(5, 4), RangeError);
    for (int c = -4; c <= 4; ++c) CHECK(bin_movement(class_to_offset(c, 4), 4) == c);
}

TEST_CASE("label records serialize in the labeling example shape") {
    LabelRecord r;
    r.clip_id = "c";
    r.features.point_id = 10;
    r.features.type_tag = "CV";
    r.features.values = {{"on_horizontal_edge", true}, {"near_jog", false}};
    r.result = 4;
    const auto text = labels_to_jsonl({r});
    CHECK(text.find("\"epe_id\":10") != std::string::npos);
    CHECK(text.find("\"on_horizontal_edge\":true") != std::string::npos);
    CHECK(text.find("\"types\":\"CV\"") != std::string::npos);
    CHECK(text.find("\"result\":4") != std::string::npos);
    const auto back = labels_from_jsonl(text);
    REQUIRE(back.size() == 1);
    CHECK(back[0].features == r.features);
    CHECK(back[0].result == 4);
    CHECK_THROWS_AS(labels_from_jsonl("{\"epe_id\": 1}\n"), ValidationError);
}
