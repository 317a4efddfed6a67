#include "opcrecipe/features.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <json.hpp>

#include "opcrecipe/error.hpp"

namespace opcrecipe {

void FeatureThresholds::validate() const {
    if (near_nm <= 0 || far_nm <= near_nm) throw ConfigError("feature thresholds need 0 < near < far");
    if (jog_nm <= 0 || long_path_nm <= 0 || corner_seg_nm < 0 || ray_start_nm < 0)
        throw ConfigError("feature thresholds must be positive");
}

bool FeaturePool::contains(const std::string& name) const {
    return std::any_of(features.begin(), features.end(),
                       [&](const FeatureDef& f) { return f.name == name; });
}

std::vector<std::string> FeaturePool::names() const {
    std::vector<std::string> out;
    for (const FeatureDef& f : features) out.push_back(f.name);
    return out;
}

FeaturePool builtin_pool() {
    FeaturePool p;
    p.features = {
        {"near_jog", "in the near distance, there is a jog on that edge where it is located"},
        {"face_jog", "there is a jog facing the point"},
        {"on_jog_long_edge", "it is on the jog, but on the long edge of the jog"},
        {"on_jog_short_edge", "it is on the jog, but on the short edge of the jog"},
        {"on_start_corner_seg", "it is on the corner start segment by clockwise"},
        {"on_end_corner_seg", "it is on the corner end segment by clockwise"},
        {"near_hor_dir_has_polygon",
         "in the near horizontal direction, there are polygons facing on that edge where it is "
         "located, but not connected on edge"},
        {"far_hor_dir_has_polygon",
         "in the far horizontal direction, there are polygons facing on that edge where it is "
         "located, but not connected on edge"},
        {"near_ver_dir_has_polygon",
         "in the near vertical direction, there are polygons facing on that edge where it is "
         "located, but not connected on edge"},
        {"far_ver_dir_has_polygon",
         "in the far vertical direction, there are polygons facing on that edge where it is "
         "located, but not connected on edge"},
        {"on_horizontal_edge", "the point is located on a horizontal edge"},
        {"on_vertical_edge", "the point is located on a vertical edge"},
        {"near_convex_corner", "there is a convex corner near the point, connected on edge"},
        {"near_concave_corner", "there is a concave corner near the point, connected on edge"},
        {"face_convex_corner", "there is a convex corner facing the point, not connected on edge"},
        {"face_concave_corner", "there is a concave corner facing the point, not connected on edge"},
        {"near_horizontal_edge", "there is a horizontal edge near the point"},
        {"near_vertical_edge", "there is a vertical edge near the point"},
        {"far_horizontal_edge", "there is a horizontal edge far from the point"},
        {"far_vertical_edge", "there is a vertical edge far from the point"},
        {"at_long_path_end", "the point is located at the end of a long path"},
        {"at_short_path_end", "the point is located at the end of a short path"},
        {"at_long_path_side", "the point is located at the side of a long path"},
        {"at_short_path_side", "the point is located at the side of a short path"},
    };
    return p;
}

FeaturePool reserve_pool() {
    FeaturePool p;
    p.features = {
        {"start_corner_convex", "the corner where the edge starts, by clockwise, is convex"},
        {"end_corner_convex", "the corner where the edge ends, by clockwise, is convex"},
        {"in_first_half", "the point lies in the first half of its edge by clockwise"},
        {"near_start_vertex", "the point is within half a corner segment of the edge start"},
        {"near_end_vertex", "the point is within half a corner segment of the edge end"},
        {"on_short_edge", "the edge holding the point is shorter than the near distance"},
        {"on_long_edge", "the edge holding the point is at least a long path"},
        {"near_line_end", "a line end is connected to the edge near the point"},
    };
    return p;
}

std::vector<std::string> type_feature_names() {
    std::vector<std::string> out;
    for (const char* t : kTypeTags) out.push_back(std::string("type_") + t);
    return out;
}

bool FeatureVector::get(const std::string& name) const {
    if (name.rfind("type_", 0) == 0) return type_tag == name.substr(5);
    for (const auto& [n, v] : values)
        if (n == name) return v;
    throw ValidationError("feature '" + name + "' is not in this vector");
}

std::vector<std::pair<std::string, bool>> FeatureVector::flattened() const {
    auto out = values;
    for (const char* t : kTypeTags) out.emplace_back(std::string("type_") + t, type_tag == t);
    return out;
}

std::string type_tag(const ControlLayout& layout, const ControlPoint& point,
                     const FeatureThresholds& t) {
    const Edge& e = layout.host(point).edge;
    const int s = std::clamp(point.position_nm(), 0, e.length_nm);
    const bool corner = s <= t.corner_seg_nm || e.length_nm - s <= t.corner_seg_nm;
    const bool vertical = e.orientation == Orientation::Vertical;
    if (corner) return vertical ? "CV" : "CH";
    return vertical ? "V" : "H";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Context {
    const LayoutClip& clip;
    const FeatureThresholds& t;
    const Polygon& poly;
    int polygon;
    int edge;
    Edge e;
    double s;   // arclength of the point
    PointF p;   // position
};

bool is_cap(const Polygon& poly, std::size_t edge, const FeatureThresholds& t) {
    return polygon_edge(poly, edge).length_nm <= t.near_nm &&
           corner_kind(poly, edge) == CornerKind::Convex &&
           corner_kind(poly, edge + 1) == CornerKind::Convex;
}

// Edges of the host polygon connected to the host edge (itself and its two
// neighbours) are excluded from proximity tests.
bool connected(const Context& c, int polygon, std::size_t edge) {
    if (polygon != c.polygon) return false;
    const std::size_t n = c.poly.size();
    const std::size_t h = static_cast<std::size_t>(c.edge);
    return edge == h || edge == (h + 1) % n || edge == (h + n - 1) % n;
}

// Distance along an axis ray from `o` in direction `d` to the first edge hit.
double ray_hit(const Context& c, PointF o, Point d) {
    double best = kInf;
    for (std::size_t k = 0; k < c.clip.polygons.size(); ++k) {
        const Polygon& poly = c.clip.polygons[k];
        for (std::size_t i = 0; i < poly.size(); ++i) {
            if (connected(c, int(k), i)) continue;
            const Point a = poly.vertex(i), b = poly.vertex(i + 1);
            if (d.x != 0) {
                if (a.x == b.x) {  // crossing a vertical edge
                    const double t = (a.x - o.x) * d.x;
                    if (t > 0 && o.y >= std::min(a.y, b.y) && o.y <= std::max(a.y, b.y))
                        best = std::min(best, t);
                } else if (a.y == o.y) {  // running along a horizontal edge
                    const double t = std::min((a.x - o.x) * d.x, (b.x - o.x) * d.x);
                    const double t2 = std::max((a.x - o.x) * d.x, (b.x - o.x) * d.x);
                    if (t2 > 0) best = std::min(best, std::max(t, 0.0));
                }
            } else {
                if (a.y == b.y) {
                    const double t = (a.y - o.y) * d.y;
                    if (t > 0 && o.x >= std::min(a.x, b.x) && o.x <= std::max(a.x, b.x))
                        best = std::min(best, t);
                } else if (a.x == o.x) {
                    const double t = std::min((a.y - o.y) * d.y, (b.y - o.y) * d.y);
                    const double t2 = std::max((a.y - o.y) * d.y, (b.y - o.y) * d.y);
                    if (t2 > 0) best = std::min(best, std::max(t, 0.0));
                }
            }
        }
    }
    return best;
}

// Nearest polygon along the horizontal (or vertical) direction: outward when
// the normal lies on that axis, both ways along the edge otherwise.
double direction_distance(const Context& c, bool horizontal) {
    const PointF o{c.p.x + c.e.outward_normal.x * c.t.ray_start_nm,
                   c.p.y + c.e.outward_normal.y * c.t.ray_start_nm};
    const bool normal_on_axis = horizontal ? c.e.outward_normal.x != 0 : c.e.outward_normal.y != 0;
    if (normal_on_axis) return ray_hit(c, o, c.e.outward_normal);
    const Point a = horizontal ? Point{1, 0} : Point{0, 1};
    return std::min(ray_hit(c, o, a), ray_hit(c, o, a * -1));
}

bool in_front(const Context& c, PointF q) {
    return (q.x - c.p.x) * c.e.outward_normal.x + (q.y - c.p.y) * c.e.outward_normal.y > 0;
}

PointF closest_on_segment(PointF p, Point a, Point b) {
    return {std::clamp(p.x, double(std::min(a.x, b.x)), double(std::max(a.x, b.x))),
            std::clamp(p.y, double(std::min(a.y, b.y)), double(std::max(a.y, b.y)))};
}

double nearest_edge(const Context& c, Orientation o) {
    double best = kInf;
    for (std::size_t k = 0; k < c.clip.polygons.size(); ++k) {
        const Polygon& poly = c.clip.polygons[k];
        for (std::size_t i = 0; i < poly.size(); ++i) {
            if (int(k) == c.polygon && int(i) == c.edge) continue;
            const Edge e = polygon_edge(poly, i);
            if (e.orientation != o) continue;
            best = std::min(best, distance_point_segment(c.p, e.p0, e.p1));
        }
    }
    return best;
}

bool face_jog(const Context& c) {
    for (std::size_t k = 0; k < c.clip.polygons.size(); ++k) {
        const Polygon& poly = c.clip.polygons[k];
        for (std::size_t i = 0; i < poly.size(); ++i) {
            if (connected(c, int(k), i) || !is_jog_edge(poly, i, c.t.jog_nm)) continue;
            const Point a = poly.vertex(i), b = poly.vertex(i + 1);
            const PointF q = closest_on_segment(c.p, a, b);
            if (in_front(c, q) && std::hypot(q.x - c.p.x, q.y - c.p.y) <= c.t.near_nm) return true;
        }
    }
    return false;
}

bool face_corner(const Context& c, CornerKind kind) {
    const std::size_t n = c.poly.size();
    for (std::size_t k = 0; k < c.clip.polygons.size(); ++k) {
        const Polygon& poly = c.clip.polygons[k];
        for (std::size_t i = 0; i < poly.size(); ++i) {
            if (int(k) == c.polygon &&
                (i == std::size_t(c.edge) || i == (std::size_t(c.edge) + 1) % n))
                continue;
            if (corner_kind(poly, i) != kind) continue;
            const Point v = poly.vertex(i);
            const PointF q{double(v.x), double(v.y)};
            if (in_front(c, q) && std::hypot(q.x - c.p.x, q.y - c.p.y) <= c.t.near_nm) return true;
        }
    }
    return false;
}

bool near_corner(const Context& c, CornerKind kind) {
    return (corner_kind(c.poly, c.edge) == kind && c.s <= c.t.near_nm) ||
           (corner_kind(c.poly, c.edge + 1) == kind && c.e.length_nm - c.s <= c.t.near_nm);
}

bool adjacent_jog(const Context& c, bool within_near) {
    const std::size_t n = c.poly.size();
    const std::size_t prev = (std::size_t(c.edge) + n - 1) % n, next = (std::size_t(c.edge) + 1) % n;
    const bool jp = is_jog_edge(c.poly, prev, c.t.jog_nm);
    const bool jn = is_jog_edge(c.poly, next, c.t.jog_nm);
    if (!within_near) return jp || jn;
    return (jp && c.s <= c.t.near_nm) || (jn && c.e.length_nm - c.s <= c.t.near_nm);
}

double path_length(const Context& c) {
    const std::size_t n = c.poly.size();
    return std::max(polygon_edge(c.poly, (std::size_t(c.edge) + n - 1) % n).length_nm,
                    polygon_edge(c.poly, (std::size_t(c.edge) + 1) % n).length_nm);
}

using Predicate = std::function<bool(const Context&)>;

const std::map<std::string, Predicate>& predicates() {
    static const std::map<std::string, Predicate> table = [] {
        std::map<std::string, Predicate> m;
        m["near_jog"] = [](const Context& c) { return adjacent_jog(c, true); };
        m["face_jog"] = face_jog;
        m["on_jog_long_edge"] = [](const Context& c) {
            return !is_jog_edge(c.poly, c.edge, c.t.jog_nm) && adjacent_jog(c, false);
        };
        m["on_jog_short_edge"] = [](const Context& c) {
            return is_jog_edge(c.poly, c.edge, c.t.jog_nm);
        };
        m["on_start_corner_seg"] = [](const Context& c) { return c.s <= c.t.corner_seg_nm; };
        m["on_end_corner_seg"] = [](const Context& c) {
            return c.e.length_nm - c.s <= c.t.corner_seg_nm;
        };
        m["near_hor_dir_has_polygon"] = [](const Context& c) {
            return direction_distance(c, true) <= c.t.near_nm;
        };
        m["far_hor_dir_has_polygon"] = [](const Context& c) {
            const double d = direction_distance(c, true);
            return d > c.t.near_nm && d <= c.t.far_nm;
        };
        m["near_ver_dir_has_polygon"] = [](const Context& c) {
            return direction_distance(c, false) <= c.t.near_nm;
        };
        m["far_ver_dir_has_polygon"] = [](const Context& c) {
            const double d = direction_distance(c, false);
            return d > c.t.near_nm && d <= c.t.far_nm;
        };
        m["on_horizontal_edge"] = [](const Context& c) {
            return c.e.orientation == Orientation::Horizontal;
        };
        m["on_vertical_edge"] = [](const Context& c) {
            return c.e.orientation == Orientation::Vertical;
        };
        m["near_convex_corner"] = [](const Context& c) { return near_corner(c, CornerKind::Convex); };
        m["near_concave_corner"] = [](const Context& c) { return near_corner(c, CornerKind::Concave); };
        m["face_convex_corner"] = [](const Context& c) { return face_corner(c, CornerKind::Convex); };
        m["face_concave_corner"] = [](const Context& c) { return face_corner(c, CornerKind::Concave); };
        m["near_horizontal_edge"] = [](const Context& c) {
            return nearest_edge(c, Orientation::Horizontal) <= c.t.near_nm;
        };
        m["near_vertical_edge"] = [](const Context& c) {
            return nearest_edge(c, Orientation::Vertical) <= c.t.near_nm;
        };
        m["far_horizontal_edge"] = [](const Context& c) {
            const double d = nearest_edge(c, Orientation::Horizontal);
            return d > c.t.near_nm && d <= c.t.far_nm;
        };
        m["far_vertical_edge"] = [](const Context& c) {
            const double d = nearest_edge(c, Orientation::Vertical);
            return d > c.t.near_nm && d <= c.t.far_nm;
        };
        m["at_long_path_end"] = [](const Context& c) {
            return is_cap(c.poly, c.edge, c.t) && path_length(c) >= c.t.long_path_nm;
        };
        m["at_short_path_end"] = [](const Context& c) {
            return is_cap(c.poly, c.edge, c.t) && path_length(c) < c.t.long_path_nm;
        };
        m["at_long_path_side"] = [](const Context& c) {
            return !is_cap(c.poly, c.edge, c.t) && c.e.length_nm >= c.t.long_path_nm;
        };
        m["at_short_path_side"] = [](const Context& c) {
            return !is_cap(c.poly, c.edge, c.t) && c.e.length_nm < c.t.long_path_nm;
        };
        m["start_corner_convex"] = [](const Context& c) {
            return corner_kind(c.poly, c.edge) == CornerKind::Convex;
        };
        m["end_corner_convex"] = [](const Context& c) {
            return corner_kind(c.poly, c.edge + 1) == CornerKind::Convex;
        };
        m["in_first_half"] = [](const Context& c) { return 2 * c.s < c.e.length_nm; };
        m["near_start_vertex"] = [](const Context& c) { return 2 * c.s <= c.t.corner_seg_nm; };
        m["near_end_vertex"] = [](const Context& c) {
            return 2 * (c.e.length_nm - c.s) <= c.t.corner_seg_nm;
        };
        m["on_short_edge"] = [](const Context& c) { return c.e.length_nm < c.t.near_nm; };
        m["on_long_edge"] = [](const Context& c) { return c.e.length_nm >= c.t.long_path_nm; };
        m["near_line_end"] = [](const Context& c) {
            const std::size_t n = c.poly.size();
            return (is_cap(c.poly, (std::size_t(c.edge) + n - 1) % n, c.t) && c.s <= c.t.near_nm) ||
                   (is_cap(c.poly, (std::size_t(c.edge) + 1) % n, c.t) &&
                    c.e.length_nm - c.s <= c.t.near_nm);
        };
        return m;
    }();
    return table;
}

}  // namespace

bool has_predicate(const std::string& name) { return predicates().count(name) > 0; }

FeatureVector label_point(const LayoutClip& clip, const ControlLayout& layout,
                          const ControlPoint& point, const FeaturePool& pool) {
    pool.thresholds.validate();
    const FragmentedEdge& fe = layout.host(point);
    const double s = std::clamp(point.position_nm(), 0, fe.edge.length_nm);
    const Context ctx{clip, pool.thresholds, clip.polygons.at(point.polygon), point.polygon,
                      point.edge, fe.edge, s, fe.edge.at(s)};
    FeatureVector fv;
    fv.point_id = point.id;
    fv.kind = point.kind;
    fv.type_tag = type_tag(layout, point, pool.thresholds);
    for (const FeatureDef& f : pool.features) {
        const auto it = predicates().find(f.name);
        if (it == predicates().end())
            throw ValidationError("feature '" + f.name + "' has no geometric predicate");
        fv.values.emplace_back(f.name, it->second(ctx));
    }
    return fv;
}

int bin_movement(double delta_nm, int C) {
    if (C < 1 || 40 % C != 0) throw ConfigError("C must be a positive divisor of 40");
    if (!(std::abs(delta_nm) <= 40.0))
        throw RangeError("movement of " + std::to_string(delta_nm) + " nm exceeds 40 nm");
    const double step = 40.0 / C;
    const double q = delta_nm / step;
    const int cls = static_cast<int>(std::copysign(std::floor(std::abs(q) + 0.5), q));
    return std::clamp(cls, -C, C);
}

int class_to_offset(int cls, int C) {
    if (C < 1 || 40 % C != 0) throw ConfigError("C must be a positive divisor of 40");
    if (cls < -C || cls > C) throw RangeError("class " + std::to_string(cls) + " outside [-C, C]");
    return cls * (40 / C);
}

std::string labels_to_jsonl(const std::vector<LabelRecord>& records) {
    std::string out;
    for (const LabelRecord& r : records) {
        nlohmann::ordered_json j;
        j["clip_id"] = r.clip_id;
        j["epe_id"] = r.features.point_id;
        j["kind"] = to_string(r.features.kind);
        nlohmann::ordered_json f;
        f["types"] = r.features.type_tag;
        for (const auto& [n, v] : r.features.values) f[n] = v;
        j["features"] = f;
        j["result"] = r.result;
        j["provenance"] = r.features.provenance;
        if (!r.features.fallback.empty()) j["fallback"] = r.features.fallback;
        out += j.dump() + "\n";
    }
    return out;
}

std::vector<LabelRecord> labels_from_jsonl(const std::string& text) {
    std::vector<LabelRecord> out;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() : nl + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = nlohmann::ordered_json::parse(line);
            LabelRecord r;
            r.clip_id = j.at("clip_id").get<std::string>();
            r.features.point_id = j.at("epe_id").get<int>();
            r.features.kind = point_kind_from_string(j.at("kind").get<std::string>());
            for (const auto& [k, v] : j.at("features").items()) {
                if (k == "types")
                    r.features.type_tag = v.get<std::string>();
                else
                    r.features.values.emplace_back(k, v.get<bool>());
            }
            if (j.contains("provenance"))
                r.features.provenance = j.at("provenance").get<std::string>();
            if (j.contains("fallback"))
                r.features.fallback = j.at("fallback").get<std::vector<std::string>>();
            r.result = j.at("result").get<int>();
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, std::string("bad label record: ") + e.what());
        }
    }
    return out;
}

}  // namespace opcrecipe
