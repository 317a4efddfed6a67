#include "opcrecipe/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "opcrecipe/error.hpp"

namespace opcrecipe {

namespace {

int sign(int v) { return (v > 0) - (v < 0); }

Point direction(Point a, Point b) { return {sign(b.x - a.x), sign(b.y - a.y)}; }

bool boxes_touch(Point a0, Point a1, Point b0, Point b1) {
    // Axis-parallel segments coincide with their bounding boxes.
    return std::max(std::min(a0.x, a1.x), std::min(b0.x, b1.x)) <=
               std::min(std::max(a0.x, a1.x), std::max(b0.x, b1.x)) &&
           std::max(std::min(a0.y, a1.y), std::min(b0.y, b1.y)) <=
               std::min(std::max(a0.y, a1.y), std::max(b0.y, b1.y));
}

std::string describe(Point p) {
    return "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")";
}

}  // namespace

const char* to_string(Orientation o) { return o == Orientation::Horizontal ? "H" : "V"; }

std::int64_t signed_area2(const std::vector<Point>& ring) {
    std::int64_t acc = 0;
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = ring[i];
        const Point& b = ring[(i + 1) % n];
        acc += static_cast<std::int64_t>(a.x) * b.y - static_cast<std::int64_t>(b.x) * a.y;
    }
    return acc;
}

std::int64_t area(const Polygon& poly) { return std::llabs(signed_area2(poly.vertices)) / 2; }

std::int64_t perimeter(const Polygon& poly) {
    std::int64_t acc = 0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point d = poly.vertex(i + 1) - poly.vertex(i);
        acc += std::abs(d.x) + std::abs(d.y);
    }
    return acc;
}

BBox bbox(const Polygon& poly) {
    BBox b{poly.vertices.at(0).x, poly.vertices.at(0).y, poly.vertices.at(0).x,
           poly.vertices.at(0).y};
    for (const Point& p : poly.vertices) {
        b.xmin = std::min(b.xmin, p.x);
        b.ymin = std::min(b.ymin, p.y);
        b.xmax = std::max(b.xmax, p.x);
        b.ymax = std::max(b.ymax, p.y);
    }
    return b;
}

bool is_simple(const std::vector<Point>& ring) {
    const std::size_t n = ring.size();
    if (n < 4) return false;
    for (std::size_t i = 0; i < n; ++i) {
        const Point a0 = ring[i], a1 = ring[(i + 1) % n];
        for (std::size_t j = i + 1; j < n; ++j) {
            const Point b0 = ring[j], b1 = ring[(j + 1) % n];
            const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            if (adjacent) {
                // Perpendicular neighbours meet only at the shared vertex;
                // parallel neighbours would overlap (a spike).
                if (direction(a0, a1).x * direction(b0, b1).x +
                        direction(a0, a1).y * direction(b0, b1).y !=
                    0)
                    return false;
                continue;
            }
            if (boxes_touch(a0, a1, b0, b1)) return false;
        }
    }
    return true;
}

Polygon make_polygon(std::vector<Point> ring) {
    // Drop consecutive duplicates, including a repeated closing vertex.
    std::vector<Point> pts;
    for (const Point& p : ring)
        if (pts.empty() || !(pts.back() == p)) pts.push_back(p);
    while (pts.size() > 1 && pts.front() == pts.back()) pts.pop_back();

    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Point a = pts[i], b = pts[(i + 1) % pts.size()];
        if (a.x != b.x && a.y != b.y)
            throw GeometryError("non-rectilinear edge " + describe(a) + " -> " + describe(b));
    }

    // Merge collinear runs; a reversal is a zero-width spike.
    bool changed = true;
    while (changed && pts.size() >= 3) {
        changed = false;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const std::size_t n = pts.size();
            const Point prev = pts[(i + n - 1) % n], cur = pts[i], next = pts[(i + 1) % n];
            const Point d0 = direction(prev, cur), d1 = direction(cur, next);
            if (d0.x * d1.y - d0.y * d1.x != 0) continue;
            if (d0.x * d1.x + d0.y * d1.y < 0)
                throw GeometryError("degenerate spike at " + describe(cur));
            pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(i));
            changed = true;
            break;
        }
    }
    if (pts.size() < 4) throw GeometryError("polygon has fewer than 4 distinct corners");

    if (signed_area2(pts) > 0) std::reverse(pts.begin(), pts.end());
    const auto first = std::min_element(pts.begin(), pts.end(), [](Point a, Point b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    std::rotate(pts.begin(), first, pts.end());

    if (!is_simple(pts)) throw GeometryError("self-intersecting polygon starting at " +
                                             describe(pts.front()));
    return Polygon{std::move(pts)};
}

Edge polygon_edge(const Polygon& poly, std::size_t i) {
    Edge e;
    e.p0 = poly.vertex(i);
    e.p1 = poly.vertex(i + 1);
    e.tangent = direction(e.p0, e.p1);
    e.orientation = e.tangent.y == 0 ? Orientation::Horizontal : Orientation::Vertical;
    // Clockwise traversal keeps the interior on the right.
    e.outward_normal = {-e.tangent.y, e.tangent.x};
    e.length_nm = std::abs(e.p1.x - e.p0.x) + std::abs(e.p1.y - e.p0.y);
    return e;
}

std::vector<Edge> polygon_edges(const Polygon& poly) {
    std::vector<Edge> out;
    out.reserve(poly.size());
    for (std::size_t i = 0; i < poly.size(); ++i) out.push_back(polygon_edge(poly, i));
    return out;
}

CornerKind corner_kind(const Polygon& poly, std::size_t i) {
    const std::size_t n = poly.size();
    const Point d0 = direction(poly.vertex(i + n - 1), poly.vertex(i));
    const Point d1 = direction(poly.vertex(i), poly.vertex(i + 1));
    return (d0.x * d1.y - d0.y * d1.x) < 0 ? CornerKind::Convex : CornerKind::Concave;
}

std::vector<CornerInfo> classify_corners(const Polygon& poly) {
    std::vector<CornerInfo> out;
    out.reserve(poly.size());
    for (std::size_t i = 0; i < poly.size(); ++i)
        out.push_back({static_cast<int>(i), corner_kind(poly, i)});
    return out;
}

bool is_jog_edge(const Polygon& poly, std::size_t edge, int max_jog_nm) {
    const Edge e = polygon_edge(poly, edge);
    return e.length_nm <= max_jog_nm && corner_kind(poly, edge) != corner_kind(poly, edge + 1);
}

std::vector<int> detect_jogs(const Polygon& poly, int max_jog_nm) {
    std::vector<int> out;
    for (std::size_t i = 0; i < poly.size(); ++i)
        if (is_jog_edge(poly, i, max_jog_nm)) out.push_back(static_cast<int>(i));
    return out;
}

bool contains(const Polygon& poly, double x, double y) {
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point a = poly.vertices[i], b = poly.vertices[(i + 1) % n];
        if (a.x != b.x) continue;
        const int lo = std::min(a.y, b.y), hi = std::max(a.y, b.y);
        if (y >= lo && y < hi && a.x > x) inside = !inside;
    }
    return inside;
}

double distance_point_segment(PointF p, Point a, Point b) {
    const double cx = std::clamp(p.x, double(std::min(a.x, b.x)), double(std::max(a.x, b.x)));
    const double cy = std::clamp(p.y, double(std::min(a.y, b.y)), double(std::max(a.y, b.y)));
    return std::hypot(p.x - cx, p.y - cy);
}

double distance_segments(Point a0, Point a1, Point b0, Point b1) {
    const int dx = std::max({0, std::min(b0.x, b1.x) - std::max(a0.x, a1.x),
                             std::min(a0.x, a1.x) - std::max(b0.x, b1.x)});
    const int dy = std::max({0, std::min(b0.y, b1.y) - std::max(a0.y, a1.y),
                             std::min(a0.y, a1.y) - std::max(b0.y, b1.y)});
    return std::hypot(double(dx), double(dy));
}

bool interiors_overlap(const Polygon& a, const Polygon& b) {
    const BBox ba = bbox(a), bb = bbox(b);
    const int xmin = std::max(ba.xmin, bb.xmin), xmax = std::min(ba.xmax, bb.xmax);
    const int ymin = std::max(ba.ymin, bb.ymin), ymax = std::min(ba.ymax, bb.ymax);
    if (xmin >= xmax || ymin >= ymax) return false;
    // Any interior overlap of two rectilinear polygons covers at least one
    // cell of the grid spanned by their combined vertex coordinates.
    std::set<int> xs{xmin, xmax}, ys{ymin, ymax};
    for (const Polygon* p : {&a, &b})
        for (const Point& v : p->vertices) {
            if (v.x > xmin && v.x < xmax) xs.insert(v.x);
            if (v.y > ymin && v.y < ymax) ys.insert(v.y);
        }
    for (auto xi = xs.begin(); std::next(xi) != xs.end(); ++xi)
        for (auto yi = ys.begin(); std::next(yi) != ys.end(); ++yi) {
            const double cx = 0.5 * (*xi + *std::next(xi));
            const double cy = 0.5 * (*yi + *std::next(yi));
            if (contains(a, cx, cy) && contains(b, cx, cy)) return true;
        }
    return false;
}

double polygon_distance(const Polygon& a, const Polygon& b) {
    if (interiors_overlap(a, b)) return 0.0;
    double best = INFINITY;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            best = std::min(best, distance_segments(a.vertex(i), a.vertex(i + 1), b.vertex(j),
                                                    b.vertex(j + 1)));
    return best;
}

void validate_clip(const LayoutClip& clip) {
    if (clip.width_nm <= 0 || clip.height_nm <= 0)
        throw GeometryError("clip '" + clip.id + "' has non-positive extent");
    for (std::size_t k = 0; k < clip.polygons.size(); ++k) {
        const Polygon& poly = clip.polygons[k];
        const std::string where = "polygon " + std::to_string(k);
        for (const Point& p : poly.vertices)
            if (p.x < 0 || p.y < 0 || p.x > clip.width_nm || p.y > clip.height_nm)
                throw GeometryError(where + ": vertex " + describe(p) + " outside clip");
        if (!(make_polygon(poly.vertices) == poly))
            throw GeometryError(where + " is not in normalized clockwise form");
    }
    for (std::size_t i = 0; i < clip.polygons.size(); ++i)
        for (std::size_t j = i + 1; j < clip.polygons.size(); ++j)
            if (interiors_overlap(clip.polygons[i], clip.polygons[j]))
                throw GeometryError("polygons " + std::to_string(i) + " and " +
                                    std::to_string(j) + " overlap");
}

}  // namespace opcrecipe
