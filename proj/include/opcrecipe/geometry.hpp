#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace opcrecipe {

// Layout coordinates are integer nanometres, y pointing up.
struct Point {
    int x = 0;
    int y = 0;

    friend bool operator==(const Point&, const Point&) = default;
    friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
    friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
    friend Point operator*(Point a, int k) { return {a.x * k, a.y * k}; }
};

struct PointF {
    double x = 0.0;
    double y = 0.0;
};

enum class Orientation { Horizontal, Vertical };

const char* to_string(Orientation o);

// A closed rectilinear polygon stored as its vertex ring (the closing vertex
// is implicit). Instances built through make_polygon() are clockwise, simple,
// and free of duplicate or collinear vertices.
struct Polygon {
    std::vector<Point> vertices;

    std::size_t size() const { return vertices.size(); }
    const Point& vertex(std::size_t i) const { return vertices[i % vertices.size()]; }

    friend bool operator==(const Polygon&, const Polygon&) = default;
};

struct Edge {
    Point p0;
    Point p1;
    Orientation orientation = Orientation::Horizontal;
    Point tangent;         // unit axis vector from p0 to p1
    Point outward_normal;  // unit axis vector pointing away from the interior
    int length_nm = 0;

    Point at(int arclength) const { return p0 + tangent * arclength; }
    PointF at(double arclength) const {
        return {p0.x + tangent.x * arclength, p0.y + tangent.y * arclength};
    }
};

enum class CornerKind { Convex, Concave };

struct CornerInfo {
    int vertex = 0;
    CornerKind kind = CornerKind::Convex;
};

struct BBox {
    int xmin = 0, ymin = 0, xmax = 0, ymax = 0;
};

struct LayoutClip {
    std::string id;
    int width_nm = 0;
    int height_nm = 0;
    std::vector<Polygon> polygons;
};

/// Twice the signed area; negative for clockwise rings.
std::int64_t signed_area2(const std::vector<Point>& ring);
std::int64_t area(const Polygon& poly);
std::int64_t perimeter(const Polygon& poly);
BBox bbox(const Polygon& poly);

/// Normalizes a raw ring into a valid polygon: drops a repeated closing
/// vertex, duplicates and collinear vertices, and reorders to clockwise.
/// Throws GeometryError for non-rectilinear or self-intersecting input.
Polygon make_polygon(std::vector<Point> ring);

/// True when no two non-adjacent edges touch and adjacent edges only share
/// their common vertex.
bool is_simple(const std::vector<Point>& ring);

/// Edge i runs from vertex i to vertex i+1.
Edge polygon_edge(const Polygon& poly, std::size_t i);
std::vector<Edge> polygon_edges(const Polygon& poly);

/// Corner kind at vertex i (between edge i-1 and edge i).
CornerKind corner_kind(const Polygon& poly, std::size_t i);
std::vector<CornerInfo> classify_corners(const Polygon& poly);

/// Edges no longer than `max_jog_nm` whose two end corners differ in kind,
/// i.e. the short riser of a step between two parallel edges.
std::vector<int> detect_jogs(const Polygon& poly, int max_jog_nm = 40);
bool is_jog_edge(const Polygon& poly, std::size_t edge, int max_jog_nm = 40);

/// Half-open even-odd containment test (left/bottom boundaries inside).
bool contains(const Polygon& poly, double x, double y);

double distance_point_segment(PointF p, Point a, Point b);
/// Euclidean distance between two axis-parallel segments (0 when they touch).
double distance_segments(Point a0, Point a1, Point b0, Point b1);
/// Minimum boundary-to-boundary distance; 0 if the polygons touch or overlap.
double polygon_distance(const Polygon& a, const Polygon& b);

/// True when the interiors of the two polygons intersect.
bool interiors_overlap(const Polygon& a, const Polygon& b);

/// Throws GeometryError describing the first violated clip invariant.
void validate_clip(const LayoutClip& clip);

}  // namespace opcrecipe
