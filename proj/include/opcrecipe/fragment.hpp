#pragma once

#include <span>
#include <vector>

#include "opcrecipe/geometry.hpp"

namespace opcrecipe {

/// Largest tangential displacement a control point may accumulate.
inline constexpr int kMaxOffsetNm = 40;

struct FragmentPolicy {
    int corner_segment_nm = 30;
    int max_fragment_nm = 60;
    int min_fragment_nm = 10;

    void validate() const;
};

enum class PointKind { Epe, Frag };

const char* to_string(PointKind k);
PointKind point_kind_from_string(const std::string& s);

// An EPE measurement point (one per fragment, at its midpoint) or a fragment
// point (one per interior fragment boundary). `fragment` is the fragment index
// for EPE points and the boundary index (>= 1) for FRAG points. The offset is
// signed along the clockwise traversal direction of the host edge.
struct ControlPoint {
    int id = 0;
    PointKind kind = PointKind::Epe;
    int polygon = 0;
    int edge = 0;
    int fragment = 0;
    int arclength_nm = 0;
    int offset_nm = 0;
    bool clamped = false;

    int position_nm() const { return arclength_nm + offset_nm; }
    friend bool operator==(const ControlPoint&, const ControlPoint&) = default;
};

struct FragmentedEdge {
    Edge edge;
    std::vector<int> boundaries;  // arclengths, front() == 0, back() == length
    bool degenerate = false;      // shorter than two minimum fragments
    std::vector<ControlPoint> points;

    int fragment_count() const { return static_cast<int>(boundaries.size()) - 1; }
};

/// Fragment lengths for one edge: corner segments at both ends when room
/// permits, interior split into near-equal pieces of at most max_fragment_nm.
std::vector<int> split_edge(int length_nm, const FragmentPolicy& policy,
                            bool* degenerate = nullptr);

/// Fragments every edge of `poly` and places its control points. Point ids
/// start at `first_id` and follow clockwise traversal order.
std::vector<FragmentedEdge> fragment(const Polygon& poly, const FragmentPolicy& policy,
                                     int polygon_index = 0, int first_id = 0);

// Fragmentation and control points for a whole clip.
struct ControlLayout {
    FragmentPolicy policy;
    std::vector<std::vector<FragmentedEdge>> polygons;
    std::vector<ControlPoint> points;  // flattened, ids == indices

    const FragmentedEdge& host(const ControlPoint& p) const {
        return polygons.at(p.polygon).at(p.edge);
    }
};

ControlLayout place_control_points(const LayoutClip& clip, const FragmentPolicy& policy);

/// Shifts a point along its host edge. Throws RangeError when the accumulated
/// offset would exceed kMaxOffsetNm; otherwise clamps the resulting position
/// into [0, edge_length] and records the clamp.
ControlPoint move_point_tangential(const ControlPoint& pt, int delta_nm, int edge_length_nm);

/// Fragment boundaries after FRAG offsets. Boundaries stay strictly
/// increasing; any boundary pushed past a neighbour is held one nm away.
std::vector<std::vector<std::vector<int>>> effective_boundaries(const ControlLayout& layout);

PointF point_location(const ControlLayout& layout, const ControlPoint& pt);

struct MoveResult {
    Polygon polygon;
    std::vector<int> applied;  // per-fragment moves actually used
    bool reduced = false;      // some move was cut back to keep the ring simple
};

/// Translates each fragment along its edge's outward normal by its move
/// (fragments enumerated edge by edge, in boundary order) and reconnects
/// neighbours with jogs. Moves that would break the polygon are reduced to
/// the largest magnitude that keeps it valid.
MoveResult apply_fragment_normal_moves(const Polygon& poly,
                                       std::span<const std::vector<int>> boundaries,
                                       std::span<const int> moves);

}  // namespace opcrecipe
