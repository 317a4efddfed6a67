#include "opcrecipe/fragment.hpp"

#include <algorithm>
#include <cstdlib>
#include <optional>

#include "opcrecipe/error.hpp"

namespace opcrecipe {

void FragmentPolicy::validate() const {
    if (min_fragment_nm < 1) throw ConfigError("min_fragment_nm must be >= 1");
    if (min_fragment_nm > max_fragment_nm)
        throw ConfigError("min_fragment_nm must not exceed max_fragment_nm");
    if (corner_segment_nm < 0 || corner_segment_nm > max_fragment_nm)
        throw ConfigError("corner_segment_nm must lie in [0, max_fragment_nm]");
}

const char* to_string(PointKind k) { return k == PointKind::Epe ? "EPE" : "FRAG"; }

PointKind point_kind_from_string(const std::string& s) {
    if (s == "EPE") return PointKind::Epe;
    if (s == "FRAG") return PointKind::Frag;
    throw ValidationError("unknown point kind '" + s + "'");
}

std::vector<int> split_edge(int length_nm, const FragmentPolicy& policy, bool* degenerate) {
    if (degenerate) *degenerate = false;
    if (length_nm < 2 * policy.min_fragment_nm) {
        if (degenerate) *degenerate = true;
        return {length_nm};
    }
    const int corner = policy.corner_segment_nm;
    const int interior = length_nm - 2 * corner;
    auto even_split = [&](int span) {
        const int k = (span + policy.max_fragment_nm - 1) / policy.max_fragment_nm;
        std::vector<int> parts;
        for (int i = 0; i < k; ++i) parts.push_back(span / k + (i < span % k ? 1 : 0));
        return parts;
    };
    if (corner == 0) return even_split(length_nm);
    if (interior >= policy.min_fragment_nm) {
        std::vector<int> out{corner};
        for (int piece : even_split(interior)) out.push_back(piece);
        out.push_back(corner);
        return out;
    }
    return {length_nm / 2, length_nm - length_nm / 2};
}

std::vector<FragmentedEdge> fragment(const Polygon& poly, const FragmentPolicy& policy,
                                     int polygon_index, int first_id) {
    policy.validate();
    std::vector<FragmentedEdge> out;
    int next_id = first_id;
    for (std::size_t e = 0; e < poly.size(); ++e) {
        FragmentedEdge fe;
        fe.edge = polygon_edge(poly, e);
        const auto lengths = split_edge(fe.edge.length_nm, policy, &fe.degenerate);
        fe.boundaries.push_back(0);
        for (int len : lengths) fe.boundaries.push_back(fe.boundaries.back() + len);
        for (int f = 0; f < fe.fragment_count(); ++f) {
            if (f > 0) {
                ControlPoint frag;
                frag.id = next_id++;
                frag.kind = PointKind::Frag;
                frag.polygon = polygon_index;
                frag.edge = static_cast<int>(e);
                frag.fragment = f;
                frag.arclength_nm = fe.boundaries[f];
                fe.points.push_back(frag);
            }
            ControlPoint epe;
            epe.id = next_id++;
            epe.kind = PointKind::Epe;
            epe.polygon = polygon_index;
            epe.edge = static_cast<int>(e);
            epe.fragment = f;
            epe.arclength_nm = (fe.boundaries[f] + fe.boundaries[f + 1]) / 2;
            fe.points.push_back(epe);
        }
        out.push_back(std::move(fe));
    }
    return out;
}

ControlLayout place_control_points(const LayoutClip& clip, const FragmentPolicy& policy) {
    ControlLayout layout;
    layout.policy = policy;
    for (std::size_t k = 0; k < clip.polygons.size(); ++k) {
        auto edges = fragment(clip.polygons[k], policy, static_cast<int>(k),
                              static_cast<int>(layout.points.size()));
        for (const auto& fe : edges)
            layout.points.insert(layout.points.end(), fe.points.begin(), fe.points.end());
        layout.polygons.push_back(std::move(edges));
    }
    return layout;
}

ControlPoint move_point_tangential(const ControlPoint& pt, int delta_nm, int edge_length_nm) {
    const int wanted = pt.offset_nm + delta_nm;
    if (std::abs(wanted) > kMaxOffsetNm)
        throw RangeError("offset " + std::to_string(wanted) + " nm exceeds the +/-" +
                         std::to_string(kMaxOffsetNm) + " nm cap");
    ControlPoint out = pt;
    const int pos = std::clamp(pt.arclength_nm + wanted, 0, edge_length_nm);
    out.offset_nm = pos - pt.arclength_nm;
    out.clamped = pt.clamped || out.offset_nm != wanted;
    return out;
}

std::vector<std::vector<std::vector<int>>> effective_boundaries(const ControlLayout& layout) {
    std::vector<std::vector<std::vector<int>>> out(layout.polygons.size());
    for (std::size_t k = 0; k < layout.polygons.size(); ++k)
        for (const auto& fe : layout.polygons[k]) out[k].push_back(fe.boundaries);
    for (const ControlPoint& p : layout.points)
        if (p.kind == PointKind::Frag) out[p.polygon][p.edge][p.fragment] = p.position_nm();
    for (auto& poly : out)
        for (auto& b : poly) {
            const int k = static_cast<int>(b.size()) - 1;
            for (int j = 1; j < k; ++j) b[j] = std::clamp(b[j], b[j - 1] + 1, b[k] - (k - j));
        }
    return out;
}

PointF point_location(const ControlLayout& layout, const ControlPoint& pt) {
    const Edge& e = layout.host(pt).edge;
    return e.at(static_cast<double>(std::clamp(pt.position_nm(), 0, e.length_nm)));
}

namespace {

std::optional<Polygon> build_moved(const Polygon& poly,
                                   std::span<const std::vector<int>> boundaries,
                                   std::span<const int> moves) {
    const std::size_t n = poly.size();
    std::vector<std::size_t> first(n + 1, 0);
    for (std::size_t e = 0; e < n; ++e) first[e + 1] = first[e] + boundaries[e].size() - 1;

    std::vector<Point> ring;
    for (std::size_t e = 0; e < n; ++e) {
        const Edge edge = polygon_edge(poly, e);
        const std::size_t prev = (e + n - 1) % n;
        const Edge prev_edge = polygon_edge(poly, prev);
        const int prev_move = moves[first[prev + 1] - 1];
        ring.push_back(edge.p0 + prev_edge.outward_normal * prev_move +
                       edge.outward_normal * moves[first[e]]);
        const auto& b = boundaries[e];
        for (std::size_t j = 1; j + 1 < b.size(); ++j) {
            const int m0 = moves[first[e] + j - 1], m1 = moves[first[e] + j];
            if (m0 == m1) continue;
            const Point at = edge.at(b[j]);
            ring.push_back(at + edge.outward_normal * m0);
            ring.push_back(at + edge.outward_normal * m1);
        }
    }
    std::vector<Point> dedup;
    for (const Point& p : ring)
        if (dedup.empty() || !(dedup.back() == p)) dedup.push_back(p);
    while (dedup.size() > 1 && dedup.front() == dedup.back()) dedup.pop_back();
    if (dedup.size() < 4 || signed_area2(dedup) >= 0) return std::nullopt;
    try {
        return make_polygon(std::move(dedup));
    } catch (const GeometryError&) {
        return std::nullopt;
    }
}

}  // namespace

MoveResult apply_fragment_normal_moves(const Polygon& poly,
                                       std::span<const std::vector<int>> boundaries,
                                       std::span<const int> moves) {
    if (boundaries.size() != poly.size())
        throw ContractError("fragment boundaries do not match polygon edge count");
    std::size_t total = 0;
    for (const auto& b : boundaries) total += b.size() - 1;
    if (moves.size() != total) throw ContractError("one move per fragment is required");

    MoveResult res;
    if (auto built = build_moved(poly, boundaries, moves)) {
        res.polygon = std::move(*built);
        res.applied.assign(moves.begin(), moves.end());
        return res;
    }
    // Accept fragments one at a time, each at the largest magnitude that
    // keeps the ring simple given the moves already accepted.
    res.reduced = true;
    res.applied.assign(total, 0);
    Polygon current = poly;
    for (std::size_t f = 0; f < total; ++f) {
        const int want = moves[f];
        for (int mag = std::abs(want); mag > 0; --mag) {
            res.applied[f] = want > 0 ? mag : -mag;
            if (auto built = build_moved(poly, boundaries, res.applied)) {
                current = std::move(*built);
                break;
            }
            res.applied[f] = 0;
        }
    }
    res.polygon = std::move(current);
    return res;
}

}  // namespace opcrecipe
