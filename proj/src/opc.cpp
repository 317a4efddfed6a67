#include "opcrecipe/opc.hpp"

#include <algorithm>
#include <cmath>

#include "opcrecipe/error.hpp"

namespace opcrecipe {

void OpcConfig::validate() const {
    if (max_iters < 1) throw ConfigError("opc.max_iters must be >= 1");
    if (!(gain > 0.0 && gain <= 1.0)) throw ConfigError("opc.gain must lie in (0, 1]");
    if (per_iter_cap_nm < 1) throw ConfigError("opc.per_iter_cap_nm must be >= 1");
    if (max_bias_nm < 1) throw ConfigError("opc.max_bias_nm must be >= 1");
    if (!(stop_epsilon_nm >= 0.0)) throw ConfigError("opc.stop_epsilon_nm must be >= 0");
    fragment_policy.validate();
}

int round_half_away(double v) {
    return static_cast<int>(std::copysign(std::floor(std::abs(v) + 0.5), v));
}

OpcEngine::OpcEngine(LayoutClip clip, LithoConfig litho, OpcConfig opc, MetricsConfig metrics)
    : clip_(std::move(clip)), litho_(litho), opc_(opc), metrics_(metrics) {
    litho_.validate();
    opc_.validate();
    metrics_.validate();
    kernel_ = make_kernel(litho_.kernel_sigma_nm, litho_.pixel_nm);
    target_ = rasterize(clip_, litho_.pixel_nm);
    window_ = MetricWindow::guarded(target_.rows, target_.cols, litho_.pixel_nm,
                                    metrics_.guard_band_nm);
    checker_ = checker_points(clip_, metrics_);
}

RealGrid OpcEngine::aerial(const std::vector<Polygon>& mask) const {
    if (opc_.coverage_mask)
        return convolve(coverage_raster(mask, clip_.width_nm, clip_.height_nm, litho_.pixel_nm),
                        kernel_);
    return convolve(rasterize_polygons(mask, clip_.width_nm, clip_.height_nm, litho_.pixel_nm),
                    kernel_);
}

Evaluation OpcEngine::evaluate_aerial(const RealGrid& aerial) const {
    Evaluation ev;
    const ProcessCorners z = process_corners_from_aerial(aerial, litho_);
    ev.epe = epe_evaluate(checker_, clip_, aerial, litho_, metrics_.epe_threshold_nm);
    ev.pvb = pvb(z.max, z.min, window_);
    ev.loss = opc_loss(l2_mismatch(z.nominal, target_, window_), ev.epe, ev.pvb,
                       metrics_.weights);
    return ev;
}

Evaluation OpcEngine::evaluate_mask(const std::vector<Polygon>& mask) const {
    return evaluate_aerial(aerial(mask));
}

OpcResult OpcEngine::run(const ControlLayout& layout, const Biases* warm_start, int max_iters,
                         bool trace) const {
    if (layout.polygons.size() != clip_.polygons.size())
        throw ContractError("control layout does not match the clip");
    const int budget = max_iters > 0 ? max_iters : opc_.max_iters;
    const auto bounds = effective_boundaries(layout);

    // Locate each fragment's EPE site (position along its edge, retarget).
    struct Site {
        int polygon, edge;
        double s;
        double retarget;
    };
    std::vector<std::vector<Site>> sites(clip_.polygons.size());
    std::vector<std::vector<std::size_t>> first(clip_.polygons.size());
    for (std::size_t k = 0; k < clip_.polygons.size(); ++k) {
        std::size_t n = 0;
        for (const auto& b : bounds[k]) {
            first[k].push_back(n);
            n += b.size() - 1;
        }
        sites[k].assign(n, Site{int(k), 0, 0.0, 0.0});
        for (std::size_t e = 0; e < bounds[k].size(); ++e)
            for (std::size_t f = 0; f + 1 < bounds[k][e].size(); ++f) {
                Site& st = sites[k][first[k][e] + f];
                st.edge = int(e);
                st.s = 0.5 * (bounds[k][e][f] + bounds[k][e][f + 1]);
            }
    }
    for (const ControlPoint& p : layout.points) {
        if (p.kind != PointKind::Epe) continue;
        Site& st = sites[p.polygon][first[p.polygon][p.edge] + p.fragment];
        const int len = layout.host(p).edge.length_nm;
        if (opc_.epe_axis == MoveAxis::Tangential) {
            st.s = std::clamp(p.position_nm(), 0, len);
        } else {
            st.s = p.arclength_nm;
            st.retarget = p.offset_nm;
        }
    }

    OpcResult res;
    if (warm_start) {
        res.biases = *warm_start;
        for (std::size_t k = 0; k < sites.size(); ++k)
            if (k >= res.biases.size() || res.biases[k].size() != sites[k].size())
                throw ContractError("warm-start biases do not match the fragmentation");
    } else {
        for (const auto& s : sites) res.biases.emplace_back(s.size(), 0);
    }

    for (int it = 0; it < budget; ++it) {
        res.mask.clear();
        for (std::size_t k = 0; k < clip_.polygons.size(); ++k) {
            MoveResult mv = apply_fragment_normal_moves(clip_.polygons[k], bounds[k], res.biases[k]);
            if (mv.reduced) {
                res.reduced = true;
                res.biases[k] = mv.applied;
            }
            res.mask.push_back(std::move(mv.polygon));
        }
        const RealGrid img = aerial(res.mask);
        res.iterations = it + 1;
        if (trace) {
            res.final = evaluate_aerial(img);
            res.loss_trace.push_back(res.final.loss.total);
        }

        bool within = true;
        Biases moves(res.biases.size());
        for (std::size_t k = 0; k < sites.size(); ++k) {
            const Polygon& poly = clip_.polygons[k];
            moves[k].assign(sites[k].size(), 0);
            for (std::size_t f = 0; f < sites[k].size(); ++f) {
                const Site& st = sites[k][f];
                const Edge e = polygon_edge(poly, st.edge);
                const double d =
                    edge_crossing_distance(img, litho_, e.at(st.s), e.outward_normal).distance_nm -
                    st.retarget;
                if (std::abs(d) > opc_.stop_epsilon_nm) within = false;
                const int step = std::clamp(round_half_away(-opc_.gain * d),
                                            -opc_.per_iter_cap_nm, opc_.per_iter_cap_nm);
                moves[k][f] = std::clamp(res.biases[k][f] + step, -opc_.max_bias_nm,
                                         opc_.max_bias_nm) -
                              res.biases[k][f];
            }
        }
        int largest = 0;
        for (const auto& m : moves)
            for (int v : m) largest = std::max(largest, std::abs(v));
        if (within) res.converged = true;
        if (within || it + 1 == budget || largest == 0) {
            if (!trace) res.final = evaluate_aerial(img);
            break;
        }
        for (std::size_t k = 0; k < moves.size(); ++k)
            for (std::size_t f = 0; f < moves[k].size(); ++f) res.biases[k][f] += moves[k][f];
        res.max_move_trace.push_back(largest);
    }
    return res;
}

OpcResult run_opc(const LayoutClip& clip, const LithoConfig& litho, const OpcConfig& opc,
                  const MetricsConfig& metrics, const ControlLayout& layout) {
    return OpcEngine(clip, litho, opc, metrics).run(layout);
}

}  // namespace opcrecipe
