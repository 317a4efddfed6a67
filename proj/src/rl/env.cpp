#include "opcrecipe/rl/env.hpp"

#include <algorithm>
#include <cmath>

#include "opcrecipe/error.hpp"

namespace opcrecipe::rl {

TargetActionEnv::TargetActionEnv(int episode_length, int target_class, int obs_size)
    : length_(episode_length), target_(target_class), obs_size_(obs_size) {
    if (length_ < 1 || obs_size_ < 1) throw ConfigError("target-action env needs positive sizes");
}

Observation TargetActionEnv::observe() const {
    Observation o;
    o.policy.assign(obs_size_, 0.0);
    o.policy[0] = double(t_) / length_;
    for (int i = 1; i < obs_size_; ++i) o.policy[i] = std::sin(double(i * (t_ + 1)));
    o.value = o.policy;
    return o;
}

Observation TargetActionEnv::reset() {
    t_ = 0;
    return observe();
}

StepResult TargetActionEnv::step(int action_class) {
    StepResult r;
    r.reward = r.raw_reward = action_class == target_ ? 1.0 : 0.0;
    ++t_;
    r.done = t_ >= length_;
    r.next = observe();
    return r;
}

int policy_input_size(const EncodingConfig& cfg) {
    return cfg.window_px * cfg.window_px + kDescriptorSize;
}

std::vector<double> encode_point(const LayoutClip& clip, const ControlLayout& layout,
                                 const ControlPoint& point, const EncodingConfig& cfg) {
    const FragmentedEdge& fe = layout.host(point);
    const Edge& e = fe.edge;
    const Polygon& poly = clip.polygons.at(point.polygon);
    const int w = cfg.window_px;
    const double px = cfg.window_pixel_nm;
    const PointF at = e.at(double(std::clamp(point.arclength_nm, 0, e.length_nm)));
    std::vector<double> out;
    out.reserve(policy_input_size(cfg));

    // Polygons whose box reaches the window.
    const double reach = 0.75 * w * px;
    std::vector<const Polygon*> near;
    for (const Polygon& p : clip.polygons) {
        const BBox b = bbox(p);
        if (b.xmax >= at.x - reach && b.xmin <= at.x + reach && b.ymax >= at.y - reach &&
            b.ymin <= at.y + reach)
            near.push_back(&p);
    }
    for (int i = 0; i < w; ++i) {
        const double v = (i - w / 2 + 0.5) * px;
        for (int j = 0; j < w; ++j) {
            const double u = (j - w / 2 + 0.5) * px;
            const double x = at.x + u * e.tangent.x + v * e.outward_normal.x;
            const double y = at.y + u * e.tangent.y + v * e.outward_normal.y;
            bool inside = false;
            for (const Polygon* p : near)
                if (contains(*p, x, y)) {
                    inside = true;
                    break;
                }
            out.push_back(inside ? 1.0 : 0.0);
        }
    }

    const double len = e.length_nm, s = point.arclength_nm;
    int frag_len;
    if (point.kind == PointKind::Epe) {
        frag_len = fe.boundaries[point.fragment + 1] - fe.boundaries[point.fragment];
    } else {
        frag_len = std::min(fe.boundaries[point.fragment] - fe.boundaries[point.fragment - 1],
                            fe.boundaries[point.fragment + 1] - fe.boundaries[point.fragment]);
    }
    out.push_back(point.kind == PointKind::Frag ? 1.0 : 0.0);
    out.push_back(e.orientation == Orientation::Vertical ? 1.0 : 0.0);
    out.push_back(len > 0 ? s / len : 0.0);
    out.push_back(std::min(s, 100.0) / 100.0);
    out.push_back(std::min(len - s, 100.0) / 100.0);
    out.push_back(corner_kind(poly, point.edge) == CornerKind::Convex ? 1.0 : 0.0);
    out.push_back(corner_kind(poly, point.edge + 1) == CornerKind::Convex ? 1.0 : 0.0);
    out.push_back(std::min(len, 500.0) / 500.0);
    out.push_back(point.offset_nm / 40.0);
    out.push_back(std::min(frag_len, 100) / 100.0);
    out.push_back(is_jog_edge(poly, point.edge, 40) ? 1.0 : 0.0);
    return out;
}

ControlPoint apply_class(const ControlPoint& home, int cls, int C, int edge_length_nm) {
    if (cls < -C || cls > C) throw RangeError("class " + std::to_string(cls) + " outside [-C, C]");
    ControlPoint p = home;
    p.offset_nm = 0;
    p.clamped = false;
    return move_point_tangential(p, cls * (40 / C), edge_length_nm);
}

OpcEnv::OpcEnv(LayoutClip clip, LithoConfig litho, OpcConfig opc, MetricsConfig metrics, int C,
               OpcEnvConfig cfg)
    : engine_(std::move(clip), litho, opc, metrics), cfg_(cfg), C_(C) {
    if (cfg_.train_iters < 1) throw ConfigError("rl train_iters must be >= 1");
    base_ = place_control_points(engine_.clip(), engine_.opc().fragment_policy);
    layout_ = base_;
    for (const ControlPoint& p : base_.points)
        encodings_.push_back(encode_point(engine_.clip(), base_, p, cfg_.encoding));
    base_loss_ = std::max(1.0, engine_.run(base_, nullptr, cfg_.train_iters, false).final.loss.total);
    prev_loss_ = base_loss_;
}

Observation OpcEnv::observe() const {
    Observation o;
    const int n = steps();
    const int idx = std::min(t_, n - 1);
    o.policy = encodings_.empty() ? std::vector<double>(policy_size(), 0.0) : encodings_[idx];
    o.value = o.policy;
    o.value.push_back(n ? double(t_) / n : 1.0);
    o.value.push_back(prev_loss_ / base_loss_);
    o.value.push_back(std::log1p(base_loss_) / 10.0);
    return o;
}

Observation OpcEnv::reset() {
    layout_ = base_;
    prev_loss_ = base_loss_;
    t_ = 0;
    return observe();
}

StepResult OpcEnv::step(int action_class) {
    if (t_ >= steps()) throw ContractError("step after the end of the episode");
    StepResult r;
    ControlPoint& p = layout_.points[t_];
    try {
        p = apply_class(base_.points[t_], action_class, C_, layout_.host(p).edge.length_nm);
        const double loss = engine_.run(layout_, nullptr, cfg_.train_iters, false).final.loss.total;
        r.raw_reward = -loss;
        r.reward = ((cfg_.incremental_reward ? prev_loss_ : base_loss_) - loss) / base_loss_;
        prev_loss_ = loss;
        ++t_;
        r.done = t_ >= steps();
    } catch (const RangeError&) {
        throw;
    } catch (const Error&) {
        r.truncated = r.done = true;
        r.reward = -cfg_.truncation_penalty;
        r.raw_reward = -cfg_.truncation_penalty * base_loss_;
        t_ = steps();
    }
    r.next = observe();
    return r;
}

}  // namespace opcrecipe::rl
