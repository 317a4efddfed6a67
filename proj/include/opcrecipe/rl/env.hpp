#pragma once

#include <memory>
#include <string>
#include <vector>

#include "opcrecipe/opc.hpp"

namespace opcrecipe::rl {

struct Observation {
    std::vector<double> policy;  // policy-network input
    std::vector<double> value;   // value-network input (policy input + global context)
};

struct StepResult {
    Observation next;
    double reward = 0.0;      // learning signal
    double raw_reward = 0.0;  // -L_OPC as measured
    bool done = false;
    bool truncated = false;
};

class Environment {
public:
    virtual ~Environment() = default;
    virtual int policy_size() const = 0;
    virtual int value_size() const = 0;
    virtual Observation reset() = 0;
    /// `action_class` in [-C, +C].
    virtual StepResult step(int action_class) = 0;
    virtual std::string name() const = 0;
};

// Contrived check environment: every step pays 1 for `target_class` and 0
// otherwise. Observations carry only the step index.
class TargetActionEnv final : public Environment {
public:
    TargetActionEnv(int episode_length, int target_class, int obs_size = 4);
    int policy_size() const override { return obs_size_; }
    int value_size() const override { return obs_size_; }
    Observation reset() override;
    StepResult step(int action_class) override;
    std::string name() const override { return "target_action"; }

private:
    Observation observe() const;
    int length_, target_, obs_size_, t_ = 0;
};

struct EncodingConfig {
    int window_px = 32;
    int window_pixel_nm = 8;
};

inline constexpr int kDescriptorSize = 11;
inline constexpr int kGlobalContextSize = 3;

/// Fixed-length policy input for one control point: a target-layout window
/// in the point's edge frame (u along the traversal tangent, v along the
/// outward normal) followed by the point descriptor.
std::vector<double> encode_point(const LayoutClip& clip, const ControlLayout& layout,
                                 const ControlPoint& point, const EncodingConfig& cfg);

int policy_input_size(const EncodingConfig& cfg);

struct OpcEnvConfig {
    int train_iters = 12;           // OPC iterations per reward evaluation
    double truncation_penalty = 10.0;  // in units of the clip's baseline loss
    // Pay the loss decrease caused by each step, (L_prev - L) / L_base,
    // instead of the level (L_base - L) / L_base. Both sum to the same
    // episode total up to a constant.
    bool incremental_reward = true;
    EncodingConfig encoding;
};

// One episode is one clockwise pass over every control point of a clip; each
// step sets the current point's tangential offset to class * step_nm, reruns
// OPC and pays -L_OPC. The learning reward is (L_base - L) / L_base, the raw
// value -L is kept alongside.
class OpcEnv final : public Environment {
public:
    OpcEnv(LayoutClip clip, LithoConfig litho, OpcConfig opc, MetricsConfig metrics, int C,
           OpcEnvConfig cfg);

    int policy_size() const override { return policy_input_size(cfg_.encoding); }
    int value_size() const override { return policy_size() + kGlobalContextSize; }
    Observation reset() override;
    StepResult step(int action_class) override;
    std::string name() const override { return engine_.clip().id; }

    const ControlLayout& layout() const { return layout_; }
    const ControlLayout& base_layout() const { return base_; }
    const OpcEngine& engine() const { return engine_; }
    double baseline_loss() const { return base_loss_; }
    int steps() const { return static_cast<int>(layout_.points.size()); }
    const std::vector<double>& encoding(int point) const { return encodings_.at(point); }

private:
    Observation observe() const;

    OpcEngine engine_;
    OpcEnvConfig cfg_;
    int C_;
    ControlLayout base_, layout_;
    std::vector<std::vector<double>> encodings_;
    double base_loss_ = 1.0;
    double prev_loss_ = 0.0;
    int t_ = 0;
};

/// Applies class * step_nm as a tangential offset from the point's home
/// position; positions outside the edge are clamped.
ControlPoint apply_class(const ControlPoint& home, int cls, int C, int edge_length_nm);

}  // namespace opcrecipe::rl
