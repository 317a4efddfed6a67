#pragma once

#include <vector>

#include "opcrecipe/fragment.hpp"
#include "opcrecipe/litho.hpp"
#include "opcrecipe/metrics.hpp"

namespace opcrecipe {

// How an EPE point's offset is interpreted by the engine. Tangential moves
// the measurement site along the edge; Normal keeps the site and retargets
// the edge by the offset instead.
enum class MoveAxis { Tangential, Normal };

struct OpcConfig {
    int max_iters = 20;
    double gain = 0.5;
    int per_iter_cap_nm = 4;
    double stop_epsilon_nm = 0.5;
    int max_bias_nm = 30;  // limit on a fragment's accumulated bias
    FragmentPolicy fragment_policy;
    MoveAxis epe_axis = MoveAxis::Tangential;
    // Image the corrected mask from exact pixel coverage instead of the
    // cell-center raster, so sub-pixel fragment moves change the image.
    bool coverage_mask = true;

    void validate() const;
};

// Per-polygon fragment biases (nm along the outward normal), fragments
// enumerated edge by edge.
using Biases = std::vector<std::vector<int>>;

struct Evaluation {
    EpeReport epe;
    PvBand pvb;
    OpcLoss loss;
};

struct OpcResult {
    std::vector<Polygon> mask;
    Biases biases;
    int iterations = 0;
    Evaluation final;
    std::vector<double> loss_trace;    // one entry per simulated iteration
    std::vector<int> max_move_trace;   // largest |move| applied after each non-final iteration
    bool converged = false;
    bool reduced = false;  // a fragment move was cut back to keep a polygon valid
    bool aborted = false;
};

// Feedback edge-based OPC bound to one target clip. Construction caches the
// kernel, target raster and evaluation points so repeated runs (RL rollouts)
// only pay for simulation.
class OpcEngine {
public:
    OpcEngine(LayoutClip clip, LithoConfig litho, OpcConfig opc, MetricsConfig metrics);

    /// Simulate, measure EPE at each fragment's EPE point, move each fragment
    /// by clamp(-gain * epe, +/-cap) and rebuild, until every |epe| is within
    /// stop_epsilon or max_iters simulations were run. `warm_start` seeds the
    /// biases; `max_iters` overrides the configured iteration budget when > 0.
    /// Without `trace` only the final state is evaluated and loss_trace stays
    /// empty.
    OpcResult run(const ControlLayout& layout, const Biases* warm_start = nullptr,
                  int max_iters = 0, bool trace = true) const;

    /// Metrics of an arbitrary mask against this target.
    Evaluation evaluate_mask(const std::vector<Polygon>& mask) const;
    Evaluation evaluate_aerial(const RealGrid& aerial) const;
    RealGrid aerial(const std::vector<Polygon>& mask) const;

    const LayoutClip& clip() const { return clip_; }
    const BinaryGrid& target_raster() const { return target_; }
    const std::vector<ControlPoint>& checker() const { return checker_; }
    const MetricWindow& window() const { return window_; }
    const LithoConfig& litho() const { return litho_; }
    const OpcConfig& opc() const { return opc_; }
    const MetricsConfig& metrics() const { return metrics_; }

private:
    LayoutClip clip_;
    LithoConfig litho_;
    OpcConfig opc_;
    MetricsConfig metrics_;
    Kernel kernel_;
    BinaryGrid target_;
    MetricWindow window_;
    std::vector<ControlPoint> checker_;
};

OpcResult run_opc(const LayoutClip& clip, const LithoConfig& litho, const OpcConfig& opc,
                  const MetricsConfig& metrics, const ControlLayout& layout);

/// Round half away from zero.
int round_half_away(double v);

}  // namespace opcrecipe
