#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "opcrecipe/fragment.hpp"
#include "opcrecipe/litho.hpp"

namespace opcrecipe {

enum class EpeTerm { Count, Distance };

struct LossWeights {
    double alpha = 1.0;    // L2 pixel mismatch
    double beta = 100.0;   // EPE term
    double gamma_w = 1.0;  // PV band
    EpeTerm epe_term = EpeTerm::Count;
};

struct MetricsConfig {
    LossWeights weights;
    double epe_threshold_nm = 1.0;
    int guard_band_nm = 100;
    int checker_pitch_nm = 20;

    void validate() const;
};

struct EpeReport {
    std::vector<double> distances;  // signed, nm; unresolved at +/- search cap
    std::vector<bool> resolved;
    int epe_n = 0;
    double epe_d = 0.0;
    double threshold_nm = 1.0;

    int inner_violations() const;
    int outer_violations() const;
};

struct PvBand {
    std::int64_t value = 0;
};

struct OpcLoss {
    std::int64_t l2 = 0;
    double epe_term = 0.0;
    std::int64_t pvb_term = 0;
    LossWeights weights;
    double total = 0.0;
};

// Cells whose centers sit at least guard_band_nm from every clip border.
struct MetricWindow {
    int r0 = 0, r1 = 0, c0 = 0, c1 = 0;

    static MetricWindow full(int rows, int cols) { return {0, rows, 0, cols}; }
    static MetricWindow guarded(int rows, int cols, int pixel_nm, int guard_band_nm);
};

/// Applies the violation rule (|d| > threshold) to precomputed distances.
EpeReport epe_from_distances(std::vector<double> distances, double threshold_nm,
                             std::vector<bool> resolved = {});

/// Fixed sampling of every target edge at `pitch_nm`, starting half a pitch
/// from each vertex, skipping samples inside the guard band. The result is
/// the evaluation point set and does not depend on any recipe.
std::vector<ControlPoint> checker_points(const LayoutClip& clip, const MetricsConfig& cfg);

/// EPE at target-edge points measured along the host edge's outward normal.
/// Throws ContractError when a point does not sit on its host edge.
EpeReport epe_evaluate(std::span<const ControlPoint> points, const LayoutClip& target,
                       const RealGrid& aerial, const LithoConfig& litho, double threshold_nm);

PvBand pvb(const BinaryGrid& z_max, const BinaryGrid& z_min);
PvBand pvb(const BinaryGrid& z_max, const BinaryGrid& z_min, const MetricWindow& window);

std::int64_t l2_mismatch(const BinaryGrid& printed, const BinaryGrid& target,
                         const MetricWindow& window);

OpcLoss opc_loss(const BinaryGrid& printed_nominal, const BinaryGrid& target_raster,
                 const EpeReport& epe, const PvBand& band, const LossWeights& weights,
                 const MetricWindow& window);
/// Loss from already reduced terms.
OpcLoss opc_loss(std::int64_t l2, const EpeReport& epe, const PvBand& band,
                 const LossWeights& weights);

// ---- reporting -------------------------------------------------------------

struct MetricsRow {
    std::string clip_id;
    std::string variant;
    std::int64_t pvb = 0;
    int epe_n = 0;
    double epe_d = 0.0;
    std::int64_t l2 = 0;
    double loss_total = 0.0;
    std::optional<double> runtime_ms;  // omitted for reproducible outputs
};

std::string metrics_csv(const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> parse_metrics_csv(const std::string& text);

// Per-variant summary: metric name -> value, in report order.
struct VariantSummary {
    std::string variant;
    std::vector<std::pair<std::string, double>> metrics;
};

/// Mean over clips of PVBand, EPE N, EPE D, L2, loss and runtime (seconds).
VariantSummary summarize(const std::string& variant, const std::vector<MetricsRow>& rows);

struct RatioRow {
    std::string metric;
    std::vector<double> values;                 // baseline first
    std::vector<std::optional<double>> ratios;  // rounded to 2 decimals, nullopt = n/a
};

/// ratio = variant / baseline per metric, rounded half away from zero to two
/// decimals; a zero baseline yields n/a.
std::vector<RatioRow> ratio_table(const VariantSummary& baseline,
                                  const std::vector<VariantSummary>& variants);
std::string format_ratio(const std::optional<double>& r);
/// Report layout: a value row and a ratio row per metric.
std::string ratio_table_csv(const std::vector<std::string>& variant_names,
                            const std::vector<RatioRow>& rows);

}  // namespace opcrecipe
