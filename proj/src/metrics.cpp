#include "opcrecipe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "opcrecipe/error.hpp"

namespace opcrecipe {

void MetricsConfig::validate() const {
    if (!(epe_threshold_nm >= 0.0)) throw ConfigError("metrics.epe_threshold_nm must be >= 0");
    if (guard_band_nm < 0) throw ConfigError("metrics.guard_band_nm must be >= 0");
    if (checker_pitch_nm < 1) throw ConfigError("metrics.checker_pitch_nm must be >= 1");
    if (weights.alpha < 0 || weights.beta < 0 || weights.gamma_w < 0)
        throw ConfigError("loss weights must be non-negative");
}

int EpeReport::inner_violations() const {
    int n = 0;
    for (double d : distances) n += d < -threshold_nm;
    return n;
}

int EpeReport::outer_violations() const {
    int n = 0;
    for (double d : distances) n += d > threshold_nm;
    return n;
}

MetricWindow MetricWindow::guarded(int rows, int cols, int pixel_nm, int guard_band_nm) {
    // First cell whose center (c + 0.5) * p is at least the guard distance.
    const int g = static_cast<int>(std::ceil(guard_band_nm / double(pixel_nm) - 0.5));
    MetricWindow w{std::max(0, g), std::max(0, rows - g), std::max(0, g), std::max(0, cols - g)};
    if (w.r1 < w.r0) w.r1 = w.r0;
    if (w.c1 < w.c0) w.c1 = w.c0;
    return w;
}

EpeReport epe_from_distances(std::vector<double> distances, double threshold_nm,
                             std::vector<bool> resolved) {
    EpeReport rep;
    rep.threshold_nm = threshold_nm;
    rep.distances = std::move(distances);
    rep.resolved = resolved.empty() ? std::vector<bool>(rep.distances.size(), true)
                                    : std::move(resolved);
    for (double d : rep.distances)
        if (std::abs(d) > threshold_nm) {
            ++rep.epe_n;
            rep.epe_d += std::abs(d);
        }
    return rep;
}

std::vector<ControlPoint> checker_points(const LayoutClip& clip, const MetricsConfig& cfg) {
    std::vector<ControlPoint> out;
    const double g = cfg.guard_band_nm;
    for (std::size_t k = 0; k < clip.polygons.size(); ++k) {
        const Polygon& poly = clip.polygons[k];
        for (std::size_t e = 0; e < poly.size(); ++e) {
            const Edge edge = polygon_edge(poly, e);
            for (int s = cfg.checker_pitch_nm / 2; s < edge.length_nm; s += cfg.checker_pitch_nm) {
                const Point at = edge.at(s);
                if (at.x < g || at.y < g || at.x > clip.width_nm - g || at.y > clip.height_nm - g)
                    continue;
                ControlPoint p;
                p.id = static_cast<int>(out.size());
                p.kind = PointKind::Epe;
                p.polygon = static_cast<int>(k);
                p.edge = static_cast<int>(e);
                p.fragment = -1;
                p.arclength_nm = s;
                out.push_back(p);
            }
        }
    }
    return out;
}

EpeReport epe_evaluate(std::span<const ControlPoint> points, const LayoutClip& target,
                       const RealGrid& aerial, const LithoConfig& litho, double threshold_nm) {
    std::vector<double> dist;
    std::vector<bool> resolved;
    dist.reserve(points.size());
    for (const ControlPoint& p : points) {
        if (p.polygon < 0 || p.polygon >= static_cast<int>(target.polygons.size()) ||
            p.edge < 0 || p.edge >= static_cast<int>(target.polygons[p.polygon].size()))
            throw ContractError("EPE point " + std::to_string(p.id) + " has no host edge");
        const Edge e = polygon_edge(target.polygons[p.polygon], p.edge);
        const int s = p.position_nm();
        if (s < 0 || s > e.length_nm)
            throw ContractError("EPE point " + std::to_string(p.id) + " lies off its host edge");
        const Crossing c = edge_crossing_distance(aerial, litho, e.at(double(s)), e.outward_normal,
                                                  litho.dose_nominal);
        dist.push_back(c.distance_nm);
        resolved.push_back(c.resolved);
    }
    return epe_from_distances(std::move(dist), threshold_nm, std::move(resolved));
}

PvBand pvb(const BinaryGrid& z_max, const BinaryGrid& z_min, const MetricWindow& w) {
    if (!z_max.same_shape(z_min)) throw ContractError("PVB grids differ in shape");
    PvBand band;
    for (int r = w.r0; r < w.r1; ++r)
        for (int c = w.c0; c < w.c1; ++c) band.value += (z_max.at(r, c) != 0) != (z_min.at(r, c) != 0);
    return band;
}

PvBand pvb(const BinaryGrid& z_max, const BinaryGrid& z_min) {
    return pvb(z_max, z_min, MetricWindow::full(z_max.rows, z_max.cols));
}

std::int64_t l2_mismatch(const BinaryGrid& printed, const BinaryGrid& target,
                         const MetricWindow& w) {
    if (!printed.same_shape(target)) throw ContractError("L2 grids differ in shape");
    std::int64_t n = 0;
    for (int r = w.r0; r < w.r1; ++r)
        for (int c = w.c0; c < w.c1; ++c) n += (printed.at(r, c) != 0) != (target.at(r, c) != 0);
    return n;
}

OpcLoss opc_loss(std::int64_t l2, const EpeReport& epe, const PvBand& band,
                 const LossWeights& weights) {
    OpcLoss loss;
    loss.l2 = l2;
    loss.epe_term = weights.epe_term == EpeTerm::Count ? double(epe.epe_n) : epe.epe_d;
    loss.pvb_term = band.value;
    loss.weights = weights;
    loss.total = weights.alpha * double(l2) + weights.beta * loss.epe_term +
                 weights.gamma_w * double(band.value);
    return loss;
}

OpcLoss opc_loss(const BinaryGrid& printed_nominal, const BinaryGrid& target_raster,
                 const EpeReport& epe, const PvBand& band, const LossWeights& weights,
                 const MetricWindow& window) {
    return opc_loss(l2_mismatch(printed_nominal, target_raster, window), epe, band, weights);
}

// ---- reporting -------------------------------------------------------------

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
    std::ostringstream os;
    os << "clip_id,variant,pvb,epe_n,epe_d,l2,loss_total,runtime_ms\n";
    char buf[64];
    for (const MetricsRow& r : rows) {
        os << r.clip_id << ',' << r.variant << ',' << r.pvb << ',' << r.epe_n << ',';
        std::snprintf(buf, sizeof buf, "%.4f", r.epe_d);
        os << buf << ',' << r.l2 << ',';
        std::snprintf(buf, sizeof buf, "%.4f", r.loss_total);
        os << buf << ',';
        if (r.runtime_ms) {
            std::snprintf(buf, sizeof buf, "%.3f", *r.runtime_ms);
            os << buf;
        }
        os << '\n';
    }
    return os.str();
}

std::vector<MetricsRow> parse_metrics_csv(const std::string& text) {
    std::vector<MetricsRow> rows;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (f.size() == 7) f.emplace_back();
        if (f.size() != 8) throw ParseError(line_no, "metrics row needs 8 columns");
        try {
            MetricsRow r;
            r.clip_id = f[0];
            r.variant = f[1];
            r.pvb = std::stoll(f[2]);
            r.epe_n = std::stoi(f[3]);
            r.epe_d = std::stod(f[4]);
            r.l2 = std::stoll(f[5]);
            r.loss_total = std::stod(f[6]);
            if (!f[7].empty()) r.runtime_ms = std::stod(f[7]);
            rows.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw ParseError(line_no, "malformed number in metrics row");
        }
    }
    return rows;
}

VariantSummary summarize(const std::string& variant, const std::vector<MetricsRow>& rows) {
    double pv = 0, en = 0, ed = 0, l2 = 0, loss = 0, rt = 0;
    bool have_rt = !rows.empty();
    for (const MetricsRow& r : rows) {
        pv += double(r.pvb);
        en += r.epe_n;
        ed += r.epe_d;
        l2 += double(r.l2);
        loss += r.loss_total;
        if (r.runtime_ms) rt += *r.runtime_ms; else have_rt = false;
    }
    const double n = rows.empty() ? 1.0 : double(rows.size());
    VariantSummary s{variant,
                     {{"PVBand", pv / n}, {"EPE N", en / n}, {"EPE D", ed / n}, {"L2", l2 / n},
                      {"Loss", loss / n}}};
    if (have_rt) s.metrics.emplace_back("Runtime", rt / n / 1000.0);
    return s;
}

std::vector<RatioRow> ratio_table(const VariantSummary& baseline,
                                  const std::vector<VariantSummary>& variants) {
    std::vector<RatioRow> out;
    for (const auto& [name, base] : baseline.metrics) {
        RatioRow row;
        row.metric = name;
        row.values.push_back(base);
        row.ratios.push_back(base == 0.0 ? std::nullopt : std::optional<double>(1.0));
        bool complete = true;
        for (const VariantSummary& v : variants) {
            const auto it = std::find_if(v.metrics.begin(), v.metrics.end(),
                                         [&](const auto& m) { return m.first == name; });
            if (it == v.metrics.end()) {
                complete = false;
                break;
            }
            row.values.push_back(it->second);
            if (base == 0.0) {
                row.ratios.push_back(std::nullopt);
            } else {
                const double raw = it->second / base;
                row.ratios.push_back(std::copysign(std::floor(std::abs(raw) * 100.0 + 0.5), raw) /
                                     100.0);
            }
        }
        if (complete) out.push_back(std::move(row));
    }
    return out;
}

std::string format_ratio(const std::optional<double>& r) {
    if (!r) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *r);
    return buf;
}

std::string ratio_table_csv(const std::vector<std::string>& variant_names,
                            const std::vector<RatioRow>& rows) {
    std::ostringstream os;
    os << "metric";
    for (const auto& v : variant_names) os << ',' << v;
    os << '\n';
    char buf[64];
    for (const RatioRow& row : rows) {
        os << row.metric;
        for (double v : row.values) {
            std::snprintf(buf, sizeof buf, "%.2f", v);
            os << ',' << buf;
        }
        os << "\nratio";
        for (const auto& r : row.ratios) os << ',' << format_ratio(r);
        os << '\n';
    }
    return os.str();
}

}  // namespace opcrecipe
