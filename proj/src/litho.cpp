#include "opcrecipe/litho.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "opcrecipe/error.hpp"

namespace opcrecipe {

void LithoConfig::validate() const {
    if (pixel_nm <= 0) throw ConfigError("litho.pixel_nm must be positive");
    if (!(kernel_sigma_nm >= pixel_nm)) throw ConfigError("litho.kernel_sigma_nm must be >= pixel_nm");
    if (!(resist_threshold > 0.0 && resist_threshold < 1.0))
        throw ConfigError("litho.resist_threshold must lie in (0, 1)");
    if (!(resist_steepness > 0.0)) throw ConfigError("litho.resist_steepness must be positive");
    if (!(dose_delta >= 0.0 && dose_delta < 0.1))
        throw ConfigError("litho.dose_delta must lie in [0, 0.1)");
    if (!(search_range_nm > 0.0) || !(search_step_nm > 0.0))
        throw ConfigError("litho crossing search range and step must be positive");
}

Kernel make_kernel(double sigma_nm, int pixel_nm) {
    if (pixel_nm <= 0 || !(sigma_nm >= pixel_nm))
        throw ConfigError("kernel sigma must be at least one pixel");
    const double sigma_px = sigma_nm / pixel_nm;
    Kernel k;
    k.radius = static_cast<int>(std::ceil(3.0 * sigma_px));
    double sum = 0.0;
    for (int i = -k.radius; i <= k.radius; ++i) {
        k.taps.push_back(std::exp(-0.5 * (i * i) / (sigma_px * sigma_px)));
        sum += k.taps.back();
    }
    for (double& t : k.taps) t /= sum;
    const int s = k.side();
    k.weights = RealGrid(s, s, pixel_nm, 0.0);
    for (int r = 0; r < s; ++r)
        for (int c = 0; c < s; ++c) k.weights.at(r, c) = k.taps[r] * k.taps[c];
    return k;
}

namespace {

template <typename T>
RealGrid convolve_any(const Grid<T>& mask, const Kernel& kernel) {
    const int rows = mask.rows, cols = mask.cols, rad = kernel.radius;
    RealGrid tmp(rows, cols, mask.pixel_nm, 0.0);
    // Column span of nonzero values in each row of the horizontal pass.
    std::vector<int> lo_col(rows, cols), hi_col(rows, -1);
    // Horizontal pass, scattering each set pixel across its row.
    for (int r = 0; r < rows; ++r) {
        const T* m = &mask.data[static_cast<std::size_t>(r) * cols];
        double* out = &tmp.data[static_cast<std::size_t>(r) * cols];
        for (int c = 0; c < cols; ++c) {
            if (!m[c]) continue;
            const double v = static_cast<double>(m[c]);
            const int lo = std::max(0, c - rad), hi = std::min(cols - 1, c + rad);
            lo_col[r] = std::min(lo_col[r], lo);
            hi_col[r] = std::max(hi_col[r], hi);
            const double* t = &kernel.taps[static_cast<std::size_t>(lo - c + rad)];
            for (int x = lo; x <= hi; ++x) out[x] += v * *t++;
        }
    }
    RealGrid out(rows, cols, mask.pixel_nm, 0.0);
    for (int r = 0; r < rows; ++r) {
        const int lo = std::max(0, r - rad), hi = std::min(rows - 1, r + rad);
        double* dst = &out.data[static_cast<std::size_t>(r) * cols];
        for (int y = lo; y <= hi; ++y) {
            if (hi_col[y] < 0) continue;
            const double w = kernel.taps[static_cast<std::size_t>(y - r + rad)];
            const double* src = &tmp.data[static_cast<std::size_t>(y) * cols];
            for (int c = lo_col[y]; c <= hi_col[y]; ++c) dst[c] += w * src[c];
        }
    }
    return out;
}

}  // namespace

RealGrid convolve(const BinaryGrid& mask, const Kernel& kernel) { return convolve_any(mask, kernel); }
RealGrid convolve(const RealGrid& mask, const Kernel& kernel) { return convolve_any(mask, kernel); }

BinaryGrid print_at_dose(const RealGrid& aerial, const LithoConfig& cfg, double dose) {
    BinaryGrid g(aerial.rows, aerial.cols, aerial.pixel_nm, 0);
    for (std::size_t i = 0; i < aerial.size(); ++i)
        g.data[i] = aerial.data[i] * dose >= cfg.resist_threshold ? 1 : 0;
    return g;
}

SimResult simulate(const BinaryGrid& mask, const LithoConfig& cfg, const Kernel& kernel,
                   double dose) {
    if (!(dose > 0.0)) throw ConfigError("dose must be positive");
    SimResult res;
    res.aerial = convolve(mask, kernel);
    for (double& v : res.aerial.data) v *= dose;
    res.resist = RealGrid(mask.rows, mask.cols, mask.pixel_nm, 0.0);
    res.printed = BinaryGrid(mask.rows, mask.cols, mask.pixel_nm, 0);
    constexpr double lo = std::numeric_limits<double>::denorm_min();
    const double hi = std::nextafter(1.0, 0.0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const double a = res.aerial.data[i];
        const double z = (a - cfg.resist_threshold) * cfg.resist_steepness;
        res.resist.data[i] = std::clamp(1.0 / (1.0 + std::exp(-z)), lo, hi);
        res.printed.data[i] = a >= cfg.resist_threshold ? 1 : 0;
    }
    return res;
}

SimResult simulate(const BinaryGrid& mask, const LithoConfig& cfg, double dose) {
    cfg.validate();
    if (mask.pixel_nm != cfg.pixel_nm) throw ConfigError("mask pixel size differs from litho config");
    return simulate(mask, cfg, make_kernel(cfg.kernel_sigma_nm, cfg.pixel_nm), dose);
}

ProcessCorners process_corners_from_aerial(const RealGrid& aerial, const LithoConfig& cfg) {
    return {print_at_dose(aerial, cfg, cfg.dose_nominal),
            print_at_dose(aerial, cfg, cfg.dose_nominal + cfg.dose_delta),
            print_at_dose(aerial, cfg, cfg.dose_nominal - cfg.dose_delta)};
}

ProcessCorners process_corners(const BinaryGrid& mask, const LithoConfig& cfg) {
    cfg.validate();
    return process_corners_from_aerial(
        convolve(mask, make_kernel(cfg.kernel_sigma_nm, cfg.pixel_nm)), cfg);
}

double sample_bilinear(const RealGrid& g, double x_nm, double y_nm) {
    const double u = x_nm / g.pixel_nm - 0.5, v = y_nm / g.pixel_nm - 0.5;
    const int c0 = static_cast<int>(std::floor(u)), r0 = static_cast<int>(std::floor(v));
    const double fu = u - c0, fv = v - r0;
    auto px = [&](int r, int c) {
        return (r < 0 || c < 0 || r >= g.rows || c >= g.cols) ? 0.0 : g.at(r, c);
    };
    return (1 - fv) * ((1 - fu) * px(r0, c0) + fu * px(r0, c0 + 1)) +
           fv * ((1 - fu) * px(r0 + 1, c0) + fu * px(r0 + 1, c0 + 1));
}

Crossing edge_crossing_distance(const RealGrid& aerial, const LithoConfig& cfg, PointF point,
                                Point direction, double dose) {
    const double t = cfg.resist_threshold;
    auto intensity = [&](double s) {
        return dose * sample_bilinear(aerial, point.x + direction.x * s, point.y + direction.y * s);
    };
    const double i0 = intensity(0.0);
    if (i0 == t) return {0.0, true};
    // Printed at the point: walk outward until the image drops below T_r.
    // Not printed: walk inward until it reaches T_r.
    const double sgn = i0 > t ? 1.0 : -1.0;
    double prev_s = 0.0, prev_i = i0;
    const double step = cfg.search_step_nm;
    for (double s = step; s <= cfg.search_range_nm + 1e-9; s += step) {
        const double cur = intensity(sgn * s);
        if ((sgn > 0) ? (cur < t) : (cur >= t)) {
            const double root = prev_s + (prev_i - t) / (prev_i - cur) * (s - prev_s);
            return {sgn * root, true};
        }
        prev_s = s;
        prev_i = cur;
    }
    return {sgn * cfg.search_range_nm, false};
}

void write_real_grid(const std::string& path, const RealGrid& grid) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write grid file '" + path + "'");
    out << "FGRID " << grid.rows << ' ' << grid.cols << ' ' << grid.pixel_nm << '\n';
    char buf[32];
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", grid.at(r, c));
            out << (c ? " " : "") << buf;
        }
        out << '\n';
    }
}

RealGrid read_real_grid(const std::string& path) {
    std::ifstream in(path);
    std::string tag;
    int rows = 0, cols = 0, pixel = 0;
    if (!(in >> tag >> rows >> cols >> pixel) || tag != "FGRID" || rows <= 0 || cols <= 0)
        throw ValidationError("'" + path + "' is not a float grid file");
    RealGrid g(rows, cols, pixel, 0.0);
    for (double& v : g.data)
        if (!(in >> v)) throw ValidationError("'" + path + "' is truncated");
    return g;
}

}  // namespace opcrecipe
