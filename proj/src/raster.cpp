#include "opcrecipe/raster.hpp"

#include <algorithm>
#include <cstdint>

#include "opcrecipe/error.hpp"

namespace opcrecipe {

namespace {

// Smallest integer c with (c + 0.5) * p >= x, i.e. ceil((2x - p) / 2p).
int first_center_at_or_after(int x, int p) {
    const long num = 2L * x - p, den = 2L * p;
    return static_cast<int>(num >= 0 ? (num + den - 1) / den : -((-num) / den));
}

void fill_polygon(BinaryGrid& g, const Polygon& poly) {
    const int p = g.pixel_nm;
    const BBox b = bbox(poly);
    const int r0 = std::max(0, first_center_at_or_after(b.ymin, p));
    const int r1 = std::min(g.rows, first_center_at_or_after(b.ymax, p));
    std::vector<int> xs;
    const std::size_t n = poly.size();
    for (int r = r0; r < r1; ++r) {
        const long y2 = 2L * r * p + p;  // twice the center ordinate
        xs.clear();
        for (std::size_t i = 0; i < n; ++i) {
            const Point a = poly.vertices[i], c = poly.vertices[(i + 1) % n];
            if (a.x != c.x) continue;
            const long lo = 2L * std::min(a.y, c.y), hi = 2L * std::max(a.y, c.y);
            if (y2 >= lo && y2 < hi) xs.push_back(a.x);
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
            const int c0 = std::max(0, first_center_at_or_after(xs[k], p));
            const int c1 = std::min(g.cols, first_center_at_or_after(xs[k + 1], p));
            for (int c = c0; c < c1; ++c) g.at(r, c) = 1;
        }
    }
}

}  // namespace

std::int64_t popcount(const BinaryGrid& g) {
    std::int64_t n = 0;
    for (auto v : g.data) n += v != 0;
    return n;
}

BinaryGrid rasterize_polygons(std::span<const Polygon> polys, int width_nm, int height_nm,
                              int pixel_nm) {
    if (pixel_nm <= 0) throw ConfigError("pixel_nm must be positive");
    if (width_nm % pixel_nm != 0 || height_nm % pixel_nm != 0)
        throw ConfigError("clip extent " + std::to_string(width_nm) + "x" +
                          std::to_string(height_nm) + " is not divisible by pixel_nm " +
                          std::to_string(pixel_nm));
    BinaryGrid g(height_nm / pixel_nm, width_nm / pixel_nm, pixel_nm, 0);
    for (const Polygon& poly : polys) fill_polygon(g, poly);
    return g;
}

RealGrid coverage_raster(std::span<const Polygon> polys, int width_nm, int height_nm,
                         int pixel_nm) {
    if (pixel_nm <= 0) throw ConfigError("pixel_nm must be positive");
    if (width_nm % pixel_nm != 0 || height_nm % pixel_nm != 0)
        throw ConfigError("clip extent is not divisible by pixel_nm");
    const int p = pixel_nm, rows = height_nm / p, cols = width_nm / p;
    // Each upward vertical edge adds the area to its right, each downward edge
    // subtracts it. Accumulated as integer nm^2 with a per-row difference array.
    std::vector<std::int64_t> acc(static_cast<std::size_t>(rows) * (cols + 1), 0);
    for (const Polygon& poly : polys) {
        const std::size_t n = poly.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Point a = poly.vertices[i], b = poly.vertices[(i + 1) % n];
            if (a.x != b.x) continue;
            const int sgn = b.y > a.y ? 1 : -1;
            const int ylo = std::max(0, std::min(a.y, b.y)), yhi = std::min(height_nm, std::max(a.y, b.y));
            const int x = std::clamp(a.x, 0, width_nm);
            const int c = std::min(x / p, cols - 1);
            for (int r = ylo / p; r < rows && r * p < yhi; ++r) {
                const int oy = std::min(yhi, (r + 1) * p) - std::max(ylo, r * p);
                if (oy <= 0) continue;
                std::int64_t* row = &acc[static_cast<std::size_t>(r) * (cols + 1)];
                if (x >= width_nm) continue;
                const std::int64_t part = std::int64_t(sgn) * oy * ((c + 1) * p - x);
                row[c] += part;
                row[c + 1] -= part;
                row[c + 1] += std::int64_t(sgn) * oy * p;
            }
        }
    }
    RealGrid g(rows, cols, p, 0.0);
    const double inv = 1.0 / (double(p) * p);
    for (int r = 0; r < rows; ++r) {
        const std::int64_t* row = &acc[static_cast<std::size_t>(r) * (cols + 1)];
        std::int64_t run = 0;
        for (int c = 0; c < cols; ++c) {
            run += row[c];
            g.at(r, c) = std::min(1.0, double(run) * inv);
        }
    }
    return g;
}

BinaryGrid rasterize(const LayoutClip& clip, int pixel_nm) {
    return rasterize_polygons(clip.polygons, clip.width_nm, clip.height_nm, pixel_nm);
}

}  // namespace opcrecipe
