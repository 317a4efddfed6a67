#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "opcrecipe/geometry.hpp"

namespace opcrecipe {

// Row-major image over a clip. Cell (r, c) covers
// [c*pixel_nm, (c+1)*pixel_nm) x [r*pixel_nm, (r+1)*pixel_nm); row 0 is y = 0.
template <typename T>
struct Grid {
    int rows = 0;
    int cols = 0;
    int pixel_nm = 1;
    std::vector<T> data;

    Grid() = default;
    Grid(int rows_, int cols_, int pixel_nm_, T fill = T{})
        : rows(rows_), cols(cols_), pixel_nm(pixel_nm_),
          data(static_cast<std::size_t>(rows_) * cols_, fill) {}

    T& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    const T& at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Grid& o) const { return rows == o.rows && cols == o.cols; }

    friend bool operator==(const Grid&, const Grid&) = default;
};

using BinaryGrid = Grid<std::uint8_t>;
using RealGrid = Grid<double>;

std::int64_t popcount(const BinaryGrid& g);

/// Cell-center rule: a cell is 1 iff its center lies inside some polygon.
/// Throws ConfigError when the clip extent is not a multiple of pixel_nm.
BinaryGrid rasterize(const LayoutClip& clip, int pixel_nm);

/// Same rule for free polygons (may overlap or leave the grid; clipped).
BinaryGrid rasterize_polygons(std::span<const Polygon> polys, int width_nm, int height_nm,
                              int pixel_nm);

/// Exact area fraction of each cell covered by the polygons, clamped to 1.
/// Equals the cell-center raster when every vertex lies on the pixel lattice.
RealGrid coverage_raster(std::span<const Polygon> polys, int width_nm, int height_nm,
                         int pixel_nm);

}  // namespace opcrecipe
