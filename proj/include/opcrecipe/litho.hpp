#pragma once

#include <string>
#include <vector>

#include "opcrecipe/raster.hpp"

namespace opcrecipe {

// Gaussian-kernel optics with a logistic resist. Dose scales the aerial
// intensity multiplicatively; the process corners sit at 1 +/- dose_delta.
struct LithoConfig {
    double kernel_sigma_nm = 24.0;
    double resist_threshold = 0.225;
    double resist_steepness = 50.0;
    double dose_nominal = 1.0;
    double dose_delta = 0.02;
    int pixel_nm = 4;
    double search_range_nm = 200.0;  // EPE crossing search cap
    double search_step_nm = 1.0;

    void validate() const;
};

struct Kernel {
    int radius = 0;
    std::vector<double> taps;  // normalized 1-D profile, size 2*radius+1
    RealGrid weights;          // outer(taps, taps); sums to 1

    int side() const { return 2 * radius + 1; }
};

/// Isotropic Gaussian truncated at 3 sigma. Throws ConfigError if sigma < pixel.
Kernel make_kernel(double sigma_nm, int pixel_nm);

/// Zero-padded convolution of the mask with the kernel (dose 1).
RealGrid convolve(const BinaryGrid& mask, const Kernel& kernel);
/// Same for a gray (area-coverage) mask with values in [0, 1].
RealGrid convolve(const RealGrid& mask, const Kernel& kernel);

struct SimResult {
    RealGrid aerial;
    RealGrid resist;
    BinaryGrid printed;
};

SimResult simulate(const BinaryGrid& mask, const LithoConfig& cfg, double dose);
SimResult simulate(const BinaryGrid& mask, const LithoConfig& cfg, const Kernel& kernel,
                   double dose);

/// Thresholds a dose-1 aerial image at the given dose: aerial*dose >= T_r.
BinaryGrid print_at_dose(const RealGrid& aerial, const LithoConfig& cfg, double dose);

struct ProcessCorners {
    BinaryGrid nominal;
    BinaryGrid max;
    BinaryGrid min;
};

ProcessCorners process_corners(const BinaryGrid& mask, const LithoConfig& cfg);
/// Same corners from an already computed dose-1 aerial image.
ProcessCorners process_corners_from_aerial(const RealGrid& aerial, const LithoConfig& cfg);

/// Bilinear sample of the grid at a position in nm (pixel centers at
/// (c+0.5)*pixel_nm); samples outside the grid read as 0.
double sample_bilinear(const RealGrid& g, double x_nm, double y_nm);

struct Crossing {
    double distance_nm = 0.0;  // positive: printed contour outside the edge
    bool resolved = true;
};

/// Signed distance from `point` to the first resist-threshold crossing of the
/// (dose-1) aerial image along +/- `direction` (a unit axis vector pointing
/// out of the target). Unresolved searches report +/- search_range_nm.
Crossing edge_crossing_distance(const RealGrid& aerial, const LithoConfig& cfg, PointF point,
                                Point direction, double dose = 1.0);

void write_real_grid(const std::string& path, const RealGrid& grid);
RealGrid read_real_grid(const std::string& path);

}  // namespace opcrecipe
