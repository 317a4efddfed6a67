#pragma once

#include <cstdint>
#include <vector>

#include "opcrecipe/geometry.hpp"

namespace opcrecipe {

struct SynthParams {
    int width_nm = 1024;
    int height_nm = 1024;
    int margin_nm = 120;  // polygons stay this far from the clip border
    int min_width_nm = 60;
    int max_width_nm = 100;
    int min_space_nm = 60;
    int min_length_nm = 240;
    int max_length_nm = 640;
    bool allow_jogs = true;
    int min_jog_nm = 16;
    int max_jog_nm = 40;
    int min_shapes = 3;
    int max_shapes = 5;
    int max_attempts = 400;

    void validate() const;
};

/// Deterministic random clip of wires, stepped wires, L-bends and pads.
/// When jogs are allowed the first shape is a stepped wire, so the clip has
/// at least one jog and one line end. Throws ValidationError when the
/// constraints leave no room for a single shape.
LayoutClip synth_clip(std::uint64_t seed, const SynthParams& params);

/// Clips for seeds base_seed, base_seed+1, ... with ids "synth_<seed>".
std::vector<LayoutClip> synth_suite(std::uint64_t base_seed, int count, const SynthParams& params);

}  // namespace opcrecipe
