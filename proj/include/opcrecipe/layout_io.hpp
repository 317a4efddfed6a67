#pragma once

#include <string>
#include <string_view>

#include "opcrecipe/geometry.hpp"

namespace opcrecipe {

/// Parses the line-oriented layout format:
///
///     CLIP <id> <width_nm> <height_nm>
///     POLY x1 y1 x2 y2 ...
///
/// Blank lines and lines starting with '#' are ignored. Polygons are
/// normalized to clockwise order and the resulting clip is validated.
LayoutClip parse_layout(std::string_view text);

/// Canonical text form; parse_layout(format_layout(c)) == c for valid clips.
std::string format_layout(const LayoutClip& clip);

LayoutClip read_layout_file(const std::string& path);
void write_layout_file(const std::string& path, const LayoutClip& clip);

}  // namespace opcrecipe
