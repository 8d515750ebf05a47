#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "ot2m/core/motion.hpp"

namespace ot2m::data {

struct RenderOptions {
  std::size_t stride = 10;
  double panel_width = 160.0;   // px per figure
  double panel_height = 240.0;  // px
  double pixels_per_meter = 110.0;
};

/// Frames 0, stride, 2 * stride, ... as front-view (x, y) stick figures laid
/// out left to right, one <g class="figure"> per frame with one <line> per
/// bone from each joint to its parent. Byte-identical for identical input.
/// Throws InvalidArgument when stride is 0.
std::string render_svg(const MotionSequence& m, const RenderOptions& options = {});
/// Throws Io when the file cannot be written.
void render_to_file(const MotionSequence& m, const std::filesystem::path& path, const RenderOptions& options = {});

}  // namespace ot2m::data
