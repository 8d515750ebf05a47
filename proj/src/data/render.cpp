#include "ot2m/data/render.hpp"

#include <cstdio>

#include "ot2m/binary_io.hpp"
#include "ot2m/error.hpp"

namespace ot2m::data {

std::string render_svg(const MotionSequence& m, const RenderOptions& options) {
  if (options.stride == 0) {
    throw Error(ErrorKind::InvalidArgument, "render stride must be positive");
  }
  const Skeleton& sk = m.skeleton();
  const std::size_t figures = (m.num_frames() + options.stride - 1) / options.stride;
  const double width = options.panel_width * static_cast<double>(figures);
  const double ground = options.panel_height - 20.0;
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                width, options.panel_height, width, options.panel_height);
  out += buf;
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t f = 0; f < figures; ++f) {
    const std::size_t t = f * options.stride;
    const Vec3 root = m.root_position(t);
    const double cx = options.panel_width * (static_cast<double>(f) + 0.5);
    auto project = [&](const Vec3& p) {
      return std::pair<double, double>{cx + (p.x() - root.x()) * options.pixels_per_meter,
                                       ground - p.y() * options.pixels_per_meter};
    };
    auto joint_position = [&](std::size_t j) { return j == sk.root ? root : m.position(t, j); };
    std::snprintf(buf, sizeof buf, "<g class=\"figure\" data-frame=\"%zu\" stroke=\"black\" stroke-width=\"2\">\n", t);
    out += buf;
    std::snprintf(buf, sizeof buf, "<line class=\"ground\" x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#999\"/>\n",
                  cx - 0.45 * options.panel_width, ground, cx + 0.45 * options.panel_width, ground);
    out += buf;
    for (std::size_t j = 0; j < sk.num_joints(); ++j) {
      if (sk.parents[j] < 0) continue;
      const auto [x1, y1] = project(joint_position(static_cast<std::size_t>(sk.parents[j])));
      const auto [x2, y2] = project(joint_position(j));
      std::snprintf(buf, sizeof buf,
                    "<line class=\"bone\" data-joint=\"%zu\" data-parent=\"%d\" x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" "
                    "y2=\"%.2f\"/>\n",
                    j, sk.parents[j], x1, y1, x2, y2);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\" font-size=\"12\" stroke=\"none\">t=%zu</text>\n",
                  cx - 0.45 * options.panel_width, 14.0, t);
    out += buf;
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

void render_to_file(const MotionSequence& m, const std::filesystem::path& path, const RenderOptions& options) {
  const std::string svg = render_svg(m, options);
  binary::write_file(path, std::span<const char>(svg.data(), svg.size()));
}

}  // namespace ot2m::data
