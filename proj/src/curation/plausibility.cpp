#include "ot2m/curation/plausibility.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <json.hpp>

#include "ot2m/error.hpp"

namespace ot2m::curation {

double foot_slide_score(const MotionSequence& m) {
  const Skeleton& sk = m.skeleton();
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t c = 0; c < kContactChannels; ++c) {
    const std::size_t joint = sk.contact_joints[c];
    for (std::size_t t = 0; t + 1 < m.num_frames(); ++t) {
      if (m.contact(t, c) != 1.0) continue;
      const Vec3 d = m.position(t + 1, joint) - m.position(t, joint);
      total += std::hypot(d.x(), d.z());
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

double jitter_score(const MotionSequence& m) {
  const std::size_t frames = m.num_frames();
  if (frames < 4) {
    throw Error(ErrorKind::TooShort, "jitter needs at least 4 frames, got " + std::to_string(frames));
  }
  const Skeleton& sk = m.skeleton();
  const double scale = m.fps() * m.fps() * m.fps();
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < sk.num_joints(); ++j) {
    if (j == sk.root) continue;
    for (std::size_t t = 0; t + 3 < frames; ++t) {
      const Vec3 jerk =
          (m.position(t + 3, j) - 3.0 * m.position(t + 2, j) + 3.0 * m.position(t + 1, j) - m.position(t, j)) * scale;
      total += jerk.squaredNorm();
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

double penetration_score(const MotionSequence& m) {
  const Skeleton& sk = m.skeleton();
  std::vector<double> depth(m.num_frames());
  for (std::size_t t = 0; t < m.num_frames(); ++t) {
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < sk.num_joints(); ++j) {
      if (j != sk.root) lowest = std::min(lowest, m.position(t, j).y());
    }
    depth[t] = std::max(0.0, -lowest);
  }
  std::sort(depth.begin(), depth.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(depth.size())));
  return depth[std::max<std::size_t>(rank, 1) - 1];
}

std::string PlausibilityReport::to_json() const {
  return nlohmann::json{{"foot_slide", foot_slide}, {"jitter", jitter}, {"penetration", penetration}, {"pass", pass}}
      .dump();
}

PlausibilityReport score_plausibility(const MotionSequence& m, const PlausibilityThresholds& th) {
  PlausibilityReport r;
  r.foot_slide = foot_slide_score(m);
  r.jitter = jitter_score(m);
  r.penetration = penetration_score(m);
  r.pass = r.foot_slide <= th.foot_slide && r.jitter <= th.jitter && r.penetration <= th.penetration;
  return r;
}

}  // namespace ot2m::curation
