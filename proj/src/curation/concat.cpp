#include "ot2m/curation/concat.hpp"

#include <cctype>
#include <cmath>

#include "ot2m/error.hpp"

namespace ot2m::curation {

void TransitionConfig::validate() const {
  if (window_frames < 1) {
    throw Error(ErrorKind::InvalidArgument, "transition window must be at least 1 frame");
  }
}

ConcatResult concat_motions(const MotionSequence& a, const MotionSequence& b, const TransitionConfig& cfg) {
  cfg.validate();
  if (a.fps() != b.fps()) {
    throw Error(ErrorKind::FpsMismatch, "cannot concatenate " + std::to_string(a.fps()) + " fps with " +
                                            std::to_string(b.fps()) + " fps");
  }
  if (!(a.skeleton() == b.skeleton())) {
    throw Error(ErrorKind::SkeletonMismatch, "motions use different skeletons");
  }
  const Skeleton& sk = a.skeleton();
  const std::size_t last = a.num_frames() - 1;
  const std::size_t w = cfg.window_frames;

  SeamReport seam;
  seam.yaw_offset = yaw_of(a.facing(last)) - yaw_of(b.facing(0));
  const Vec3 start = yaw_rotation(seam.yaw_offset) * b.root_position(0);
  const Vec3 target = a.root_position(last);
  seam.translation = Vec3(target.x() - start.x(), cfg.align_height ? target.y() - start.y() : 0.0,
                          target.z() - start.z());
  const MotionSequence bb = transform_motion(b, seam.yaw_offset, seam.translation);

  const std::size_t dim = sk.feature_dim();
  FrameMatrix out(static_cast<Eigen::Index>(a.num_frames() + w + bb.num_frames()), static_cast<Eigen::Index>(dim));
  out.topRows(a.frames().rows()) = a.frames();
  out.bottomRows(bb.frames().rows()) = bb.frames();

  std::vector<UnitQuaternion> qa(sk.num_joints()), qb(sk.num_joints());
  for (std::size_t j = 0; j < sk.num_joints(); ++j) {
    if (j == sk.root) continue;
    qa[j] = UnitQuaternion::from_matrix(a.rotation(last, j));
    qb[j] = UnitQuaternion::from_matrix(bb.rotation(0, j));
    seam.max_endpoint_distance = std::max(seam.max_endpoint_distance, angular_distance(qa[j], qb[j]));
  }
  const auto fa = a.frames().row(static_cast<Eigen::Index>(last));
  const auto fb = bb.frames().row(0);
  for (std::size_t k = 1; k <= w; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(w + 1);
    const auto row = static_cast<Eigen::Index>(last + k);
    // Positions and root channels lerp; orientations are overwritten below.
    out.row(row) = (1.0 - t) * fa + t * fb;
    for (std::size_t j = 0; j < sk.num_joints(); ++j) {
      if (j == sk.root) continue;
      const SixD six = matrix_to_sixd(slerp(qa[j], qb[j], t).to_matrix());
      const std::size_t o = sk.block_offset(j);
      for (std::size_t i = 0; i < 6; ++i) out(row, static_cast<Eigen::Index>(o + i)) = six[i];
    }
    const auto& src = t < 0.5 ? fa : fb;
    for (std::size_t c = 0; c < kContactChannels; ++c) {
      const auto col = static_cast<Eigen::Index>(sk.contact_offset() + c);
      out(row, col) = src(col);
    }
  }
  MotionSequence motion(std::move(out), a.fps(), sk);
  for (std::size_t s = last; s < last + w + 1; ++s) {
    for (std::size_t j = 0; j < sk.num_joints(); ++j) {
      if (j == sk.root) continue;
      const double v = angular_distance(motion.rotation(s, j), motion.rotation(s + 1, j));
      if (v > seam.max_angular_velocity) {
        seam.max_angular_velocity = v;
        seam.joint_of_max = j;
      }
    }
  }
  return {std::move(motion), seam};
}

std::string merge_texts(const std::vector<std::string>& texts) {
  if (texts.empty()) {
    throw Error(ErrorKind::EmptyInput, "no texts to merge");
  }
  std::string out;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    std::string s = texts[i];
    const auto first = s.find_first_not_of(" \t\n");
    const auto end = s.find_last_not_of(" \t\n.");
    s = first == std::string::npos || end == std::string::npos || end < first ? "" : s.substr(first, end - first + 1);
    if (s.empty()) {
      throw Error(ErrorKind::EmptyInput, "text " + std::to_string(i) + " is empty");
    }
    s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
    if (i > 0) out += ", then ";
    out += s;
  }
  return out;
}

}  // namespace ot2m::curation
