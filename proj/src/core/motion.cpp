#include "ot2m/core/motion.hpp"

#include <cmath>
#include <string>

#include "ot2m/error.hpp"

namespace ot2m {

MotionSequence::MotionSequence(FrameMatrix frames, double fps, const Skeleton& skeleton)
    : frames_(std::move(frames)), fps_(fps), skeleton_(&skeleton) {
  if (static_cast<std::size_t>(frames_.cols()) != skeleton.feature_dim()) {
    throw Error(ErrorKind::ShapeMismatch, "motion has D=" + std::to_string(frames_.cols()) + ", skeleton expects " +
                                              std::to_string(skeleton.feature_dim()));
  }
  if (frames_.rows() < 1) {
    throw Error(ErrorKind::InvalidArgument, "motion needs at least one frame");
  }
  if (!(fps > 0.0) || !std::isfinite(fps)) {
    throw Error(ErrorKind::InvalidArgument, "fps must be positive");
  }
}

Vec3 MotionSequence::position(std::size_t t, std::size_t joint) const {
  const std::size_t o = skeleton_->block_offset(joint) + 6;
  return {frames_(t, o), frames_(t, o + 1), frames_(t, o + 2)};
}

SixD MotionSequence::sixd(std::size_t t, std::size_t joint) const {
  const std::size_t o = skeleton_->block_offset(joint);
  SixD v;
  for (std::size_t i = 0; i < 6; ++i) v[i] = frames_(t, o + i);
  return v;
}

Mat3 MotionSequence::rotation(std::size_t t, std::size_t joint) const {
  const SixD v = sixd(t, joint);
  return sixd_to_matrix(v);
}

double MotionSequence::root(std::size_t t, std::size_t channel) const {
  return frames_(t, skeleton_->root_offset() + channel);
}

double MotionSequence::contact(std::size_t t, std::size_t channel) const {
  return frames_(t, skeleton_->contact_offset() + channel);
}

Vec3 MotionSequence::root_position(std::size_t t) const {
  const Vec3 mid = 0.5 * (position(t, skeleton_->hip_joints[0]) + position(t, skeleton_->hip_joints[1]));
  return {mid.x(), root(t, root_channel::kHeight), mid.z()};
}

Mat3 MotionSequence::facing(std::size_t t) const { return rotation(t, skeleton_->facing_joint); }

void MotionSequence::validate() const {
  if (!frames_.allFinite()) {
    throw Error(ErrorKind::NonFinite, "motion contains NaN or Inf");
  }
  for (std::size_t t = 0; t < num_frames(); ++t) {
    for (std::size_t c = 0; c < kContactChannels; ++c) {
      const double v = contact(t, c);
      if (v != 0.0 && v != 1.0) {
        throw Error(ErrorKind::InvalidArgument,
                    "contact channel " + std::to_string(c) + " at frame " + std::to_string(t) + " is not 0/1");
      }
    }
    for (std::size_t j = 0; j < skeleton_->num_joints(); ++j) {
      if (j != skeleton_->root) rotation(t, j);
    }
  }
}

MotionSequence MotionSequence::slice(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > num_frames()) {
    throw Error(ErrorKind::IndexOutOfRange, "bad frame range");
  }
  return MotionSequence(frames_.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)),
                        fps_, *skeleton_);
}

PartSet::PartSet(std::size_t num_frames) : frames_(num_frames), data_(num_frames * kNumParts * kPartFeatureDim, 0.0) {}

PartSet::PartSet(std::size_t num_frames, std::vector<double> data) : frames_(num_frames), data_(std::move(data)) {
  if (data_.size() != frames_ * kNumParts * kPartFeatureDim) {
    throw Error(ErrorKind::ShapeMismatch, "part data has " + std::to_string(data_.size()) + " values, expected " +
                                              std::to_string(frames_ * kNumParts * kPartFeatureDim));
  }
}

MotionSequence transform_motion(const MotionSequence& m, double yaw, const Vec3& offset) {
  const Skeleton& sk = m.skeleton();
  const Mat3 r = yaw_rotation(yaw);
  FrameMatrix f = m.frames();
  for (std::size_t t = 0; t < m.num_frames(); ++t) {
    for (std::size_t j = 0; j < sk.num_joints(); ++j) {
      if (j == sk.root) continue;
      const std::size_t o = sk.block_offset(j);
      // The 6D columns rotate linearly, so near-orthonormal inputs pass through.
      const SixD six = m.sixd(t, j);
      const Vec3 c0 = r * Vec3(six[0], six[1], six[2]);
      const Vec3 c1 = r * Vec3(six[3], six[4], six[5]);
      for (std::size_t i = 0; i < 3; ++i) {
        f(t, o + i) = c0[i];
        f(t, o + 3 + i) = c1[i];
      }
      const Vec3 p = r * m.position(t, j) + offset;
      for (std::size_t i = 0; i < 3; ++i) f(t, o + 6 + i) = p[i];
    }
    const std::size_t ro = sk.root_offset();
    const Vec3 v = r * Vec3(m.root(t, root_channel::kVelocityX), 0.0, m.root(t, root_channel::kVelocityZ));
    f(t, ro + root_channel::kVelocityX) = v.x();
    f(t, ro + root_channel::kVelocityZ) = v.z();
    f(t, ro + root_channel::kHeight) += offset.y();
  }
  return MotionSequence(std::move(f), m.fps(), sk);
}

PartSet split_parts(const MotionSequence& m) {
  const Skeleton& sk = m.skeleton();
  PartSet ps(m.num_frames());
  const std::size_t shared = sk.root_offset();
  const std::size_t tail = kRootChannels + kContactChannels;
  for (std::size_t t = 0; t < m.num_frames(); ++t) {
    for (std::size_t p = 0; p < kNumParts; ++p) {
      std::size_t k = 0;
      for (std::size_t joint : sk.part_map[p]) {
        const std::size_t o = sk.block_offset(joint);
        for (std::size_t i = 0; i < kJointFeatureDim; ++i) ps.at(t, p, k++) = m.frames()(t, o + i);
      }
      for (std::size_t i = 0; i < tail; ++i) ps.at(t, p, k++) = m.frames()(t, shared + i);
    }
  }
  return ps;
}

MotionSequence merge_parts(const PartSet& parts, double fps, const Skeleton& sk) {
  const std::size_t frames = parts.num_frames();
  if (frames == 0) {
    throw Error(ErrorKind::ShapeMismatch, "empty part set");
  }
  const std::size_t tail = kRootChannels + kContactChannels;
  const std::size_t shared = sk.root_offset();
  FrameMatrix out = FrameMatrix::Zero(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(sk.feature_dim()));
  std::vector<double> count(sk.feature_dim(), 0.0);
  for (std::size_t p = 0; p < kNumParts; ++p) {
    for (std::size_t joint : sk.part_map[p]) {
      const std::size_t o = sk.block_offset(joint);
      for (std::size_t i = 0; i < kJointFeatureDim; ++i) count[o + i] += 1.0;
    }
    for (std::size_t i = 0; i < tail; ++i) count[shared + i] += 1.0;
  }
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t p = 0; p < kNumParts; ++p) {
      std::size_t k = 0;
      for (std::size_t joint : sk.part_map[p]) {
        const std::size_t o = sk.block_offset(joint);
        for (std::size_t i = 0; i < kJointFeatureDim; ++i) out(t, o + i) += parts.at(t, p, k++);
      }
      for (std::size_t i = 0; i < tail; ++i) out(t, shared + i) += parts.at(t, p, k++);
    }
    for (std::size_t c = 0; c < sk.feature_dim(); ++c) {
      if (count[c] > 0.0) out(t, c) /= count[c];
    }
  }
  return MotionSequence(std::move(out), fps, sk);
}

}  // namespace ot2m
