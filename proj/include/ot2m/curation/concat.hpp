#pragma once

#include <string>
#include <vector>

#include "ot2m/core/motion.hpp"

namespace ot2m::curation {

struct TransitionConfig {
  std::size_t window_frames = 8;
  /// Also match root height at the seam.
  bool align_height = false;

  void validate() const;
};

struct SeamReport {
  double yaw_offset = 0.0;                 // rotation applied to b (rad)
  Vec3 translation = Vec3::Zero();         // translation applied to b after rotation
  double max_angular_velocity = 0.0;       // rad/frame over every joint, a.last .. b.first
  std::size_t joint_of_max = 0;
  double max_endpoint_distance = 0.0;      // largest joint geodesic between a.last and aligned b.first
};

struct ConcatResult {
  MotionSequence motion;
  SeamReport seam;
};

/// a, a W-frame transition, then b aligned to a's last frame (yaw of the
/// facing joint, horizontal root position). Transition frames slerp joint
/// orientations and lerp positions and root channels at t = k / (W + 1);
/// contacts come from the nearer endpoint. Throws FpsMismatch, SkeletonMismatch.
ConcatResult concat_motions(const MotionSequence& a, const MotionSequence& b, const TransitionConfig& cfg = {});

/// Lowercases each clause's first letter, strips trailing periods and joins
/// with ", then ". Throws EmptyInput.
std::string merge_texts(const std::vector<std::string>& texts);

}  // namespace ot2m::curation
