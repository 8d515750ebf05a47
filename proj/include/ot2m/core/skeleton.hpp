#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace ot2m {

inline constexpr std::size_t kNumParts = 5;
inline constexpr std::size_t kJointsPerPart = 7;
inline constexpr std::size_t kJointFeatureDim = 9;  // 6D rotation + 3D position
inline constexpr std::size_t kRootChannels = 4;
inline constexpr std::size_t kContactChannels = 4;
inline constexpr std::size_t kPartFeatureDim =
    kJointsPerPart * kJointFeatureDim + kRootChannels + kContactChannels;  // 71

enum class Part : std::size_t { LeftArm = 0, LeftLeg = 1, Torso = 2, RightLeg = 3, RightArm = 4 };

/// Kinematic tree plus the five-part grouping used by the tokenizer.
///
/// The root joint (pelvis) carries no 9-dim feature block; it is described
/// only by the four root channels, which every part replicates. All other
/// joints own one block in joint-index order.
struct Skeleton {
  std::vector<std::string> joint_names;
  std::vector<int> parents;
  std::array<std::array<std::size_t, kJointsPerPart>, kNumParts> part_map{};
  std::size_t root = 0;
  /// Joints whose heights drive the four contact channels, in channel order.
  std::array<std::size_t, kContactChannels> contact_joints{};
  /// Joints whose midpoint defines the horizontal root position.
  std::array<std::size_t, 2> hip_joints{};
  /// Joint whose orientation defines the facing direction of a frame.
  std::size_t facing_joint = 0;

  /// 22-joint body skeleton (no hands or face).
  static const Skeleton& body();

  std::size_t num_joints() const { return joint_names.size(); }
  std::size_t feature_dim() const { return kJointFeatureDim * (num_joints() - 1) + kRootChannels + kContactChannels; }
  /// Offset of a joint's 9-dim block in the whole-body vector. Root has none.
  std::size_t block_offset(std::size_t joint) const;
  std::size_t root_offset() const { return kJointFeatureDim * (num_joints() - 1); }
  std::size_t contact_offset() const { return root_offset() + kRootChannels; }
  std::size_t joint_index(const std::string& name) const;
  /// Number of parts listing `joint`.
  std::size_t part_multiplicity(std::size_t joint) const;

  bool operator==(const Skeleton&) const = default;
};

namespace joints {
inline constexpr std::size_t kPelvis = 0, kLeftHip = 1, kRightHip = 2, kSpine1 = 3, kLeftKnee = 4,
                             kRightKnee = 5, kSpine2 = 6, kLeftAnkle = 7, kRightAnkle = 8, kSpine3 = 9,
                             kLeftFoot = 10, kRightFoot = 11, kNeck = 12, kLeftCollar = 13,
                             kRightCollar = 14, kHead = 15, kLeftShoulder = 16, kRightShoulder = 17,
                             kLeftElbow = 18, kRightElbow = 19, kLeftWrist = 20, kRightWrist = 21;
}

}  // namespace ot2m
