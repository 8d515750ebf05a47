#include "ot2m/core/skeleton.hpp"

#include <algorithm>

#include "ot2m/error.hpp"

namespace ot2m {

const Skeleton& Skeleton::body() {
  static const Skeleton skeleton = [] {
    using namespace joints;
    Skeleton s;
    s.joint_names = {"pelvis",     "l_hip",      "r_hip",      "spine1",     "l_knee",   "r_knee",
                     "spine2",     "l_ankle",    "r_ankle",    "spine3",     "l_foot",   "r_foot",
                     "neck",       "l_collar",   "r_collar",   "head",       "l_shoulder", "r_shoulder",
                     "l_elbow",    "r_elbow",    "l_wrist",    "r_wrist"};
    s.parents = {-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19};
    s.part_map = {{
        {kSpine1, kSpine2, kSpine3, kLeftCollar, kLeftShoulder, kLeftElbow, kLeftWrist},
        {kSpine1, kSpine2, kSpine3, kLeftHip, kLeftKnee, kLeftAnkle, kLeftFoot},
        {kSpine1, kSpine2, kSpine3, kNeck, kLeftCollar, kRightCollar, kHead},
        {kSpine1, kSpine2, kSpine3, kRightHip, kRightKnee, kRightAnkle, kRightFoot},
        {kSpine1, kSpine2, kSpine3, kRightCollar, kRightShoulder, kRightElbow, kRightWrist},
    }};
    s.root = kPelvis;
    s.contact_joints = {kLeftAnkle, kLeftFoot, kRightAnkle, kRightFoot};
    s.hip_joints = {kLeftHip, kRightHip};
    s.facing_joint = kSpine1;
    return s;
  }();
  return skeleton;
}

std::size_t Skeleton::block_offset(std::size_t joint) const {
  if (joint == root || joint >= num_joints()) {
    throw Error(ErrorKind::IndexOutOfRange, "joint " + std::to_string(joint) + " has no feature block");
  }
  const std::size_t slot = joint < root ? joint : joint - 1;
  return slot * kJointFeatureDim;
}

std::size_t Skeleton::joint_index(const std::string& name) const {
  const auto it = std::find(joint_names.begin(), joint_names.end(), name);
  if (it == joint_names.end()) {
    throw Error(ErrorKind::InvalidArgument, "unknown joint '" + name + "'");
  }
  return static_cast<std::size_t>(it - joint_names.begin());
}

std::size_t Skeleton::part_multiplicity(std::size_t joint) const {
  std::size_t count = 0;
  for (const auto& group : part_map) {
    count += static_cast<std::size_t>(std::count(group.begin(), group.end(), joint));
  }
  return count;
}

}  // namespace ot2m
