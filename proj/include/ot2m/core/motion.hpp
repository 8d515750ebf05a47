#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ot2m/core/rotation.hpp"
#include "ot2m/core/skeleton.hpp"

namespace ot2m {

using FrameMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace root_channel {
inline constexpr std::size_t kYawVelocity = 0;  // rad/frame
inline constexpr std::size_t kVelocityX = 1;    // m/frame, world frame
inline constexpr std::size_t kVelocityZ = 2;    // m/frame, world frame
inline constexpr std::size_t kHeight = 3;       // m
}  // namespace root_channel

/// T x D whole-body features at a fixed frame rate.
///
/// Per non-root joint: world orientation in 6D form then world position
/// (meters, Y up). Then 4 root channels and 4 binary contact channels.
/// Construction checks shape, T >= 1 and fps > 0; `validate()` checks the
/// value-level invariants.
class MotionSequence {
 public:
  MotionSequence(FrameMatrix frames, double fps, const Skeleton& skeleton = Skeleton::body());

  std::size_t num_frames() const { return static_cast<std::size_t>(frames_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(frames_.cols()); }
  double fps() const { return fps_; }
  const FrameMatrix& frames() const { return frames_; }
  const Skeleton& skeleton() const { return *skeleton_; }

  Vec3 position(std::size_t t, std::size_t joint) const;
  SixD sixd(std::size_t t, std::size_t joint) const;
  Mat3 rotation(std::size_t t, std::size_t joint) const;
  double root(std::size_t t, std::size_t channel) const;
  double contact(std::size_t t, std::size_t channel) const;

  /// Hip midpoint in x/z, root-height channel in y.
  Vec3 root_position(std::size_t t) const;
  /// Orientation of the skeleton's facing joint.
  Mat3 facing(std::size_t t) const;

  /// Throws NonFinite, InvalidArgument (non-binary contact) or DegenerateRotation.
  void validate() const;

  MotionSequence slice(std::size_t begin, std::size_t end) const;

 private:
  FrameMatrix frames_;
  double fps_;
  const Skeleton* skeleton_;
};

/// T x 5 x 71 part-decomposed view; part order follows `Part`.
class PartSet {
 public:
  explicit PartSet(std::size_t num_frames);
  PartSet(std::size_t num_frames, std::vector<double> data);

  std::size_t num_frames() const { return frames_; }
  double& at(std::size_t t, std::size_t part, std::size_t k) { return data_[index(t, part, k)]; }
  double at(std::size_t t, std::size_t part, std::size_t k) const { return data_[index(t, part, k)]; }
  std::span<const double> feature(std::size_t t, std::size_t part) const {
    return {data_.data() + index(t, part, 0), kPartFeatureDim};
  }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  std::size_t index(std::size_t t, std::size_t part, std::size_t k) const {
    return (t * kNumParts + part) * kPartFeatureDim + k;
  }
  std::size_t frames_;
  std::vector<double> data_;
};

/// Rotates the whole motion by `yaw` about +Y, then translates by `offset`.
/// Orientations, positions and root velocities rotate; the root height
/// channel moves with offset.y.
MotionSequence transform_motion(const MotionSequence& m, double yaw, const Vec3& offset);

PartSet split_parts(const MotionSequence& m);
/// Shared joints and the replicated root/contact channels are averaged over
/// every part holding a copy.
MotionSequence merge_parts(const PartSet& parts, double fps, const Skeleton& skeleton = Skeleton::body());

/// "OT2M" binary motion file, float32 little-endian payload.
void write_motion(const std::filesystem::path& path, const MotionSequence& m);
MotionSequence read_motion(const std::filesystem::path& path);
std::vector<char> encode_motion(const MotionSequence& m);
MotionSequence decode_motion(std::span<const char> bytes);

}  // namespace ot2m
