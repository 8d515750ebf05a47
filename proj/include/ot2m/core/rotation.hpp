#pragma once

#include <array>
#include <span>

#include <Eigen/Core>

namespace ot2m {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using SixD = std::array<double, 6>;

/// Unit quaternion with canonical sign: w >= 0, ties broken so the first
/// nonzero component is positive.
class UnitQuaternion {
 public:
  UnitQuaternion() = default;
  /// Normalizes and canonicalizes. Throws DegenerateRotation on a zero quaternion.
  UnitQuaternion(double w, double x, double y, double z);

  static UnitQuaternion identity() { return {}; }
  static UnitQuaternion from_axis_angle(const Vec3& axis, double angle);
  static UnitQuaternion from_matrix(const Mat3& r);

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }

  Mat3 to_matrix() const;
  double dot(const UnitQuaternion& o) const { return w_ * o.w_ + x_ * o.x_ + y_ * o.y_ + z_ * o.z_; }
  double norm() const;

 private:
  double w_ = 1.0, x_ = 0.0, y_ = 0.0, z_ = 0.0;
};

/// Gram-Schmidt completion of the two leading columns stored in `v`.
Mat3 sixd_to_matrix(std::span<const double, 6> v);
SixD matrix_to_sixd(const Mat3& r);

/// Geodesic interpolation on the shortest arc. Falls back to normalized lerp
/// when the endpoints are within 1e-6 in |dot|.
UnitQuaternion slerp(const UnitQuaternion& q0, const UnitQuaternion& q1, double t);

/// Rotation angle (radians, [0, pi]) between two orientations.
double angular_distance(const UnitQuaternion& a, const UnitQuaternion& b);
double angular_distance(const Mat3& a, const Mat3& b);

/// Rotation about the vertical (+Y) axis.
Mat3 yaw_rotation(double theta);
Mat3 rotation_x(double theta);
Mat3 rotation_z(double theta);

/// Heading of the local forward axis (+Z) projected to the ground plane,
/// measured about +Y, in (-pi, pi]. Throws GimbalDegenerate when forward is
/// within 1e-6 of vertical.
double yaw_of(const Mat3& rotation);

}  // namespace ot2m
