#include "ot2m/core/rotation.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "ot2m/error.hpp"

namespace ot2m {

UnitQuaternion::UnitQuaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!(n > 1e-300) || !std::isfinite(n)) {
    throw Error(ErrorKind::DegenerateRotation, "quaternion with zero or non-finite norm");
  }
  w_ = w / n;
  x_ = x / n;
  y_ = y / n;
  z_ = z / n;
  bool flip = false;
  if (w_ != 0.0) {
    flip = w_ < 0.0;
  } else if (x_ != 0.0) {
    flip = x_ < 0.0;
  } else if (y_ != 0.0) {
    flip = y_ < 0.0;
  } else {
    flip = z_ < 0.0;
  }
  if (flip) {
    w_ = -w_;
    x_ = -x_;
    y_ = -y_;
    z_ = -z_;
  }
}

UnitQuaternion UnitQuaternion::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (!(n > 1e-12)) {
    throw Error(ErrorKind::DegenerateRotation, "zero rotation axis");
  }
  const Vec3 a = axis / n;
  const double s = std::sin(0.5 * angle);
  return {std::cos(0.5 * angle), a.x() * s, a.y() * s, a.z() * s};
}

UnitQuaternion UnitQuaternion::from_matrix(const Mat3& r) {
  const Eigen::Quaterniond q(r);
  return {q.w(), q.x(), q.y(), q.z()};
}

Mat3 UnitQuaternion::to_matrix() const {
  return Eigen::Quaterniond(w_, x_, y_, z_).toRotationMatrix();
}

double UnitQuaternion::norm() const { return std::sqrt(dot(*this)); }

Mat3 sixd_to_matrix(std::span<const double, 6> v) {
  const Vec3 a1(v[0], v[1], v[2]);
  const Vec3 a2(v[3], v[4], v[5]);
  const double n1 = a1.norm();
  if (!(n1 > 1e-8)) {
    throw Error(ErrorKind::DegenerateRotation, "first 6D column has norm <= 1e-8");
  }
  const Vec3 b1 = a1 / n1;
  const Vec3 u2 = a2 - b1.dot(a2) * b1;
  const double n2 = u2.norm();
  if (!(n2 > 1e-8)) {
    throw Error(ErrorKind::DegenerateRotation, "second 6D column is parallel to the first");
  }
  const Vec3 b2 = u2 / n2;
  Mat3 r;
  r.col(0) = b1;
  r.col(1) = b2;
  r.col(2) = b1.cross(b2);
  return r;
}

SixD matrix_to_sixd(const Mat3& r) {
  return {r(0, 0), r(1, 0), r(2, 0), r(0, 1), r(1, 1), r(2, 1)};
}

UnitQuaternion slerp(const UnitQuaternion& q0, const UnitQuaternion& q1, double t) {
  double w1 = q1.w(), x1 = q1.x(), y1 = q1.y(), z1 = q1.z();
  double d = q0.dot(q1);
  if (d < 0.0) {
    d = -d;
    w1 = -w1;
    x1 = -x1;
    y1 = -y1;
    z1 = -z1;
  }
  double s0 = 1.0 - t;
  double s1 = t;
  if (d <= 1.0 - 1e-6) {
    const double theta = std::acos(d);
    const double sin_theta = std::sin(theta);
    s0 = std::sin((1.0 - t) * theta) / sin_theta;
    s1 = std::sin(t * theta) / sin_theta;
  }
  return {s0 * q0.w() + s1 * w1, s0 * q0.x() + s1 * x1, s0 * q0.y() + s1 * y1,
          s0 * q0.z() + s1 * z1};
}

double angular_distance(const UnitQuaternion& a, const UnitQuaternion& b) {
  // relative rotation conj(a) * b
  const double w = a.w() * b.w() + a.x() * b.x() + a.y() * b.y() + a.z() * b.z();
  const double x = a.w() * b.x() - a.x() * b.w() - a.y() * b.z() + a.z() * b.y();
  const double y = a.w() * b.y() + a.x() * b.z() - a.y() * b.w() - a.z() * b.x();
  const double z = a.w() * b.z() - a.x() * b.y() + a.y() * b.x() - a.z() * b.w();
  const double v = std::sqrt(x * x + y * y + z * z);
  return 2.0 * std::atan2(v, std::abs(w));
}

double angular_distance(const Mat3& a, const Mat3& b) {
  return angular_distance(UnitQuaternion::from_matrix(a), UnitQuaternion::from_matrix(b));
}

Mat3 yaw_rotation(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat3 r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

Mat3 rotation_x(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

Mat3 rotation_z(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat3 r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

double yaw_of(const Mat3& rotation) {
  const Vec3 forward = rotation.col(2);
  const double horizontal = std::hypot(forward.x(), forward.z());
  if (horizontal < 1e-6) {
    throw Error(ErrorKind::GimbalDegenerate, "forward axis is within 1e-6 of vertical");
  }
  double yaw = std::atan2(forward.x(), forward.z());
  if (yaw <= -std::numbers::pi) {
    yaw = std::numbers::pi;
  }
  return yaw;
}

}  // namespace ot2m
