#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/LU>

#include "doctest.h"
#include "ot2m/core/motion.hpp"
#include "ot2m/core/rotation.hpp"
#include "ot2m/error.hpp"
#include "test_support.hpp"

using namespace ot2m;

namespace {

double max_abs(const Mat3& a, const Mat3& b) { return (a - b).cwiseAbs().maxCoeff(); }

// Axis-angle oracle: rotation by `angle` about a unit axis (Rodrigues).
Mat3 rodrigues(const Vec3& axis, double angle) {
  const Vec3 k = axis.normalized();
  Mat3 kx;
  kx << 0, -k.z(), k.y(), k.z(), 0, -k.x(), -k.y(), k.x(), 0;
  return Mat3::Identity() + std::sin(angle) * kx + (1.0 - std::cos(angle)) * kx * kx;
}

}  // namespace

TEST_CASE("sixd_to_matrix examples") {
  const SixD canonical{1, 0, 0, 0, 1, 0};
  CHECK(max_abs(sixd_to_matrix(canonical), Mat3::Identity()) == 0.0);

  const SixD scaled{2, 0, 0, 0, 3, 0};
  CHECK(max_abs(sixd_to_matrix(scaled), Mat3::Identity()) == 0.0);

  // Hand Gram-Schmidt: b1 = (0,1,0); (1,1,0) - (b1.a2) b1 = (1,0,0); b3 = b1 x b2 = (0,0,-1).
  const SixD v{0, 1, 0, 1, 1, 0};
  Mat3 expected;
  expected.col(0) = Vec3(0, 1, 0);
  expected.col(1) = Vec3(1, 0, 0);
  expected.col(2) = Vec3(0, 0, -1);
  CHECK(max_abs(sixd_to_matrix(v), expected) < 1e-15);
}

TEST_CASE("sixd_to_matrix rejects degenerate input") {
  const SixD zero_first{0, 0, 0, 0, 1, 0};
  const SixD parallel{1, 0, 0, 2, 0, 0};
  CHECK_THROWS_AS(sixd_to_matrix(zero_first), Error);
  try {
    sixd_to_matrix(parallel);
    FAIL("expected DegenerateRotation");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateRotation);
  }
}

TEST_CASE("sixd_to_matrix is orthonormal with det +1") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int i = 0; i < 500; ++i) {
    SixD v;
    for (auto& x : v) x = n(rng);
    const Mat3 r = sixd_to_matrix(v);
    CHECK((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(std::abs(r.determinant() - 1.0) <= 1e-10);
    const Vec3 first = Vec3(v[0], v[1], v[2]).normalized();
    CHECK((r.col(0) - first).norm() < 1e-12);
  }
}

TEST_CASE("unit quaternion canonical sign") {
  const UnitQuaternion q(-0.5, 0.5, -0.5, 0.5);
  CHECK(q.w() > 0.0);
  const UnitQuaternion zero_w(0.0, -1.0, 0.0, 0.0);
  CHECK(zero_w.x() == 1.0);
  const UnitQuaternion only_z(0.0, 0.0, 0.0, -3.0);
  CHECK(only_z.z() == 1.0);
  CHECK(std::abs(q.norm() - 1.0) < 1e-12);
}

TEST_CASE("slerp examples") {
  const auto id = UnitQuaternion::identity();
  const Vec3 z(0, 0, 1);
  const auto q90 = UnitQuaternion::from_axis_angle(z, std::numbers::pi / 2);

  const auto q = UnitQuaternion::from_axis_angle(Vec3(1, 2, 3), 0.8);
  CHECK(max_abs(slerp(q, q, 0.7).to_matrix(), q.to_matrix()) < 1e-12);

  CHECK(max_abs(slerp(id, q90, 0.5).to_matrix(), rodrigues(z, std::numbers::pi / 4)) < 1e-12);
  CHECK(max_abs(slerp(id, q90, 0.25).to_matrix(), rodrigues(z, std::numbers::pi / 8)) < 1e-12);
  CHECK(max_abs(slerp(id, q90, 0.0).to_matrix(), Mat3::Identity()) < 1e-15);
  CHECK(max_abs(slerp(id, q90, 1.0).to_matrix(), q90.to_matrix()) < 1e-15);
}

TEST_CASE("slerp follows the axis-angle oracle on random arcs") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    const Mat3 r0 = testing::random_rotation(rng);
    const Vec3 axis(n(rng), n(rng), n(rng));
    const double angle = 3.0 * u(rng);  // < pi, so the short arc is this one
    const Mat3 r1 = rodrigues(axis, angle) * r0;
    const double t = u(rng);
    const auto q = slerp(UnitQuaternion::from_matrix(r0), UnitQuaternion::from_matrix(r1), t);
    CHECK(max_abs(q.to_matrix(), rodrigues(axis, t * angle) * r0) < 1e-9);
  }
}

TEST_CASE("slerp takes the shortest arc for antipodal representatives") {
  const auto a = UnitQuaternion::from_axis_angle(Vec3(0, 1, 0), 0.2);
  const auto b = UnitQuaternion::from_axis_angle(Vec3(0, 1, 0), -0.2);
  const Mat3 mid = slerp(a, b, 0.5).to_matrix();
  CHECK(max_abs(mid, Mat3::Identity()) < 1e-12);
}

TEST_CASE("slerp has unit norm and bounded steps") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto q0 = UnitQuaternion::from_matrix(testing::random_rotation(rng));
    const auto q1 = UnitQuaternion::from_matrix(testing::random_rotation(rng));
    const double arc = angular_distance(q0, q1);
    UnitQuaternion prev = q0;
    double worst_step = 0.0;
    for (int k = 0; k <= 1000; ++k) {
      const auto q = slerp(q0, q1, k * 1e-3);
      CHECK(std::abs(q.norm() - 1.0) <= 1e-9);
      worst_step = std::max(worst_step, angular_distance(prev, q));
      prev = q;
    }
    CHECK(worst_step <= arc * 1e-3 + 1e-9);
  }
}

TEST_CASE("slerp near-identical endpoints uses normalized lerp") {
  const auto a = UnitQuaternion::from_axis_angle(Vec3(1, 0, 0), 1e-5);
  const auto b = UnitQuaternion::from_axis_angle(Vec3(1, 0, 0), 2e-5);
  const auto q = slerp(a, b, 0.5);
  CHECK(std::abs(q.norm() - 1.0) < 1e-12);
  CHECK(std::abs(angular_distance(a, q) - 0.5e-5) < 1e-10);
}

TEST_CASE("yaw_of examples") {
  CHECK(yaw_of(Mat3::Identity()) == 0.0);
  CHECK(std::abs(yaw_of(yaw_rotation(std::numbers::pi / 2)) - std::numbers::pi / 2) < 1e-15);
  // Forward (0,0,1) -> Rx(0.2) -> (0, -sin .2, cos .2) -> yaw(pi/3) keeps heading pi/3.
  CHECK(std::abs(yaw_of(yaw_rotation(std::numbers::pi / 3) * rotation_x(0.2)) - std::numbers::pi / 3) <= 1e-9);
  CHECK(yaw_of(yaw_rotation(std::numbers::pi)) == doctest::Approx(std::numbers::pi));
  CHECK_THROWS_AS(yaw_of(rotation_x(std::numbers::pi / 2)), Error);
}

TEST_CASE("yaw_of inverts yaw_rotation on (-pi, pi]") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  for (int i = 0; i < 1000; ++i) {
    double theta = u(rng);
    if (theta == -std::numbers::pi) theta = std::numbers::pi;
    CHECK(std::abs(yaw_of(yaw_rotation(theta)) - theta) <= 1e-9);
  }
}

TEST_CASE("skeleton part map") {
  const Skeleton& sk = Skeleton::body();
  CHECK(sk.num_joints() == 22);
  CHECK(sk.feature_dim() == 197);
  CHECK(kPartFeatureDim == 71);
  for (const auto& group : sk.part_map) {
    CHECK(group.size() == 7);
    CHECK(group[0] == sk.joint_index("spine1"));
    CHECK(group[1] == sk.joint_index("spine2"));
    CHECK(group[2] == sk.joint_index("spine3"));
  }
  CHECK(sk.part_map[static_cast<std::size_t>(Part::Torso)][3] == sk.joint_index("neck"));
  CHECK(sk.part_map[static_cast<std::size_t>(Part::RightArm)][6] == sk.joint_index("r_wrist"));
  CHECK(sk.part_multiplicity(sk.joint_index("l_collar")) == 2);
  CHECK(sk.part_multiplicity(sk.joint_index("spine2")) == 5);
  for (std::size_t j = 1; j < sk.num_joints(); ++j) CHECK(sk.part_multiplicity(j) >= 1);
  CHECK(sk.part_multiplicity(sk.root) == 0);
}

TEST_CASE("motion construction checks shape and fps") {
  FrameMatrix bad = FrameMatrix::Zero(3, 100);
  try {
    MotionSequence m(bad, 20.0);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ShapeMismatch);
  }
  CHECK_THROWS_AS(MotionSequence(FrameMatrix::Zero(3, 197), 0.0), Error);
  CHECK_THROWS_AS(MotionSequence(FrameMatrix::Zero(0, 197), 20.0), Error);
}

TEST_CASE("motion validation") {
  auto m = testing::random_motion(5, 1);
  CHECK_NOTHROW(m.validate());
  FrameMatrix f = m.frames();
  f(2, Skeleton::body().contact_offset()) = 0.5;
  CHECK_THROWS_AS(MotionSequence(f, 20.0).validate(), Error);
  f = m.frames();
  f(1, 3) = std::nan("");
  CHECK_THROWS_AS(MotionSequence(f, 20.0).validate(), Error);
}

TEST_CASE("split_parts shape and layout") {
  const auto m = testing::random_motion(4, 2);
  const PartSet ps = split_parts(m);
  CHECK(ps.num_frames() == 4);
  CHECK(ps.data().size() == 4 * 5 * 71);
  const Skeleton& sk = m.skeleton();
  // left leg slot 5 is l_ankle; its position x sits at 5*9+6.
  CHECK(ps.at(2, 1, 5 * 9 + 6) == m.position(2, sk.joint_index("l_ankle")).x());
  for (std::size_t p = 0; p < 5; ++p) {
    CHECK(ps.at(3, p, 63) == m.root(3, 0));
    CHECK(ps.at(3, p, 70) == m.contact(3, 3));
  }
}

TEST_CASE("split of zero motion is zero") {
  const MotionSequence zero(FrameMatrix::Zero(6, 197), 20.0);
  for (double v : split_parts(zero).data()) CHECK(v == 0.0);
  const PartSet empty(6);
  CHECK(merge_parts(empty, 20.0).frames().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("spine1 sentinel appears in every part") {
  FrameMatrix f = FrameMatrix::Zero(2, 197);
  const Skeleton& sk = Skeleton::body();
  const std::size_t o = sk.block_offset(sk.joint_index("spine1"));
  for (std::size_t i = 0; i < 9; ++i) f(1, o + i) = 7.0;
  const PartSet ps = split_parts(MotionSequence(f, 20.0));
  for (std::size_t p = 0; p < 5; ++p) {
    for (std::size_t i = 0; i < 9; ++i) {
      CHECK(ps.at(1, p, i) == 7.0);
      CHECK(ps.at(0, p, i) == 0.0);
    }
  }
}

TEST_CASE("merge averages shared joints") {
  PartSet ps(1);
  ps.at(0, 2, 0) = 1.0;  // spine1 first channel in the torso copy only
  const MotionSequence m = merge_parts(ps, 20.0);
  CHECK(m.frames()(0, Skeleton::body().block_offset(joints::kSpine1)) == doctest::Approx(0.2).epsilon(1e-15));
  PartSet collar(1);
  collar.at(0, 0, 3 * 9) = 1.0;  // l_collar in the left arm
  collar.at(0, 2, 4 * 9) = 0.0;  // l_collar in the torso
  CHECK(merge_parts(collar, 20.0).frames()(0, Skeleton::body().block_offset(joints::kLeftCollar)) == 0.5);
}

TEST_CASE("merge inverts split") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = testing::random_motion(3 + seed, seed);
    const MotionSequence back = merge_parts(split_parts(m), m.fps());
    CHECK((back.frames() - m.frames()).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("merge rejects inconsistent part data") {
  CHECK_THROWS_AS(PartSet(2, std::vector<double>(10)), Error);
}

TEST_CASE("motion file round trip") {
  const auto m = testing::random_motion(9, 4, 30.0);
  const std::vector<char> bytes = encode_motion(m);
  CHECK(bytes.size() == 4 + 4 + 4 + 4 + 4 + 9 * 197 * 4);
  const MotionSequence back = decode_motion(bytes);
  CHECK(back.fps() == 30.0);
  CHECK(back.num_frames() == 9);
  CHECK((back.frames() - m.frames().cast<float>().cast<double>()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(encode_motion(back) == bytes);

  std::vector<char> corrupt = bytes;
  corrupt[0] = 'X';
  CHECK_THROWS_AS(decode_motion(corrupt), Error);
  std::vector<char> versioned = bytes;
  versioned[4] = 9;
  CHECK_THROWS_AS(decode_motion(versioned), Error);
  std::vector<char> truncated(bytes.begin(), bytes.end() - 4);
  CHECK_THROWS_AS(decode_motion(truncated), Error);
}
