#include "ot2m/data/synth.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "ot2m/error.hpp"

namespace ot2m::data {

namespace {

using std::numbers::pi;
namespace J = joints;

constexpr double kThigh = 0.38;
constexpr double kShin = 0.40;
constexpr double kAnkleHeight = 0.07;
constexpr double kHipWidth = 0.09;

// Bone offsets in the parent's frame, arms hanging, facing +Z, left = +X.
const std::array<Vec3, 22>& offsets() {
  static const std::array<Vec3, 22> o = [] {
    std::array<Vec3, 22> v;
    v.fill(Vec3::Zero());
    v[J::kLeftHip] = {kHipWidth, -0.08, 0.0};
    v[J::kRightHip] = {-kHipWidth, -0.08, 0.0};
    v[J::kSpine1] = {0.0, 0.11, -0.01};
    v[J::kSpine2] = {0.0, 0.13, 0.0};
    v[J::kSpine3] = {0.0, 0.05, 0.01};
    v[J::kNeck] = {0.0, 0.21, -0.02};
    v[J::kHead] = {0.0, 0.09, 0.04};
    v[J::kLeftKnee] = v[J::kRightKnee] = {0.0, -kThigh, 0.0};
    v[J::kLeftAnkle] = v[J::kRightAnkle] = {0.0, -kShin, 0.0};
    v[J::kLeftFoot] = v[J::kRightFoot] = {0.0, -0.05, 0.12};
    v[J::kLeftCollar] = {0.07, 0.11, -0.01};
    v[J::kRightCollar] = {-0.07, 0.11, -0.01};
    v[J::kLeftShoulder] = {0.10, 0.03, 0.0};
    v[J::kRightShoulder] = {-0.10, 0.03, 0.0};
    v[J::kLeftElbow] = v[J::kRightElbow] = {0.0, -0.27, 0.0};
    v[J::kLeftWrist] = v[J::kRightWrist] = {0.0, -0.25, 0.0};
    return v;
  }();
  return o;
}

struct Pose {
  std::array<Mat3, 22> rot;
  std::array<Vec3, 22> pos;
};

void place(Pose& p, std::size_t joint, std::size_t parent, const Mat3& global) {
  p.rot[joint] = global;
  p.pos[joint] = p.pos[parent] + p.rot[parent] * offsets()[joint];
}

double min_jerk(double u) { return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u); }

/// Two-bone leg IK: orients hip and knee so the ankle reaches `ankle`.
void solve_leg(Pose& p, bool left, const Vec3& ankle, double foot_yaw) {
  const std::size_t hip = left ? J::kLeftHip : J::kRightHip;
  const std::size_t knee = left ? J::kLeftKnee : J::kRightKnee;
  const std::size_t ank = left ? J::kLeftAnkle : J::kRightAnkle;
  const std::size_t foot = left ? J::kLeftFoot : J::kRightFoot;
  const Mat3& pelvis = p.rot[J::kPelvis];
  p.pos[hip] = p.pos[J::kPelvis] + pelvis * offsets()[hip];
  const Vec3 d = pelvis.transpose() * (ankle - p.pos[hip]);
  const double reach = std::min(d.norm(), 0.999 * (kThigh + kShin));
  const double cos_k = (reach * reach - kThigh * kThigh - kShin * kShin) / (2.0 * kThigh * kShin);
  const double k = std::acos(std::clamp(cos_k, -1.0, 1.0));
  // Leg vector with the knee bent, in the hip frame (Y-Z plane).
  const double vy = -kThigh - kShin * std::cos(k);
  const double vz = -kShin * std::sin(k);
  const double r = std::hypot(d.x(), d.y());
  const double gamma = std::atan2(d.x(), -d.y());
  const double beta = std::atan2(d.z(), -r) - std::atan2(vz, vy);
  const Mat3 hip_rot = pelvis * rotation_z(gamma) * rotation_x(beta);
  p.rot[hip] = hip_rot;
  place(p, knee, hip, hip_rot * rotation_x(k));
  place(p, ank, knee, yaw_rotation(foot_yaw));
  place(p, foot, ank, yaw_rotation(foot_yaw));
}

struct Arms {
  Mat3 left_shoulder = Mat3::Identity(), left_elbow = Mat3::Identity();
  Mat3 right_shoulder = Mat3::Identity(), right_elbow = Mat3::Identity();
};

/// Spine, head and arms from local joint rotations.
void upper_body(Pose& p, double twist, double lean, const Arms& arms) {
  const Mat3 s1 = p.rot[J::kPelvis] * yaw_rotation(0.4 * twist) * rotation_x(lean);
  place(p, J::kSpine1, J::kPelvis, s1);
  place(p, J::kSpine2, J::kSpine1, s1 * yaw_rotation(0.3 * twist));
  place(p, J::kSpine3, J::kSpine2, p.rot[J::kSpine2] * yaw_rotation(0.3 * twist));
  place(p, J::kNeck, J::kSpine3, p.rot[J::kSpine3] * yaw_rotation(-0.5 * twist) * rotation_x(-0.5 * lean));
  place(p, J::kHead, J::kNeck, p.rot[J::kNeck] * yaw_rotation(-0.5 * twist));
  place(p, J::kLeftCollar, J::kSpine3, p.rot[J::kSpine3]);
  place(p, J::kRightCollar, J::kSpine3, p.rot[J::kSpine3]);
  place(p, J::kLeftShoulder, J::kLeftCollar, p.rot[J::kLeftCollar] * arms.left_shoulder);
  place(p, J::kRightShoulder, J::kRightCollar, p.rot[J::kRightCollar] * arms.right_shoulder);
  place(p, J::kLeftElbow, J::kLeftShoulder, p.rot[J::kLeftShoulder] * arms.left_elbow);
  place(p, J::kRightElbow, J::kRightShoulder, p.rot[J::kRightShoulder] * arms.right_elbow);
  place(p, J::kLeftWrist, J::kLeftElbow, p.rot[J::kLeftElbow]);
  place(p, J::kRightWrist, J::kRightElbow, p.rot[J::kRightElbow]);
}

/// Planted-foot walk along a constant-curvature path.
class Walk {
 public:
  Walk(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    speed_ = 0.08 + 0.14 * u(rng);
    step_ = 1.2 + 0.4 * u(rng);
    swing_ = 0.85 * step_;
    lift_ = 0.05 + 0.04 * u(rng);
    const double turn_pick = u(rng);
    turn_ = turn_pick < 0.4 ? 0.0 : (turn_pick < 0.7 ? 1.0 : -1.0) * (0.15 + 0.2 * u(rng));
    heading0_ = 2.0 * pi * u(rng) - pi;
    origin_ = Vec3(4.0 * u(rng) - 2.0, 0.0, 4.0 * u(rng) - 2.0);
    phase0_ = 2.0 * step_ * u(rng);
    arm_swing_ = 0.15 + 0.2 * u(rng);
    const double max_offset = speed_ * (2.0 * step_ - swing_) / 2.0 + 0.03;
    const double leg = 0.985 * (kThigh + kShin);
    height_ = std::min(0.08 + kAnkleHeight + std::sqrt(leg * leg - max_offset * max_offset), 0.92);
  }

  double speed() const { return speed_; }
  double turn() const { return turn_; }

  Pose pose(double t) const {
    Pose p;
    const double psi = heading(t);
    p.pos[J::kPelvis] = path(t) + Vec3(0.0, height_, 0.0);
    p.rot[J::kPelvis] = yaw_rotation(psi);
    for (bool left : {true, false}) {
      const auto [ankle, yaw] = foot(t, left);
      solve_leg(p, left, ankle, yaw);
    }
    const double gait = std::sin(pi * (t - phase0_) / step_);
    Arms arms;
    arms.left_shoulder = rotation_x(arm_swing_ * gait);
    arms.right_shoulder = rotation_x(-arm_swing_ * gait);
    arms.left_elbow = arms.right_elbow = rotation_x(-0.2);
    upper_body(p, -0.08 * gait, 0.05, arms);
    return p;
  }

  double heading(double t) const { return heading0_ + turn_ * t; }

 private:
  Vec3 path(double t) const {
    if (std::abs(turn_) < 1e-9) {
      return origin_ + speed_ * t * Vec3(std::sin(heading0_), 0.0, std::cos(heading0_));
    }
    const double psi = heading(t);
    const double r = speed_ / turn_;
    return origin_ + Vec3(r * (std::cos(heading0_) - std::cos(psi)), 0.0, r * (std::sin(psi) - std::sin(heading0_)));
  }

  std::pair<Vec3, double> footprint(long cycle, bool left) const {
    const double start = phase0_ - 2.0 * step_ + (left ? 0.0 : step_);
    const double land = start + static_cast<double>(cycle) * 2.0 * step_ + swing_;
    const double mid = land + (2.0 * step_ - swing_) / 2.0;
    const double psi = heading(mid);
    Vec3 f = path(mid) + yaw_rotation(psi) * Vec3(left ? kHipWidth : -kHipWidth, 0.0, 0.0);
    f.y() = kAnkleHeight;
    return {f, psi};
  }

  std::pair<Vec3, double> foot(double t, bool left) const {
    const double start = phase0_ - 2.0 * step_ + (left ? 0.0 : step_);
    const long cycle = static_cast<long>(std::floor((t - start) / (2.0 * step_)));
    const double local = t - start - static_cast<double>(cycle) * 2.0 * step_;
    const auto [to, to_yaw] = footprint(cycle, left);
    if (local >= swing_) return {to, to_yaw};
    const auto [from, from_yaw] = footprint(cycle - 1, left);
    const double u = local / swing_;
    const double s = min_jerk(u);
    Vec3 a = from + s * (to - from);
    const double lift = std::sin(pi * u);
    a.y() += lift_ * lift * lift;
    return {a, from_yaw + s * (to_yaw - from_yaw)};
  }

  double speed_, step_, swing_, lift_, turn_, heading0_, phase0_, arm_swing_, height_;
  Vec3 origin_;
};

/// Standing actions with both feet planted.
struct Stand {
  enum class Kind { Wave, Squat, Raise } kind;
  double heading = 0.0;
  Vec3 origin = Vec3::Zero();
  double period = 3.0;
  double amplitude = 0.0;
  bool left = true;     // wave hand
  bool forward = true;  // raise direction
  double phase = 0.0;

  Pose pose(double t) const {
    Pose p;
    const Mat3 h = yaw_rotation(heading);
    const double w = 2.0 * pi * t / period + phase;
    const double cycle = 0.5 * (1.0 - std::cos(w));
    const double stand = 0.985 * (kThigh + kShin) * 0.99 + 0.08 + kAnkleHeight;
    double drop = 0.0;
    double lean = 0.03;
    Arms arms;
    arms.left_elbow = arms.right_elbow = rotation_x(-0.15);
    switch (kind) {
      case Kind::Wave: {
        const double raise = 2.3;
        const double sway = amplitude * std::sin(w);
        if (left) {
          arms.left_shoulder = rotation_z(raise);
          arms.left_elbow = rotation_z(0.5 + sway);
        } else {
          arms.right_shoulder = rotation_z(-raise);
          arms.right_elbow = rotation_z(-0.5 - sway);
        }
        break;
      }
      case Kind::Squat:
        drop = amplitude * cycle;
        lean = 0.03 + 0.6 * drop;
        arms.left_shoulder = arms.right_shoulder = rotation_x(-1.4 * cycle);
        break;
      case Kind::Raise:
        if (forward) {
          arms.left_shoulder = arms.right_shoulder = rotation_x(-amplitude * cycle);
        } else {
          arms.left_shoulder = rotation_z(amplitude * cycle);
          arms.right_shoulder = rotation_z(-amplitude * cycle);
        }
        break;
    }
    p.pos[J::kPelvis] = origin + h * Vec3(0.0, stand - drop, -0.4 * drop);
    p.rot[J::kPelvis] = h;
    for (bool l : {true, false}) {
      Vec3 ankle = origin + h * Vec3(l ? kHipWidth : -kHipWidth, 0.0, 0.0);
      ankle.y() = kAnkleHeight;
      solve_leg(p, l, ankle, heading);
    }
    upper_body(p, 0.0, lean, arms);
    return p;
  }
};

FrameMatrix to_features(const std::vector<Pose>& poses, const std::vector<double>& headings, double fps) {
  const Skeleton& sk = Skeleton::body();
  const std::size_t frames = poses.size();
  FrameMatrix f = FrameMatrix::Zero(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(sk.feature_dim()));
  for (std::size_t t = 0; t < frames; ++t) {
    const auto row = static_cast<Eigen::Index>(t);
    const Pose& p = poses[t];
    for (std::size_t j = 1; j < sk.num_joints(); ++j) {
      const std::size_t o = sk.block_offset(j);
      const SixD six = matrix_to_sixd(p.rot[j]);
      for (std::size_t i = 0; i < 6; ++i) f(row, static_cast<Eigen::Index>(o + i)) = six[i];
      for (std::size_t i = 0; i < 3; ++i) f(row, static_cast<Eigen::Index>(o + 6 + i)) = p.pos[j][static_cast<Eigen::Index>(i)];
    }
    // Forward differences; the last frame repeats the previous velocity.
    const std::size_t a = t + 1 < frames ? t : (t == 0 ? 0 : t - 1);
    const std::size_t b = a + 1 < frames ? a + 1 : a;
    const Vec3 hip_a = 0.5 * (poses[a].pos[J::kLeftHip] + poses[a].pos[J::kRightHip]);
    const Vec3 hip_b = 0.5 * (poses[b].pos[J::kLeftHip] + poses[b].pos[J::kRightHip]);
    const std::size_t ro = sk.root_offset();
    f(row, static_cast<Eigen::Index>(ro + root_channel::kYawVelocity)) = headings[b] - headings[a];
    f(row, static_cast<Eigen::Index>(ro + root_channel::kVelocityX)) = hip_b.x() - hip_a.x();
    f(row, static_cast<Eigen::Index>(ro + root_channel::kVelocityZ)) = hip_b.z() - hip_a.z();
    f(row, static_cast<Eigen::Index>(ro + root_channel::kHeight)) = p.pos[J::kPelvis].y();
    for (std::size_t c = 0; c < kContactChannels; ++c) {
      f(row, static_cast<Eigen::Index>(sk.contact_offset() + c)) = p.pos[sk.contact_joints[c]].y() < kContactHeight ? 1.0 : 0.0;
    }
  }
  (void)fps;
  return f;
}

std::string count_word(int n) {
  static const char* words[] = {"once", "twice", "three times", "four times", "five times", "six times"};
  return n >= 1 && n <= 6 ? words[n - 1] : std::to_string(n) + " times";
}

}  // namespace

SynthClip synth_clip(std::uint64_t seed, std::size_t frames, double fps) {
  if (frames < 1 || !(fps > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "synthetic clips need frames >= 1 and fps > 0");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double duration = static_cast<double>(frames) / fps;
  std::vector<Pose> poses(frames);
  std::vector<double> headings(frames);
  SynthClip clip{"", "", "", MotionSequence(FrameMatrix::Zero(1, Skeleton::body().feature_dim()), fps)};
  std::ostringstream text;
  const double pick = u(rng);
  if (pick < 0.4) {
    const Walk walk(rng);
    for (std::size_t t = 0; t < frames; ++t) {
      const double time = static_cast<double>(t) / fps;
      poses[t] = walk.pose(time);
      headings[t] = walk.heading(time);
    }
    clip.action = "walk";
    text << "a person walks " << (walk.speed() < 0.15 ? "slowly" : "at a steady pace");
    if (walk.turn() == 0.0) {
      text << " in a straight line";
    } else {
      text << " while turning " << (walk.turn() > 0.0 ? "left" : "right");
    }
  } else {
    Stand s;
    s.heading = 2.0 * pi * u(rng) - pi;
    s.origin = Vec3(4.0 * u(rng) - 2.0, 0.0, 4.0 * u(rng) - 2.0);
    if (pick < 0.6) {
      s.kind = Stand::Kind::Wave;
      s.left = u(rng) < 0.5;
      s.period = 1.4 + 1.0 * u(rng);
      s.amplitude = 0.25 + 0.2 * u(rng);
      s.phase = 2.0 * pi * u(rng);
      clip.action = "wave";
      text << "a person waves the " << (s.left ? "left" : "right") << " hand " << (s.period < 1.9 ? "quickly" : "slowly");
    } else if (pick < 0.8) {
      s.kind = Stand::Kind::Squat;
      s.period = 2.5 + 1.5 * u(rng);
      s.amplitude = 0.12 + 0.18 * u(rng);
      const int reps = std::max(1, static_cast<int>(std::floor(duration / s.period)));
      clip.action = "squat";
      text << "a person squats down " << (s.amplitude > 0.21 ? "deeply" : "slightly") << " " << count_word(reps);
    } else {
      s.kind = Stand::Kind::Raise;
      s.forward = u(rng) < 0.5;
      s.period = 2.5 + 1.5 * u(rng);
      s.amplitude = 1.0 + 1.2 * u(rng);
      clip.action = "raise";
      text << "a person raises both arms " << (s.forward ? "forward" : "sideways")
           << (s.amplitude > 1.6 ? " above the head" : " to shoulder height") << " and lowers them";
    }
    for (std::size_t t = 0; t < frames; ++t) {
      poses[t] = s.pose(static_cast<double>(t) / fps);
      headings[t] = s.heading;
    }
  }
  clip.text = text.str();
  clip.motion = MotionSequence(to_features(poses, headings, fps), fps);
  return clip;
}

std::vector<SynthClip> gen_synthetic(const SynthSpec& spec) {
  if (spec.count < 1) {
    throw Error(ErrorKind::InvalidArgument, "synthetic corpus needs count >= 1");
  }
  if (spec.min_frames < 1 || spec.max_frames < spec.min_frames) {
    throw Error(ErrorKind::InvalidArgument, "invalid synthetic length range");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> len(spec.min_frames, spec.max_frames);
  std::vector<SynthClip> out;
  out.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    const std::size_t frames = len(rng);
    SynthClip c = synth_clip(rng(), frames, spec.fps);
    std::ostringstream id;
    id << "synth_" << spec.seed << "_" << i;
    c.id = id.str();
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace ot2m::data
