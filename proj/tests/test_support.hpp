#pragma once

#include <cstdint>
#include <random>

#include "ot2m/core/motion.hpp"
#include "ot2m/error.hpp"

namespace ot2m::testing {

/// Kind of the Error thrown by f; fails the test if nothing is thrown.
template <class F>
ErrorKind thrown_kind(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  throw std::logic_error("expected an ot2m::Error");
}

inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return UnitQuaternion(n(rng), n(rng), n(rng), n(rng)).to_matrix();
}

/// Arbitrary valid motion: random orientations, positions, root channels and
/// binary contacts.
inline MotionSequence random_motion(std::size_t frames, std::uint64_t seed, double fps = 20.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  const Skeleton& sk = Skeleton::body();
  FrameMatrix f(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(sk.feature_dim()));
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t j = 1; j < sk.num_joints(); ++j) {
      const std::size_t o = sk.block_offset(j);
      const SixD r = matrix_to_sixd(random_rotation(rng));
      for (std::size_t i = 0; i < 6; ++i) f(t, o + i) = r[i];
      f(t, o + 6) = u(rng);
      f(t, o + 7) = 1.0 + u(rng);
      f(t, o + 8) = u(rng);
    }
    for (std::size_t c = 0; c < kRootChannels; ++c) f(t, sk.root_offset() + c) = u(rng);
    for (std::size_t c = 0; c < kContactChannels; ++c) f(t, sk.contact_offset() + c) = coin(rng) ? 1.0 : 0.0;
  }
  return MotionSequence(std::move(f), fps, sk);
}

/// Single pose repeated; every joint oriented by `orientation`.
inline MotionSequence static_pose(std::size_t frames, const Mat3& orientation = Mat3::Identity(),
                                  double fps = 20.0) {
  const Skeleton& sk = Skeleton::body();
  FrameMatrix f = FrameMatrix::Zero(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(sk.feature_dim()));
  const SixD r = matrix_to_sixd(orientation);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t j = 1; j < sk.num_joints(); ++j) {
      const std::size_t o = sk.block_offset(j);
      for (std::size_t i = 0; i < 6; ++i) f(t, o + i) = r[i];
      f(t, o + 6) = 0.1 * static_cast<double>(j % 3) - 0.1;
      f(t, o + 7) = 0.05 * static_cast<double>(j);
      f(t, o + 8) = 0.02 * static_cast<double>(j % 5);
    }
    f(t, sk.root_offset() + root_channel::kHeight) = 0.9;
    for (std::size_t c = 0; c < kContactChannels; ++c) f(t, sk.contact_offset() + c) = 1.0;
  }
  return MotionSequence(std::move(f), fps, sk);
}

}  // namespace ot2m::testing
