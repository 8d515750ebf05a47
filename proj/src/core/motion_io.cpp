#include <string>

#include "ot2m/binary_io.hpp"
#include "ot2m/core/motion.hpp"

namespace ot2m {

namespace {
constexpr std::uint32_t kMotionVersion = 1;
}

std::vector<char> encode_motion(const MotionSequence& m) {
  binary::Writer w;
  w.magic("OT2M");
  w.u32(kMotionVersion);
  w.f32(static_cast<float>(m.fps()));
  w.u32(static_cast<std::uint32_t>(m.num_frames()));
  w.u32(static_cast<std::uint32_t>(m.skeleton().num_joints()));
  const FrameMatrix& f = m.frames();
  for (Eigen::Index t = 0; t < f.rows(); ++t) {
    for (Eigen::Index c = 0; c < f.cols(); ++c) w.f32(static_cast<float>(f(t, c)));
  }
  return w.take();
}

MotionSequence decode_motion(std::span<const char> bytes) {
  binary::Reader r(bytes);
  r.expect_magic("OT2M");
  const std::uint32_t version = r.u32();
  if (version != kMotionVersion) {
    throw Error(ErrorKind::MalformedStream, "unsupported motion file version " + std::to_string(version));
  }
  const double fps = r.f32();
  const std::uint32_t frames = r.u32();
  const std::uint32_t num_joints = r.u32();
  const Skeleton& sk = Skeleton::body();
  if (num_joints != sk.num_joints()) {
    throw Error(ErrorKind::SkeletonMismatch, "file has J=" + std::to_string(num_joints) + ", expected " +
                                                 std::to_string(sk.num_joints()));
  }
  const std::size_t dim = sk.feature_dim();
  if (r.remaining() != static_cast<std::size_t>(frames) * dim * 4) {
    throw Error(ErrorKind::MalformedStream, "payload size does not match header");
  }
  FrameMatrix f(frames, static_cast<Eigen::Index>(dim));
  for (std::uint32_t t = 0; t < frames; ++t) {
    for (std::size_t c = 0; c < dim; ++c) f(t, static_cast<Eigen::Index>(c)) = r.f32();
  }
  return MotionSequence(std::move(f), fps, sk);
}

void write_motion(const std::filesystem::path& path, const MotionSequence& m) {
  binary::write_file(path, encode_motion(m));
}

MotionSequence read_motion(const std::filesystem::path& path) {
  const std::vector<char> bytes = binary::read_file(path);
  return decode_motion(bytes);
}

}  // namespace ot2m
