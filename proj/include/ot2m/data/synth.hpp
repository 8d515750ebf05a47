#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ot2m/core/motion.hpp"
#include "ot2m/data/index.hpp"

namespace ot2m::data {

struct SynthSpec {
  std::size_t count = 16;
  std::size_t min_frames = 100;  // 5 s at 20 fps
  std::size_t max_frames = 304;  // ~15 s; mean ~10 s
  double fps = 20.0;
  std::uint64_t seed = 0;
};

struct SynthClip {
  std::string id;
  std::string action;  // walk, wave, squat, raise
  std::string text;
  MotionSequence motion;
};

/// Procedural corpus: planted-foot walking with leg IK, waving, squats and arm
/// raises, with template texts naming the sampled parameters. Contacts are
/// exactly (joint height < 0.05 m). Deterministic per seed.
std::vector<SynthClip> gen_synthetic(const SynthSpec& spec);

/// Single clip from its own seed.
SynthClip synth_clip(std::uint64_t seed, std::size_t frames, double fps = 20.0);

inline constexpr double kContactHeight = 0.05;

/// Writes each clip to `dir`/motions/<id>.ot2m and the index to
/// `dir`/index.jsonl with hash-assigned splits and source "synthetic".
DatasetIndex export_corpus(const std::vector<SynthClip>& clips, const std::filesystem::path& dir, std::uint64_t seed,
                           const SplitRatios& ratios = {});

}  // namespace ot2m::data
