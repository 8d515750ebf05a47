#pragma once

#include <string>

#include "ot2m/core/motion.hpp"

namespace ot2m::curation {

/// Mean horizontal displacement (m/frame) of each contact joint between
/// frames t and t+1, over the t where its contact channel is 1. 0 without
/// contact frames.
double foot_slide_score(const MotionSequence& m);
/// Mean over joints and frames of |third finite difference * fps^3|^2.
/// Throws TooShort when T < 4.
double jitter_score(const MotionSequence& m);
/// 95th percentile (nearest rank) over frames of max(0, -lowest joint height).
double penetration_score(const MotionSequence& m);

struct PlausibilityThresholds {
  double foot_slide = 0.01;
  double jitter = 50.0;
  double penetration = 0.03;
};

struct PlausibilityReport {
  double foot_slide = 0.0;
  double jitter = 0.0;
  double penetration = 0.0;
  bool pass = false;

  std::string to_json() const;
};

PlausibilityReport score_plausibility(const MotionSequence& m, const PlausibilityThresholds& thresholds = {});

}  // namespace ot2m::curation
