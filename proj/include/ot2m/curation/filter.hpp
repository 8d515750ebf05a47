#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ot2m::curation {

inline constexpr std::size_t kNumKeypoints = 17;

struct Keypoint {
  double x = 0.0, y = 0.0, confidence = 0.0;
};

struct TrackFrame {
  long frame_index = 0;
  std::array<double, 4> bbox{};        // x, y, w, h in pixels
  std::array<double, 2> frame_size{};  // W, H
  std::array<Keypoint, kNumKeypoints> keypoints{};
};

/// 2D keypoint track of one person in one source clip.
struct KeypointTrack {
  std::vector<TrackFrame> frames;
  /// Source clip length in frames; when absent the last frame index + 1 is used.
  std::optional<long> clip_frames;

  long source_length() const;
};

/// One JSON object per line: frame_idx, bbox[4], frame_size[2], keypoints[17][3],
/// optional clip_frames. Throws MalformedTrack with the line number.
KeypointTrack parse_track(std::string_view jsonl);
KeypointTrack read_track(const std::filesystem::path& path);

struct FilterCriteria {
  std::size_t min_visible_keypoints = 8;
  double confidence_threshold = 0.3;
  double min_bbox_area_ratio = 0.10;
  std::size_t min_duration_frames = 40;
  double min_motion_coverage = 0.5;

  /// Throws InvalidArgument naming the bad field.
  void validate() const;
  static FilterCriteria from_json(std::string_view text);
  std::string to_json() const;
};

namespace reason {
inline constexpr std::string_view kVisibleKeypoints = "min_visible_keypoints";
inline constexpr std::string_view kBboxArea = "min_bbox_area_ratio";
inline constexpr std::string_view kDuration = "min_duration_frames";
inline constexpr std::string_view kCoverage = "min_motion_coverage";
}  // namespace reason

struct FilterResult {
  bool accepted = false;
  /// Every violated criterion, in the order the criteria are declared.
  std::vector<std::string> reasons;
  std::size_t frames_below_keypoints = 0;
  std::size_t frames_below_bbox = 0;
  /// Frames whose bbox leaves the image; reported, not rejected.
  std::size_t frames_bbox_out_of_bounds = 0;
  double coverage = 0.0;

  std::string to_json(const std::string& id, const FilterCriteria& criteria) const;
};

/// Throws EmptyInput on an empty track and MalformedTrack on non-increasing
/// frame indices or confidences outside [0, 1].
FilterResult filter_track(const KeypointTrack& track, const FilterCriteria& criteria);

}  // namespace ot2m::curation
