#include "ot2m/curation/filter.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ot2m/error.hpp"

namespace ot2m::curation {

using nlohmann::json;

long KeypointTrack::source_length() const {
  if (clip_frames) return *clip_frames;
  return frames.empty() ? 0 : frames.back().frame_index + 1;
}

namespace {

TrackFrame parse_frame(const json& j) {
  TrackFrame f;
  f.frame_index = j.at("frame_idx").get<long>();
  const auto& bbox = j.at("bbox");
  const auto& size = j.at("frame_size");
  const auto& kps = j.at("keypoints");
  if (bbox.size() != 4 || size.size() != 2 || kps.size() != kNumKeypoints) {
    throw std::runtime_error("expected bbox[4], frame_size[2] and keypoints[17]");
  }
  for (std::size_t i = 0; i < 4; ++i) f.bbox[i] = bbox[i].get<double>();
  for (std::size_t i = 0; i < 2; ++i) f.frame_size[i] = size[i].get<double>();
  for (std::size_t k = 0; k < kNumKeypoints; ++k) {
    const auto& kp = kps[k];
    if (kp.size() != 3) throw std::runtime_error("keypoint " + std::to_string(k) + " needs 3 values");
    f.keypoints[k] = {kp[0].get<double>(), kp[1].get<double>(), kp[2].get<double>()};
  }
  return f;
}

}  // namespace

KeypointTrack parse_track(std::string_view jsonl) {
  KeypointTrack track;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      track.frames.push_back(parse_frame(j));
      if (j.contains("clip_frames")) track.clip_frames = j.at("clip_frames").get<long>();
    } catch (const std::exception& e) {
      throw Error(ErrorKind::MalformedTrack, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return track;
}

KeypointTrack read_track(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot open track " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_track(ss.str());
}

void FilterCriteria::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); };
  if (min_visible_keypoints > kNumKeypoints) fail("min_visible_keypoints must be <= 17");
  if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) fail("confidence_threshold must lie in [0, 1]");
  if (!(min_bbox_area_ratio >= 0.0 && min_bbox_area_ratio <= 1.0)) fail("min_bbox_area_ratio must lie in [0, 1]");
  if (!(min_motion_coverage >= 0.0 && min_motion_coverage <= 1.0)) fail("min_motion_coverage must lie in [0, 1]");
}

FilterCriteria FilterCriteria::from_json(std::string_view text) {
  FilterCriteria c;
  try {
    const json j = json::parse(text);
    c.min_visible_keypoints = j.value("min_visible_keypoints", c.min_visible_keypoints);
    c.confidence_threshold = j.value("confidence_threshold", c.confidence_threshold);
    c.min_bbox_area_ratio = j.value("min_bbox_area_ratio", c.min_bbox_area_ratio);
    c.min_duration_frames = j.value("min_duration_frames", c.min_duration_frames);
    c.min_motion_coverage = j.value("min_motion_coverage", c.min_motion_coverage);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("bad filter criteria: ") + e.what());
  }
  c.validate();
  return c;
}

std::string FilterCriteria::to_json() const {
  return json{{"min_visible_keypoints", min_visible_keypoints},
              {"confidence_threshold", confidence_threshold},
              {"min_bbox_area_ratio", min_bbox_area_ratio},
              {"min_duration_frames", min_duration_frames},
              {"min_motion_coverage", min_motion_coverage}}
      .dump();
}

std::string FilterResult::to_json(const std::string& id, const FilterCriteria& criteria) const {
  json j{{"id", id},
         {"accepted", accepted},
         {"reasons", reasons},
         {"frames_below_keypoints", frames_below_keypoints},
         {"frames_below_bbox", frames_below_bbox},
         {"frames_bbox_out_of_bounds", frames_bbox_out_of_bounds},
         {"coverage", coverage},
         {"criteria", json::parse(criteria.to_json())}};
  return j.dump();
}

FilterResult filter_track(const KeypointTrack& track, const FilterCriteria& criteria) {
  criteria.validate();
  if (track.frames.empty()) {
    throw Error(ErrorKind::EmptyInput, "empty keypoint track");
  }
  FilterResult r;
  for (std::size_t i = 0; i < track.frames.size(); ++i) {
    const TrackFrame& f = track.frames[i];
    if (i > 0 && f.frame_index <= track.frames[i - 1].frame_index) {
      throw Error(ErrorKind::MalformedTrack, "frame index " + std::to_string(f.frame_index) + " at record " +
                                                 std::to_string(i) + " does not increase");
    }
    std::size_t visible = 0;
    for (const Keypoint& k : f.keypoints) {
      if (!(k.confidence >= 0.0 && k.confidence <= 1.0)) {
        throw Error(ErrorKind::MalformedTrack, "confidence outside [0, 1] at frame " + std::to_string(f.frame_index));
      }
      if (k.confidence >= criteria.confidence_threshold) ++visible;
    }
    if (visible < criteria.min_visible_keypoints) ++r.frames_below_keypoints;
    const double frame_area = f.frame_size[0] * f.frame_size[1];
    const double ratio = frame_area > 0.0 ? f.bbox[2] * f.bbox[3] / frame_area : 0.0;
    if (ratio < criteria.min_bbox_area_ratio) ++r.frames_below_bbox;
    if (f.bbox[0] < 0.0 || f.bbox[1] < 0.0 || f.bbox[0] + f.bbox[2] > f.frame_size[0] ||
        f.bbox[1] + f.bbox[3] > f.frame_size[1]) {
      ++r.frames_bbox_out_of_bounds;
    }
  }
  const auto length = static_cast<double>(track.frames.size());
  const long source = track.source_length();
  r.coverage = source > 0 ? length / static_cast<double>(source) : 0.0;
  if (r.frames_below_keypoints > 0) r.reasons.emplace_back(reason::kVisibleKeypoints);
  if (r.frames_below_bbox > 0) r.reasons.emplace_back(reason::kBboxArea);
  if (track.frames.size() < criteria.min_duration_frames) r.reasons.emplace_back(reason::kDuration);
  if (r.coverage < criteria.min_motion_coverage) r.reasons.emplace_back(reason::kCoverage);
  r.accepted = r.reasons.empty();
  return r;
}

}  // namespace ot2m::curation
