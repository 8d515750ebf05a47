#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ot2m::data {

enum class Split { Train, Val, Test };

std::string_view to_string(Split split);
/// Throws InvalidArgument for anything but train, val or test.
Split parse_split(std::string_view name);

struct SplitRatios {
  double train = 0.80;
  double val = 0.05;
  double test = 0.15;
  /// Non-negative and summing to 1 within 1e-9; throws InvalidArgument.
  void validate() const;
};

/// Pure function of (id, seed, ratios): the id is hashed to a uniform value in
/// [0, 1) and bucketed by cumulative ratio.
Split assign_split(std::string_view id, std::uint64_t seed, const SplitRatios& ratios = {});

struct IndexRecord {
  std::string id;
  std::filesystem::path motion_path;
  std::optional<std::filesystem::path> token_path;
  std::string text;
  std::size_t num_frames = 0;
  double fps = 20.0;
  Split split = Split::Train;
  std::string source;
};

struct MissingEntry {
  std::string id;
  std::filesystem::path path;
};

/// Text appearing verbatim in the training split and in val or test.
struct DuplicateText {
  std::string text;
  std::vector<std::string> train_ids;
  std::vector<std::string> held_out_ids;
};

/// JSONL dataset index: one object per line with id, motion, tokens
/// (optional), text, num_frames, fps, split and source. Relative paths are
/// resolved against the index file's directory.
class DatasetIndex {
 public:
  DatasetIndex() = default;
  /// Throws InvalidArgument on a duplicate id.
  explicit DatasetIndex(std::vector<IndexRecord> records);

  const std::vector<IndexRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  const IndexRecord* find(std::string_view id) const;
  std::vector<IndexRecord> split(Split s) const;

  /// Parses JSONL text; throws MalformedStream with the line number.
  static DatasetIndex parse(std::string_view jsonl, const std::filesystem::path& base = {});
  std::string to_jsonl(const std::filesystem::path& base = {}) const;

  /// Referenced files that do not exist, ordered by id. Existence checks run on
  /// up to `threads` workers.
  std::vector<MissingEntry> missing_files(std::size_t threads = 1) const;
  /// Copy without the records listed in `missing`.
  DatasetIndex without(const std::vector<MissingEntry>& missing) const;

  std::vector<DuplicateText> duplicate_texts() const;

 private:
  std::vector<IndexRecord> records_;
};

struct LoadedIndex {
  DatasetIndex index;
  std::vector<MissingEntry> missing;
};

/// Strict mode throws MissingFile listing every absent file; lenient mode drops
/// those records and reports them.
LoadedIndex load_index(const std::filesystem::path& path, bool lenient = false, std::size_t threads = 1);
void save_index(const std::filesystem::path& path, const DatasetIndex& index);

}  // namespace ot2m::data
