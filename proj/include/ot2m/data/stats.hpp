#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ot2m/data/index.hpp"

namespace ot2m::data {

struct StatsRow {
  std::string name;
  std::size_t clips = 0;
  double hours = 0.0;
  double avg_seconds = 0.0;  // 0 for an empty row
};

struct StatsReport {
  std::vector<StatsRow> sources;  // sorted by source tag
  std::vector<StatsRow> splits;   // train, val, test; always present
  StatsRow total;
  double bin_seconds = 5.0;
  /// histogram[k] counts clips with k * bin_seconds <= T / fps < (k + 1) * bin_seconds.
  std::vector<std::size_t> histogram;

  std::string to_json() const;
  std::string to_text() const;
};

/// Throws InvalidArgument unless bin_seconds > 0.
StatsReport compute_stats(const DatasetIndex& index, double bin_seconds = 5.0);

}  // namespace ot2m::data
