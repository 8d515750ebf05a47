#include "ot2m/data/stats.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <map>

#include <json.hpp>

#include "ot2m/error.hpp"

namespace ot2m::data {

using nlohmann::json;

namespace {

struct Accumulator {
  std::size_t clips = 0;
  double seconds = 0.0;

  void add(double s) {
    ++clips;
    seconds += s;
  }
  StatsRow row(const std::string& name) const {
    return {name, clips, seconds / 3600.0, clips == 0 ? 0.0 : seconds / static_cast<double>(clips)};
  }
};

json row_json(const StatsRow& r) {
  return {{"name", r.name}, {"clips", r.clips}, {"hours", r.hours}, {"avg_seconds", r.avg_seconds}};
}

}  // namespace

StatsReport compute_stats(const DatasetIndex& index, double bin_seconds) {
  if (!(bin_seconds > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "histogram bin width must be positive");
  }
  StatsReport report;
  report.bin_seconds = bin_seconds;
  std::map<std::string, Accumulator> sources;
  std::array<Accumulator, 3> splits{};
  Accumulator total;
  for (const IndexRecord& r : index.records()) {
    const double seconds = static_cast<double>(r.num_frames) / r.fps;
    sources[r.source].add(seconds);
    splits[static_cast<std::size_t>(r.split)].add(seconds);
    total.add(seconds);
    const auto bin = static_cast<std::size_t>(std::floor(seconds / bin_seconds));
    if (report.histogram.size() <= bin) report.histogram.resize(bin + 1, 0);
    ++report.histogram[bin];
  }
  for (const auto& [name, acc] : sources) report.sources.push_back(acc.row(name));
  for (const Split s : {Split::Train, Split::Val, Split::Test}) {
    report.splits.push_back(splits[static_cast<std::size_t>(s)].row(std::string(to_string(s))));
  }
  report.total = total.row("total");
  return report;
}

std::string StatsReport::to_json() const {
  json j;
  j["sources"] = json::array();
  for (const StatsRow& r : sources) j["sources"].push_back(row_json(r));
  j["splits"] = json::array();
  for (const StatsRow& r : splits) j["splits"].push_back(row_json(r));
  j["total"] = row_json(total);
  j["bin_seconds"] = bin_seconds;
  j["histogram"] = histogram;
  return j.dump(2);
}

std::string StatsReport::to_text() const {
  std::string out;
  char buf[160];
  auto line = [&](const StatsRow& r) {
    std::snprintf(buf, sizeof buf, "%-16s %8zu %10.4f %10.2f\n", r.name.c_str(), r.clips, r.hours, r.avg_seconds);
    out += buf;
  };
  std::snprintf(buf, sizeof buf, "%-16s %8s %10s %10s\n", "name", "clips", "hours", "avg_s");
  out += buf;
  for (const StatsRow& r : sources) line(r);
  for (const StatsRow& r : splits) line(r);
  line(total);
  out += "length histogram:\n";
  for (std::size_t k = 0; k < histogram.size(); ++k) {
    std::snprintf(buf, sizeof buf, "  [%g, %g) s: %zu\n", static_cast<double>(k) * bin_seconds,
                  static_cast<double>(k + 1) * bin_seconds, histogram[k]);
    out += buf;
  }
  return out;
}

}  // namespace ot2m::data
