#include <system_error>

#include "ot2m/data/synth.hpp"
#include "ot2m/error.hpp"

namespace ot2m::data {

DatasetIndex export_corpus(const std::vector<SynthClip>& clips, const std::filesystem::path& dir, std::uint64_t seed,
                           const SplitRatios& ratios) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "motions", ec);
  if (ec) {
    throw Error(ErrorKind::Io, "cannot create '" + (dir / "motions").string() + "': " + ec.message());
  }
  std::vector<IndexRecord> records;
  for (const SynthClip& c : clips) {
    IndexRecord r;
    r.id = c.id;
    r.motion_path = dir / "motions" / (c.id + ".ot2m");
    r.text = c.text;
    r.num_frames = c.motion.num_frames();
    r.fps = c.motion.fps();
    r.split = assign_split(c.id, seed, ratios);
    r.source = "synthetic";
    write_motion(r.motion_path, c.motion);
    records.push_back(std::move(r));
  }
  DatasetIndex index(std::move(records));
  save_index(dir / "index.jsonl", index);
  return index;
}

}  // namespace ot2m::data
