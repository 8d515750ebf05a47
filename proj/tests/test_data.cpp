#include <doctest.h>

#include <filesystem>
#include <regex>
#include <string>

#include "ot2m/data/index.hpp"
#include "ot2m/data/render.hpp"
#include "ot2m/data/stats.hpp"
#include "ot2m/data/synth.hpp"
#include "test_support.hpp"

using namespace ot2m;
using namespace ot2m::data;
using ot2m::testing::random_motion;
using ot2m::testing::static_pose;
using ot2m::testing::thrown_kind;

namespace {

IndexRecord record(const std::string& id, std::size_t frames, Split split, const std::string& source = "a",
                   const std::string& text = "") {
  IndexRecord r;
  r.id = id;
  r.motion_path = id + ".ot2m";
  r.num_frames = frames;
  r.fps = 20.0;
  r.split = split;
  r.source = source;
  r.text = text.empty() ? "text of " + id : text;
  return r;
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("split assignment is a pure function with the configured ratios") {
  CHECK(assign_split("clip_00000", 0) == assign_split("clip_00000", 0));
  std::array<std::size_t, 3> counts{};
  const std::size_t n = 20000;
  for (std::size_t i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(assign_split("clip_" + std::to_string(i), 7))];
  CHECK(std::abs(static_cast<double>(counts[0]) / n - 0.80) < 0.015);
  CHECK(std::abs(static_cast<double>(counts[1]) / n - 0.05) < 0.008);
  CHECK(std::abs(static_cast<double>(counts[2]) / n - 0.15) < 0.012);
  SplitRatios all_test{0.0, 0.0, 1.0};
  CHECK(assign_split("x", 1, all_test) == Split::Test);
  CHECK(thrown_kind([] { assign_split("x", 1, SplitRatios{0.5, 0.5, 0.5}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("split assignment does not depend on the platform") {
  std::string pattern;
  for (int i = 0; i < 40; ++i) pattern += "RVE"[static_cast<std::size_t>(assign_split("seq" + std::to_string(i), 3))];
  CHECK(pattern == "RRRERERERRRRRRRRRRRRRRERRRRRRERRRRRRRVRR");
}

TEST_CASE("index JSONL round trip and duplicate ids") {
  IndexRecord a = record("a", 60, Split::Train);
  a.token_path = "tok/a.ot2t";
  const DatasetIndex index({a, record("b", 140, Split::Test, "b")});
  const DatasetIndex back = DatasetIndex::parse(index.to_jsonl());
  REQUIRE(back.size() == 2);
  CHECK(back.records()[0].token_path == std::filesystem::path("tok/a.ot2t"));
  CHECK(back.records()[1].split == Split::Test);
  CHECK(back.to_jsonl() == index.to_jsonl());
  CHECK(back.find("b")->num_frames == 140);
  CHECK(back.find("c") == nullptr);
  CHECK(thrown_kind([&] { DatasetIndex({a, a}); }) == ErrorKind::InvalidArgument);
  CHECK(thrown_kind([] { DatasetIndex::parse("{\"id\":\"a\"}\n"); }) == ErrorKind::MalformedStream);
  CHECK(thrown_kind([] { DatasetIndex::parse("{\"id\":\"a\",\"motion\":\"m\",\"num_frames\":3,\"split\":\"dev\"}"); }) ==
        ErrorKind::MalformedStream);
}

TEST_CASE("strict and lenient loading") {
  TempDir dir("ot2m_test_index");
  write_motion(dir.path / "a.ot2m", static_pose(4));
  const DatasetIndex index({record("a", 4, Split::Train), record("b", 4, Split::Val)});
  save_index(dir.path / "index.jsonl", index);
  CHECK(thrown_kind([&] { load_index(dir.path / "index.jsonl"); }) == ErrorKind::MissingFile);
  const LoadedIndex lenient = load_index(dir.path / "index.jsonl", true, 2);
  CHECK(lenient.index.size() == 1);
  REQUIRE(lenient.missing.size() == 1);
  CHECK(lenient.missing[0].id == "b");
  CHECK(lenient.index.records()[0].motion_path == dir.path / "a.ot2m");
  CHECK(thrown_kind([&] { load_index(dir.path / "absent.jsonl"); }) == ErrorKind::Io);
}

TEST_CASE("duplicate text report matches across splits only") {
  const DatasetIndex index({record("a", 10, Split::Train, "s", "a person walks"),
                            record("b", 10, Split::Test, "s", "a person walks"),
                            record("c", 10, Split::Train, "s", "a person jumps"),
                            record("d", 10, Split::Train, "s", "a person jumps"),
                            record("e", 10, Split::Val, "s", "A person walks")});
  const auto dups = index.duplicate_texts();
  REQUIRE(dups.size() == 1);
  CHECK(dups[0].text == "a person walks");
  CHECK(dups[0].train_ids == std::vector<std::string>{"a"});
  CHECK(dups[0].held_out_ids == std::vector<std::string>{"b"});
}

TEST_CASE("stats examples") {
  const StatsReport r = compute_stats(DatasetIndex({record("a", 60, Split::Train), record("b", 140, Split::Train)}));
  CHECK(r.total.clips == 2);
  CHECK(r.total.avg_seconds == doctest::Approx(5.0));
  CHECK(r.total.hours == doctest::Approx(10.0 / 3600.0));
  REQUIRE(r.splits.size() == 3);
  CHECK(r.splits[1].name == "val");
  CHECK(r.splits[1].clips == 0);
  CHECK(r.splits[1].hours == 0.0);
  CHECK(r.splits[1].avg_seconds == 0.0);
  CHECK(r.histogram == std::vector<std::size_t>{1, 1});

  const StatsReport h = compute_stats(DatasetIndex({record("a", 201, Split::Test), record("b", 100, Split::Val)}));
  CHECK(h.histogram == std::vector<std::size_t>{0, 1, 1});
}

TEST_CASE("stats counts sum to the total") {
  std::vector<IndexRecord> records;
  for (std::size_t i = 0; i < 50; ++i) {
    const std::string id = "c" + std::to_string(i);
    records.push_back(record(id, 20 + 7 * i, assign_split(id, 1), i % 3 == 0 ? "x" : "y"));
  }
  const StatsReport r = compute_stats(DatasetIndex(records));
  std::size_t by_source = 0, by_split = 0, by_bin = 0;
  double hours = 0.0;
  for (const auto& row : r.sources) {
    by_source += row.clips;
    hours += row.hours;
  }
  for (const auto& row : r.splits) by_split += row.clips;
  for (const auto c : r.histogram) by_bin += c;
  CHECK(by_source == 50);
  CHECK(by_split == 50);
  CHECK(by_bin == 50);
  CHECK(hours == doctest::Approx(r.total.hours));
  CHECK(r.to_json().find("\"histogram\"") != std::string::npos);
  CHECK(thrown_kind([&] { compute_stats(DatasetIndex(records), 0.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("render figure counts and bone structure") {
  RenderOptions opt;
  opt.stride = 10;
  CHECK(count(render_svg(static_pose(1), opt), "class=\"figure\"") == 1);
  const std::string svg = render_svg(random_motion(100, 3), opt);
  CHECK(count(svg, "class=\"figure\"") == 10);
  CHECK(count(svg, "class=\"bone\"") == 10 * 21);
  CHECK(svg == render_svg(random_motion(100, 3), opt));
  opt.stride = 0;
  CHECK(thrown_kind([&] { render_svg(static_pose(1), opt); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("render connects every joint to its parent") {
  const Skeleton& sk = Skeleton::body();
  const std::string svg = render_svg(static_pose(1));
  const std::regex bone("data-joint=\"(\\d+)\" data-parent=\"(\\d+)\"");
  std::vector<int> parent_of(sk.num_joints(), -1);
  std::size_t bones = 0;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), bone); it != std::sregex_iterator(); ++it) {
    parent_of[std::stoul((*it)[1])] = std::stoi((*it)[2]);
    ++bones;
  }
  CHECK(bones == sk.num_joints() - 1);
  CHECK(parent_of == sk.parents);
}

TEST_CASE("render to an unwritable path fails with Io") {
  CHECK(thrown_kind([] { render_to_file(static_pose(1), "/nonexistent/dir/out.svg"); }) == ErrorKind::Io);
}

TEST_CASE("exported synthetic corpus loads back") {
  TempDir dir("ot2m_test_export");
  SynthSpec spec;
  spec.count = 6;
  spec.seed = 2;
  const auto clips = gen_synthetic(spec);
  export_corpus(clips, dir.path, 5);
  const LoadedIndex loaded = load_index(dir.path / "index.jsonl");
  REQUIRE(loaded.index.size() == 6);
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const IndexRecord& r = loaded.index.records()[i];
    CHECK(r.id == clips[i].id);
    CHECK(r.text == clips[i].text);
    CHECK(r.split == assign_split(r.id, 5));
    CHECK(read_motion(r.motion_path).frames() == clips[i].motion.frames().cast<float>().cast<double>());
  }
}
