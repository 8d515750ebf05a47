#include "ot2m/data/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ot2m/binary_io.hpp"
#include "ot2m/error.hpp"

namespace ot2m::data {

using nlohmann::json;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw Error(ErrorKind::InvalidArgument, "unknown split '" + std::string(name) + "'");
}

void SplitRatios::validate() const {
  if (!(train >= 0.0 && val >= 0.0 && test >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "split ratios must be non-negative");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidArgument, "split ratios must sum to 1");
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  return p.is_relative() && !base.empty() ? base / p : p;
}

std::string relative_to(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (base.empty()) return p.generic_string();
  const std::filesystem::path rel = p.lexically_relative(base);
  if (rel.empty() || *rel.begin() == "..") return p.generic_string();
  return rel.generic_string();
}

}  // namespace

Split assign_split(std::string_view id, std::uint64_t seed, const SplitRatios& ratios) {
  ratios.validate();
  std::uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a
  for (const char c : id) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  const double u = static_cast<double>(splitmix64(h ^ splitmix64(seed)) >> 11) * 0x1.0p-53;
  if (u < ratios.train) return Split::Train;
  if (u < ratios.train + ratios.val) return Split::Val;
  return Split::Test;
}

DatasetIndex::DatasetIndex(std::vector<IndexRecord> records) : records_(std::move(records)) {
  std::set<std::string> seen;
  for (const IndexRecord& r : records_) {
    if (!seen.insert(r.id).second) {
      throw Error(ErrorKind::InvalidArgument, "duplicate id '" + r.id + "' in dataset index");
    }
  }
}

const IndexRecord* DatasetIndex::find(std::string_view id) const {
  for (const IndexRecord& r : records_) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

std::vector<IndexRecord> DatasetIndex::split(Split s) const {
  std::vector<IndexRecord> out;
  for (const IndexRecord& r : records_) {
    if (r.split == s) out.push_back(r);
  }
  return out;
}

DatasetIndex DatasetIndex::parse(std::string_view jsonl, const std::filesystem::path& base) {
  std::vector<IndexRecord> records;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      IndexRecord r;
      r.id = j.at("id").get<std::string>();
      r.motion_path = resolve(j.at("motion").get<std::string>(), base);
      if (j.contains("tokens") && !j.at("tokens").is_null()) {
        r.token_path = resolve(j.at("tokens").get<std::string>(), base);
      }
      r.text = j.value("text", std::string());
      r.num_frames = j.at("num_frames").get<std::size_t>();
      r.fps = j.value("fps", 20.0);
      r.split = parse_split(j.value("split", std::string("train")));
      r.source = j.value("source", std::string());
      if (!(r.fps > 0.0)) throw Error(ErrorKind::InvalidArgument, "fps must be positive");
      records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::MalformedStream, "index line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorKind::MalformedStream, "index line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return DatasetIndex(std::move(records));
}

std::string DatasetIndex::to_jsonl(const std::filesystem::path& base) const {
  std::string out;
  for (const IndexRecord& r : records_) {
    json j{{"id", r.id},
           {"motion", relative_to(r.motion_path, base)},
           {"text", r.text},
           {"num_frames", r.num_frames},
           {"fps", r.fps},
           {"split", to_string(r.split)},
           {"source", r.source}};
    if (r.token_path) j["tokens"] = relative_to(*r.token_path, base);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<MissingEntry> DatasetIndex::missing_files(std::size_t threads) const {
  std::vector<std::vector<MissingEntry>> found(records_.size());
  auto scan = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const IndexRecord& r = records_[i];
      if (!std::filesystem::exists(r.motion_path)) found[i].push_back({r.id, r.motion_path});
      if (r.token_path && !std::filesystem::exists(*r.token_path)) found[i].push_back({r.id, *r.token_path});
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, records_.size()));
  if (workers == 1) {
    scan(0, records_.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (records_.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(records_.size(), w * chunk);
      pool.emplace_back(scan, begin, std::min(records_.size(), begin + chunk));
    }
    for (std::thread& t : pool) t.join();
  }
  std::vector<MissingEntry> out;
  for (auto& f : found) out.insert(out.end(), f.begin(), f.end());
  std::stable_sort(out.begin(), out.end(), [](const MissingEntry& a, const MissingEntry& b) { return a.id < b.id; });
  return out;
}

DatasetIndex DatasetIndex::without(const std::vector<MissingEntry>& missing) const {
  std::set<std::string> drop;
  for (const MissingEntry& m : missing) drop.insert(m.id);
  std::vector<IndexRecord> kept;
  for (const IndexRecord& r : records_) {
    if (!drop.count(r.id)) kept.push_back(r);
  }
  return DatasetIndex(std::move(kept));
}

std::vector<DuplicateText> DatasetIndex::duplicate_texts() const {
  std::map<std::string, DuplicateText> by_text;
  for (const IndexRecord& r : records_) {
    if (r.text.empty()) continue;
    DuplicateText& d = by_text[r.text];
    (r.split == Split::Train ? d.train_ids : d.held_out_ids).push_back(r.id);
  }
  std::vector<DuplicateText> out;
  for (auto& [text, d] : by_text) {
    if (d.train_ids.empty() || d.held_out_ids.empty()) continue;
    d.text = text;
    std::sort(d.train_ids.begin(), d.train_ids.end());
    std::sort(d.held_out_ids.begin(), d.held_out_ids.end());
    out.push_back(std::move(d));
  }
  return out;
}

LoadedIndex load_index(const std::filesystem::path& path, bool lenient, std::size_t threads) {
  const std::vector<char> bytes = binary::read_file(path);
  LoadedIndex out;
  out.index = DatasetIndex::parse(std::string_view(bytes.data(), bytes.size()), path.parent_path());
  out.missing = out.index.missing_files(threads);
  if (out.missing.empty()) return out;
  if (!lenient) {
    std::string msg = std::to_string(out.missing.size()) + " referenced file(s) missing:";
    for (const MissingEntry& m : out.missing) msg += " " + m.id + " (" + m.path.string() + ")";
    throw Error(ErrorKind::MissingFile, msg);
  }
  out.index = out.index.without(out.missing);
  return out;
}

void save_index(const std::filesystem::path& path, const DatasetIndex& index) {
  const std::string text = index.to_jsonl(path.parent_path());
  binary::write_file(path, std::span<const char>(text.data(), text.size()));
}

}  // namespace ot2m::data
