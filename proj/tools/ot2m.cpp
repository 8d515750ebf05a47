#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ot2m/ar/model.hpp"
#include "ot2m/binary_io.hpp"
#include "ot2m/curation/concat.hpp"
#include "ot2m/curation/filter.hpp"
#include "ot2m/data/index.hpp"
#include "ot2m/data/render.hpp"
#include "ot2m/data/stats.hpp"
#include "ot2m/data/synth.hpp"
#include "ot2m/error.hpp"
#include "ot2m/metrics/metrics.hpp"
#include "ot2m/nn/gradcheck_suite.hpp"
#include "ot2m/prq/model.hpp"
#include "ot2m/prq/tokenizer.hpp"

namespace fs = std::filesystem;
using namespace ot2m;
using nlohmann::json;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct Globals {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool verbose = false;
};

Globals globals;

void log(const std::string& msg) {
  if (globals.verbose) std::cerr << msg << '\n';
}

/// Signals a failed check whose details were already printed.
struct ValidationFailure {};

void write_text(const fs::path& path, const std::string& text) {
  binary::write_file(path, std::span<const char>(text.data(), text.size()));
}

std::string read_text(const fs::path& path) {
  const std::vector<char> bytes = binary::read_file(path);
  return {bytes.begin(), bytes.end()};
}

/// Writes to `path`, or stdout when it is empty.
void emit(const std::string& text, const fs::path& path) {
  if (path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
  } else {
    write_text(path, text);
  }
}

data::DatasetIndex load(const fs::path& path, bool lenient) {
  data::LoadedIndex loaded = data::load_index(path, lenient, globals.threads);
  for (const auto& m : loaded.missing) std::cerr << "missing: " << m.id << " " << m.path.string() << '\n';
  return std::move(loaded.index);
}

std::vector<data::IndexRecord> select(const data::DatasetIndex& index, const std::string& split, std::size_t limit) {
  std::vector<data::IndexRecord> records =
      split == "all" ? index.records() : index.split(data::parse_split(split));
  if (limit > 0 && records.size() > limit) records.resize(limit);
  if (records.empty()) throw Error(ErrorKind::EmptyInput, "no records in split '" + split + "'");
  return records;
}

std::unique_ptr<metrics::FeatureExtractor> make_extractor(const std::string& name) {
  if (name != "kinematic-v1") throw Error(ErrorKind::InvalidArgument, "unknown extractor '" + name + "'");
  return std::make_unique<metrics::KinematicExtractor>();
}

/// Fits the text side of the extractor on the training split when it has one.
void fit_extractor(metrics::FeatureExtractor& extractor, const data::DatasetIndex& index) {
  auto* kin = dynamic_cast<metrics::KinematicExtractor*>(&extractor);
  if (kin == nullptr) return;
  std::vector<std::string> texts;
  std::vector<MotionSequence> motions;
  for (const auto& r : index.split(data::Split::Train)) {
    if (r.text.empty()) continue;
    texts.push_back(r.text);
    motions.push_back(read_motion(r.motion_path));
  }
  if (texts.size() >= 2) kin->fit_text(texts, motions);
}

// ---------------------------------------------------------------- commands

void cmd_gen_synth(std::size_t count, std::size_t min_frames, std::size_t max_frames, double fps, const fs::path& out) {
  data::SynthSpec spec;
  spec.count = count;
  spec.min_frames = min_frames;
  spec.max_frames = max_frames;
  spec.fps = fps;
  spec.seed = globals.seed;
  const auto clips = data::gen_synthetic(spec);
  const data::DatasetIndex index = data::export_corpus(clips, out, globals.seed);
  std::cout << "wrote " << index.size() << " clips and " << (out / "index.jsonl").string() << '\n';
}

void cmd_filter(const fs::path& criteria_path, const fs::path& in, const fs::path& report) {
  const curation::FilterCriteria criteria =
      criteria_path.empty() ? curation::FilterCriteria{} : curation::FilterCriteria::from_json(read_text(criteria_path));
  criteria.validate();
  if (!fs::is_directory(in)) throw Error(ErrorKind::Io, "'" + in.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(in)) {
    if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string out;
  std::size_t accepted = 0, malformed = 0;
  for (const fs::path& f : files) {
    const std::string id = f.stem().string();
    try {
      const curation::FilterResult r = curation::filter_track(curation::read_track(f), criteria);
      if (r.accepted) ++accepted;
      out += r.to_json(id, criteria) + "\n";
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Io) throw;
      ++malformed;
      out += json{{"id", id}, {"accepted", false}, {"error", e.what()}}.dump() + "\n";
    }
  }
  emit(out, report);
  std::cerr << accepted << " of " << files.size() << " tracks accepted";
  if (malformed > 0) std::cerr << ", " << malformed << " malformed";
  std::cerr << '\n';
  if (malformed > 0) throw ValidationFailure{};
}

void cmd_concat(const fs::path& a, const fs::path& b, std::size_t window, bool align_height, const fs::path& out) {
  curation::TransitionConfig cfg;
  cfg.window_frames = window;
  cfg.align_height = align_height;
  const curation::ConcatResult r = curation::concat_motions(read_motion(a), read_motion(b), cfg);
  write_motion(out, r.motion);
  const json report{{"frames", r.motion.num_frames()},
                    {"yaw_offset", r.seam.yaw_offset},
                    {"translation", {r.seam.translation.x(), r.seam.translation.y(), r.seam.translation.z()}},
                    {"max_angular_velocity", r.seam.max_angular_velocity},
                    {"joint_of_max", r.seam.joint_of_max},
                    {"max_endpoint_distance", r.seam.max_endpoint_distance}};
  std::cout << report.dump(2) << '\n';
}

struct TokenizerFlags {
  prq::TokenizerConfig cfg;
  std::size_t steps = 1000;
  std::size_t log_every = 50;
};

void cmd_train_tokenizer(const fs::path& data_path, TokenizerFlags flags, const fs::path& out, const fs::path& log_path) {
  flags.cfg.seed = globals.seed;
  flags.cfg.validate();
  const data::DatasetIndex index = load(data_path, false);
  std::vector<MotionSequence> corpus;
  for (const auto& r : index.split(data::Split::Train)) corpus.push_back(read_motion(r.motion_path));
  if (corpus.empty()) throw Error(ErrorKind::EmptyInput, "training split is empty");
  log("training on " + std::to_string(corpus.size()) + " clips");
  prq::Tokenizer tok(flags.cfg);
  std::string csv = "step,total,whole_body,parts,commitment,codes_reset,grad_norm,lr\n";
  prq::train_tokenizer(tok, corpus, flags.steps, [&](std::size_t s, const prq::LossBreakdown& l) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%zu,%.17g,%.17g\n", s + 1, l.total, l.whole_body,
                  l.parts, l.commitment, l.codes_reset, l.grad_norm, l.lr);
    csv += buf;
    if (flags.log_every > 0 && ((s + 1) % flags.log_every == 0 || s == 0)) {
      std::snprintf(buf, sizeof buf, "step %zu loss %.5f (body %.5f parts %.5f commit %.5f) reset %zu", s + 1,
                    l.total, l.whole_body, l.parts, l.commitment, l.codes_reset);
      log(buf);
    }
  });
  tok.save(out);
  if (!log_path.empty()) write_text(log_path, csv);
  std::cout << "saved tokenizer to " << out.string() << '\n';
}

void cmd_tokenize(const fs::path& ckpt, const fs::path& in, const fs::path& out) {
  const prq::Tokenizer tok = prq::Tokenizer::load(ckpt);
  const prq::TokenGrid grid = tok.tokenize(read_motion(in));
  prq::write_tokens(out, grid, tok.codebook().size());
  std::cout << grid.steps() << " x " << grid.parts() << " x " << grid.layers() << " tokens\n";
}

void cmd_detokenize(const fs::path& ckpt, const fs::path& in, double fps, const fs::path& out) {
  const prq::Tokenizer tok = prq::Tokenizer::load(ckpt);
  std::size_t codebook_size = 0;
  const prq::TokenGrid grid = prq::read_tokens(in, &codebook_size);
  if (codebook_size != tok.codebook().size()) {
    throw Error(ErrorKind::InvalidArgument, "token file codebook size " + std::to_string(codebook_size) +
                                                " does not match the tokenizer's " +
                                                std::to_string(tok.codebook().size()));
  }
  const MotionSequence m = tok.detokenize(grid, fps);
  write_motion(out, m);
  std::cout << m.num_frames() << " frames\n";
}

void cmd_eval_recon(const fs::path& ckpt, const fs::path& data_path, const std::string& split, std::size_t limit,
                    const std::string& extractor_name, std::size_t pool, const fs::path& out) {
  const prq::Tokenizer tok = prq::Tokenizer::load(ckpt);
  const data::DatasetIndex index = load(data_path, false);
  auto extractor = make_extractor(extractor_name);
  fit_extractor(*extractor, index);
  std::vector<MotionSequence> reference, candidate;
  std::vector<std::string> texts;
  for (const auto& r : select(index, split, limit)) {
    const MotionSequence m = read_motion(r.motion_path);
    const MotionSequence rec = tok.reconstruct(m).motion;
    // Compare over the original length; reconstruction pads to a multiple of alpha.
    reference.push_back(m);
    candidate.push_back(rec.slice(0, m.num_frames()));
    texts.push_back(r.text);
  }
  metrics::EvalOptions options;
  options.pool = pool;
  options.seed = globals.seed;
  emit(metrics::evaluate(reference, candidate, texts, *extractor, options).to_json(), out);
}

struct ArFlags {
  ar::ArConfig cfg;
  std::size_t steps = 2000;
  std::size_t log_every = 50;
};

void cmd_train_ar(const fs::path& data_path, const fs::path& tok_path, ArFlags flags, const fs::path& out,
                  const fs::path& log_path) {
  flags.cfg.seed = globals.seed;
  const prq::Tokenizer tok = prq::Tokenizer::load(tok_path);
  flags.cfg.token_layers = tok.config().layers;
  flags.cfg.validate();
  const data::DatasetIndex index = load(data_path, false);
  const std::vector<data::IndexRecord> records = index.split(data::Split::Train);
  if (records.empty()) throw Error(ErrorKind::EmptyInput, "training split is empty");
  std::vector<std::string> texts;
  for (const auto& r : records) texts.push_back(r.text);
  const ar::Vocab vocab = ar::Vocab::from_texts(tok.codebook().size(), texts);
  std::vector<ar::Example> corpus;
  std::size_t truncated = 0;
  for (const auto& r : records) {
    std::size_t codebook_size = tok.codebook().size();
    const prq::TokenGrid grid =
        r.token_path ? prq::read_tokens(*r.token_path, &codebook_size) : tok.tokenize(read_motion(r.motion_path));
    if (codebook_size != tok.codebook().size() || grid.layers() != tok.config().layers) {
      throw Error(ErrorKind::InvalidArgument, "tokens of '" + r.id + "' do not match the tokenizer");
    }
    const prq::TokenGrid fitted = ar::fit_to_context(grid, r.text, vocab, flags.cfg.context);
    if (fitted.steps() < grid.steps()) ++truncated;
    corpus.push_back(ar::make_example(r.text, fitted, vocab));
  }
  if (truncated > 0) std::cerr << truncated << " examples truncated to fit the context\n";
  ar::ArModel model(flags.cfg, vocab);
  std::string csv = "step,loss\n";
  ar::train_ar(model, corpus, flags.steps, [&](std::size_t s, double loss) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", s + 1, loss);
    csv += buf;
    if (flags.log_every > 0 && ((s + 1) % flags.log_every == 0 || s == 0)) {
      std::snprintf(buf, sizeof buf, "step %zu nll %.5f", s + 1, loss);
      log(buf);
    }
  });
  model.save(out);
  if (!log_path.empty()) write_text(log_path, csv);
  std::cout << "saved model to " << out.string() << '\n';
}

ar::SamplingOptions sampling(std::size_t top_k, double temperature, std::size_t max_steps) {
  ar::SamplingOptions s;
  s.top_k = top_k;
  s.temperature = temperature;
  s.max_steps = max_steps;
  s.seed = globals.seed;
  return s;
}

void cmd_generate(const fs::path& ckpt, const std::string& text, const ar::SamplingOptions& options,
                  const fs::path& out, const fs::path& tok_path, const fs::path& motion_out, double fps) {
  const ar::ArModel model = ar::ArModel::load(ckpt);
  const prq::TokenGrid grid = ar::generate(model, text, model.config().token_layers, options);
  prq::write_tokens(out, grid, model.vocab().codebook_size());
  std::cout << grid.steps() << " x " << grid.parts() << " x " << grid.layers() << " tokens\n";
  if (!motion_out.empty()) {
    if (tok_path.empty()) throw Error(ErrorKind::InvalidArgument, "--motion-out needs --ckpt-tokenizer");
    write_motion(motion_out, prq::Tokenizer::load(tok_path).detokenize(grid, fps));
  }
}

void cmd_eval_t2m(const fs::path& ar_path, const fs::path& tok_path, const fs::path& data_path,
                  const std::string& split, std::size_t limit, const ar::SamplingOptions& options,
                  const std::string& extractor_name, std::size_t pool, const fs::path& out) {
  const ar::ArModel model = ar::ArModel::load(ar_path);
  const prq::Tokenizer tok = prq::Tokenizer::load(tok_path);
  if (model.vocab().codebook_size() != tok.codebook().size()) {
    throw Error(ErrorKind::InvalidArgument, "model and tokenizer disagree on the codebook size");
  }
  const data::DatasetIndex index = load(data_path, false);
  auto extractor = make_extractor(extractor_name);
  fit_extractor(*extractor, index);
  std::vector<MotionSequence> reference, candidate;
  std::vector<std::string> texts;
  std::mt19937_64 rng(options.seed);
  for (const auto& r : select(index, split, limit)) {
    const MotionSequence m = read_motion(r.motion_path);
    const prq::TokenGrid grid = ar::generate(model, r.text, model.config().token_layers, options, rng);
    candidate.push_back(tok.detokenize(grid, m.fps()));
    reference.push_back(m);
    texts.push_back(r.text);
    log("generated " + r.id);
  }
  metrics::EvalOptions eval;
  eval.pool = pool;
  eval.seed = globals.seed;
  emit(metrics::evaluate(reference, candidate, texts, *extractor, eval).to_json(), out);
}

void cmd_stats(const fs::path& data_path, bool lenient, double bin_seconds, bool as_json) {
  const data::DatasetIndex index = load(data_path, lenient);
  const data::StatsReport report = data::compute_stats(index, bin_seconds);
  const auto dups = index.duplicate_texts();
  if (as_json) {
    json j = json::parse(report.to_json());
    j["duplicate_texts"] = json::array();
    for (const auto& d : dups) {
      j["duplicate_texts"].push_back({{"text", d.text}, {"train_ids", d.train_ids}, {"held_out_ids", d.held_out_ids}});
    }
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::cout << report.to_text();
  std::cout << dups.size() << " texts shared between train and held-out splits\n";
  for (const auto& d : dups) std::cout << "  \"" << d.text << "\"\n";
}

void cmd_render(const fs::path& in, const fs::path& out, std::size_t stride) {
  data::RenderOptions options;
  options.stride = stride;
  data::render_to_file(read_motion(in), out, options);
}

void cmd_gradcheck(std::size_t instances, double eps, double tolerance) {
  std::vector<nn::GradcheckCase> cases = nn::primitive_gradcheck_cases();
  cases.push_back(prq::part_merge_gradcheck_case());
  const auto results = nn::run_gradchecks(cases, instances, globals.seed, eps);
  bool ok = true;
  for (const auto& r : results) {
    const bool pass = r.max_error <= tolerance;
    ok = ok && pass;
    std::printf("%-32s %4zu instances  max rel err %.3e  %s\n", r.name.c_str(), r.instances, r.max_error,
                pass ? "ok" : "FAIL");
  }
  if (!ok) throw ValidationFailure{};
}

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Io:
    case ErrorKind::MissingFile:
    case ErrorKind::MalformedStream: return kExitIo;
    default: return kExitValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ot2m: motion curation, part-grid tokenizer and text-to-motion toolkit"};
  app.require_subcommand(1);
  app.add_option("--seed", globals.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", globals.threads, "Worker threads for file scanning")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("-v,--verbose", globals.verbose, "Progress messages on stderr");

  std::function<void()> run;

  {
    auto* c = app.add_subcommand("gen-synth", "Write a procedural corpus and its dataset index");
    static std::size_t count = 512, min_frames = 100, max_frames = 304;
    static double fps = 20.0;
    static fs::path out;
    c->add_option("--count", count)->capture_default_str();
    c->add_option("--min-frames", min_frames)->capture_default_str();
    c->add_option("--max-frames", max_frames)->capture_default_str();
    c->add_option("--fps", fps)->capture_default_str();
    c->add_option("--out", out, "Output directory")->required();
    c->callback([&] { run = [] { cmd_gen_synth(count, min_frames, max_frames, fps, out); }; });
  }
  {
    auto* c = app.add_subcommand("filter", "Apply keypoint-track filter criteria to a directory of tracks");
    static fs::path criteria, in, report;
    c->add_option("--criteria", criteria, "Criteria JSON (defaults when omitted)");
    c->add_option("--in", in, "Directory of .jsonl tracks")->required();
    c->add_option("--report", report, "Report JSONL (stdout when omitted)");
    c->callback([&] { run = [] { cmd_filter(criteria, in, report); }; });
  }
  {
    auto* c = app.add_subcommand("concat", "Concatenate two motions with a slerp transition");
    static fs::path a, b, out;
    static std::size_t window = 8;
    static bool align_height = false;
    c->add_option("--a", a)->required();
    c->add_option("--b", b)->required();
    c->add_option("--window", window)->capture_default_str();
    c->add_flag("--align-height", align_height);
    c->add_option("--out", out)->required();
    c->callback([&] { run = [] { cmd_concat(a, b, window, align_height, out); }; });
  }
  {
    auto* c = app.add_subcommand("train-tokenizer", "Train the part-grid residual tokenizer");
    static fs::path data_path, out, log_path;
    static TokenizerFlags f;
    c->add_option("--data", data_path, "Dataset index")->required();
    c->add_option("--out", out, "Checkpoint path")->required();
    c->add_option("--layers", f.cfg.layers)->capture_default_str();
    c->add_option("--alpha", f.cfg.alpha)->capture_default_str();
    c->add_option("--codebook-size", f.cfg.codebook_size)->capture_default_str();
    c->add_option("--latent-dim", f.cfg.latent_dim)->capture_default_str();
    c->add_option("--width", f.cfg.width)->capture_default_str();
    c->add_option("--beta", f.cfg.beta)->capture_default_str();
    c->add_option("--lr", f.cfg.learning_rate)->capture_default_str();
    c->add_option("--batch-size", f.cfg.batch_size)->capture_default_str();
    c->add_option("--crop", f.cfg.crop_frames)->capture_default_str();
    c->add_option("--warmup", f.cfg.warmup_steps)->capture_default_str();
    c->add_option("--final-lr-fraction", f.cfg.final_lr_fraction)->capture_default_str();
    c->add_option("--grad-clip", f.cfg.grad_clip)->capture_default_str();
    c->add_option("--steps", f.steps)->capture_default_str();
    c->add_option("--log-every", f.log_every)->capture_default_str();
    c->add_option("--loss-log", log_path, "CSV of per-step losses");
    c->callback([&] { run = [] { cmd_train_tokenizer(data_path, f, out, log_path); }; });
  }
  {
    auto* c = app.add_subcommand("tokenize", "Motion file to token file");
    static fs::path ckpt, in, out;
    c->add_option("--ckpt", ckpt)->required();
    c->add_option("--in", in)->required();
    c->add_option("--out", out)->required();
    c->callback([&] { run = [] { cmd_tokenize(ckpt, in, out); }; });
  }
  {
    auto* c = app.add_subcommand("detokenize", "Token file to motion file");
    static fs::path ckpt, in, out;
    static double fps = 20.0;
    c->add_option("--ckpt", ckpt)->required();
    c->add_option("--in", in)->required();
    c->add_option("--out", out)->required();
    c->add_option("--fps", fps)->capture_default_str();
    c->callback([&] { run = [] { cmd_detokenize(ckpt, in, fps, out); }; });
  }
  {
    auto* c = app.add_subcommand("eval-recon", "Reconstruction metrics of a tokenizer on an index split");
    static fs::path ckpt, data_path, out;
    static std::string split = "test", extractor = "kinematic-v1";
    static std::size_t limit = 0, pool = 32;
    c->add_option("--ckpt", ckpt)->required();
    c->add_option("--data", data_path)->required();
    c->add_option("--split", split, "train, val, test or all")->capture_default_str();
    c->add_option("--limit", limit, "Evaluate at most this many clips (0: all)")->capture_default_str();
    c->add_option("--extractor", extractor)->capture_default_str();
    c->add_option("--pool", pool)->capture_default_str();
    c->add_option("--out", out, "Report JSON (stdout when omitted)");
    c->callback([&] { run = [] { cmd_eval_recon(ckpt, data_path, split, limit, extractor, pool, out); }; });
  }
  {
    auto* c = app.add_subcommand("train-ar", "Train the autoregressive text-to-token model");
    static fs::path data_path, tok_path, out, log_path;
    static ArFlags f;
    c->add_option("--data", data_path)->required();
    c->add_option("--ckpt-tokenizer", tok_path)->required();
    c->add_option("--out", out)->required();
    c->add_option("--layers", f.cfg.layers)->capture_default_str();
    c->add_option("--width", f.cfg.width)->capture_default_str();
    c->add_option("--heads", f.cfg.heads)->capture_default_str();
    c->add_option("--context", f.cfg.context)->capture_default_str();
    c->add_option("--lr", f.cfg.learning_rate)->capture_default_str();
    c->add_option("--batch-size", f.cfg.batch_size)->capture_default_str();
    c->add_option("--grad-clip", f.cfg.grad_clip)->capture_default_str();
    c->add_option("--steps", f.steps)->capture_default_str();
    c->add_option("--log-every", f.log_every)->capture_default_str();
    c->add_option("--loss-log", log_path, "CSV of per-step losses");
    c->callback([&] { run = [] { cmd_train_ar(data_path, tok_path, f, out, log_path); }; });
  }
  {
    auto* c = app.add_subcommand("generate", "Sample a token grid for a text");
    static fs::path ckpt, out, tok_path, motion_out;
    static std::string text;
    static std::size_t top_k = 0, max_steps = 0;
    static double temperature = 1.0, fps = 20.0;
    c->add_option("--ckpt", ckpt, "AR model checkpoint")->required();
    c->add_option("--text", text)->required();
    c->add_option("--out", out, "Token file")->required();
    c->add_option("--top-k", top_k, "0 selects greedy decoding")->capture_default_str();
    c->add_option("--temperature", temperature)->capture_default_str();
    c->add_option("--max-steps", max_steps, "Cap on time steps (0: context limit)")->capture_default_str();
    c->add_option("--ckpt-tokenizer", tok_path, "Tokenizer for --motion-out");
    c->add_option("--motion-out", motion_out, "Also decode to a motion file");
    c->add_option("--fps", fps)->capture_default_str();
    c->callback([&] {
      run = [] { cmd_generate(ckpt, text, sampling(top_k, temperature, max_steps), out, tok_path, motion_out, fps); };
    });
  }
  {
    auto* c = app.add_subcommand("eval-t2m", "Generate for an index split and score against the references");
    static fs::path ar_path, tok_path, data_path, out;
    static std::string split = "test", extractor = "kinematic-v1";
    static std::size_t limit = 0, pool = 32, top_k = 0, max_steps = 0;
    static double temperature = 1.0;
    c->add_option("--ckpt", ar_path, "AR model checkpoint")->required();
    c->add_option("--ckpt-tokenizer", tok_path)->required();
    c->add_option("--data", data_path)->required();
    c->add_option("--split", split)->capture_default_str();
    c->add_option("--limit", limit)->capture_default_str();
    c->add_option("--top-k", top_k)->capture_default_str();
    c->add_option("--temperature", temperature)->capture_default_str();
    c->add_option("--max-steps", max_steps)->capture_default_str();
    c->add_option("--extractor", extractor)->capture_default_str();
    c->add_option("--pool", pool)->capture_default_str();
    c->add_option("--out", out);
    c->callback([&] {
      run = [] {
        cmd_eval_t2m(ar_path, tok_path, data_path, split, limit, sampling(top_k, temperature, max_steps), extractor,
                     pool, out);
      };
    });
  }
  {
    auto* c = app.add_subcommand("stats", "Corpus statistics and cross-split duplicate texts");
    static fs::path data_path;
    static bool lenient = false, as_json = false;
    static double bin = 5.0;
    c->add_option("--data", data_path)->required();
    c->add_flag("--lenient", lenient, "Skip records whose files are missing");
    c->add_option("--bin-seconds", bin)->capture_default_str();
    c->add_flag("--json", as_json);
    c->callback([&] { run = [] { cmd_stats(data_path, lenient, bin, as_json); }; });
  }
  {
    auto* c = app.add_subcommand("render", "Stick-figure SVG of a motion");
    static fs::path in, out;
    static std::size_t stride = 10;
    c->add_option("--in", in)->required();
    c->add_option("--out", out)->required();
    c->add_option("--stride", stride)->capture_default_str();
    c->callback([&] { run = [] { cmd_render(in, out, stride); }; });
  }
  {
    auto* c = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable primitive");
    static std::size_t instances = 20;
    static double eps = 1e-5, tolerance = 1e-3;
    c->add_option("--instances", instances)->capture_default_str();
    c->add_option("--eps", eps)->capture_default_str();
    c->add_option("--tolerance", tolerance)->capture_default_str();
    c->callback([&] { run = [] { cmd_gradcheck(instances, eps, tolerance); }; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }
  try {
    run();
  } catch (const ValidationFailure&) {
    return kExitValidation;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}
