// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include "ot2m/ar/model.hpp"
#include "ot2m/binary_io.hpp"
#include "ot2m/curation/concat.hpp"
#include "ot2m/curation/filter.hpp"
#include "ot2m/data/synth.hpp"
#include "ot2m/metrics/metrics.hpp"
#include "ot2m/nn/gradcheck_suite.hpp"
#include "ot2m/prq/model.hpp"
#include "ot2m/prq/tokenizer.hpp"
#include "test_support.hpp"

using namespace ot2m;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o, double seconds, double budget) {
  const bool in_time = budget <= 0.0 || seconds < budget;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  char timing[96];
  if (budget > 0.0) {
    std::snprintf(timing, sizeof timing, "%.2f s, budget %.0f s", seconds, budget);
  } else {
    std::snprintf(timing, sizeof timing, "%.2f s", seconds);
  }
  std::printf("[%s] criterion %d %s: %s (%s)\n", pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), timing);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ------------------------------------------------------------ criterion 1

Outcome autodiff_soundness() {
  std::vector<nn::GradcheckCase> cases = nn::primitive_gradcheck_cases();
  cases.push_back(prq::part_merge_gradcheck_case());
  const auto results = nn::run_gradchecks(cases, 20, 1, 1e-5);
  double worst = 0.0;
  std::string worst_name;
  for (const auto& r : results) {
    if (r.instances != 20) return {false, r.name + " ran " + std::to_string(r.instances) + " instances"};
    if (r.max_error > worst) {
      worst = r.max_error;
      worst_name = r.name;
    }
  }
  return {worst <= 1e-3, std::to_string(results.size()) + " primitives x 20 instances, max rel err " +
                             fmt("%.2e", worst) + " (" + worst_name + "), tolerance 1e-3"};
}

// ------------------------------------------------------------ criterion 2

/// Exhaustive nearest code, lowest index on ties.
std::size_t brute_nearest(const std::vector<double>& r, const prq::RowMatrix& codes) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < codes.rows(); ++k) {
    double d = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double diff = r[i] - codes(k, static_cast<Eigen::Index>(i));
      d += diff * diff;
    }
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(k);
    }
  }
  return best;
}

Outcome quantizer_oracle() {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  std::size_t latents = 0, selections = 0, mismatches = 0;
  while (latents < 1000) {
    const std::size_t k = 1 + rng() % 64, dim = 1 + rng() % 16, layers = 1 + rng() % 6;
    const std::size_t steps = 1 + rng() % 8;
    prq::RowMatrix codes(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < codes.size(); ++i) codes.data()[i] = n(rng);
    // Duplicate rows exercise the lowest-index tie rule.
    if (k > 2 && rng() % 2 == 0) codes.row(1) = codes.row(0);
    const prq::Codebook cb(codes);
    prq::LatentGrid z(kNumParts, steps, dim);
    for (double& v : z.data()) v = n(rng);
    const prq::QuantizeResult q = prq::rq_quantize(z, cb, layers);
    for (std::size_t p = 0; p < kNumParts; ++p) {
      for (std::size_t t = 0; t < steps; ++t) {
        std::vector<double> r(z.at(p, t).begin(), z.at(p, t).end());
        for (std::size_t l = 0; l < layers; ++l) {
          const std::size_t want = brute_nearest(r, codes);
          if (q.tokens.at(t, p, l) != want) ++mismatches;
          ++selections;
          for (std::size_t i = 0; i < dim; ++i) r[i] -= codes(static_cast<Eigen::Index>(want), static_cast<Eigen::Index>(i));
        }
        ++latents;
      }
    }
  }
  return {mismatches == 0, std::to_string(latents) + " latents, " + std::to_string(selections) +
                               " layer selections, " + std::to_string(mismatches) + " differ from exhaustive search"};
}

// ------------------------------------------------------------ criteria 3, 9, 10

struct TokenizerRun {
  std::size_t layers = 0;
  prq::TrainLog log;
  double mpjpe_mm = 0.0;
  double train_seconds = 0.0;
  std::vector<char> checkpoint;
};

struct TableCorpus {
  std::vector<MotionSequence> train, test;
};

TableCorpus table_corpus() {
  data::SynthSpec spec;
  spec.count = 512;
  spec.seed = 1;
  spec.min_frames = 64;
  spec.max_frames = 160;
  TableCorpus c;
  const auto clips = data::gen_synthetic(spec);
  for (std::size_t i = 0; i < clips.size(); ++i) (i % 8 == 7 ? c.test : c.train).push_back(clips[i].motion);
  return c;
}

prq::TokenizerConfig table_config(std::size_t layers) {
  prq::TokenizerConfig cfg;
  cfg.layers = layers;
  cfg.codebook_size = 1024;
  cfg.latent_dim = 512;
  cfg.alpha = 4;
  cfg.width = 64;
  cfg.batch_size = 8;
  cfg.learning_rate = 2e-3;
  cfg.warmup_steps = 20;
  cfg.final_lr_fraction = 0.1;
  cfg.grad_clip = 1.0;
  cfg.seed = 3;
  return cfg;
}

constexpr std::size_t kTableSteps = 400;

TokenizerRun train_table_run(const TableCorpus& corpus, std::size_t layers, prq::Tokenizer* keep = nullptr) {
  TokenizerRun run;
  run.layers = layers;
  prq::Tokenizer tok(table_config(layers));
  const auto t0 = Clock::now();
  run.log = prq::train_tokenizer(tok, corpus.train, kTableSteps);
  run.train_seconds = seconds_since(t0);
  double sum = 0.0;
  for (const MotionSequence& m : corpus.test) {
    sum += metrics::mpjpe(m, tok.reconstruct(m).motion.slice(0, m.num_frames()));
  }
  run.mpjpe_mm = sum / static_cast<double>(corpus.test.size());
  run.checkpoint = tok.to_checkpoint().encode();
  if (keep != nullptr) *keep = std::move(tok);
  return run;
}

Outcome table_direction(const std::vector<TokenizerRun>& runs) {
  const double l1 = runs[0].mpjpe_mm, l4 = runs[1].mpjpe_mm, l6 = runs[2].mpjpe_mm;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "held-out MPJPE L=1 %.2f mm, L=4 %.2f mm, L=6 %.2f mm after %zu steps each "
                "(codebook 1024, d_z 512, alpha 4); need L1 > L4 >= L6",
                l1, l4, l6, kTableSteps);
  return {l1 > l4 && l4 >= l6, buf};
}

Outcome loss_accounting(const std::vector<TokenizerRun>& runs) {
  double worst = 0.0;
  std::size_t steps = 0;
  for (const auto& run : runs) {
    for (const auto& s : run.log.steps) {
      worst = std::max(worst, std::abs(s.total - (s.whole_body + s.parts + s.commitment)));
      ++steps;
    }
  }
  const auto& l4 = runs[1].log.steps;
  const double first = l4.front().total, at200 = l4[199].total;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "max |total - sum of terms| %.2e over %zu steps (tolerance 1e-9); L=4 loss step 1 %.4f, step 200 %.4f "
                "(need < 0.5x)",
                worst, steps, first, at200);
  return {worst <= 1e-9 && at200 < 0.5 * first, buf};
}

bool same_breakdown(const prq::LossBreakdown& a, const prq::LossBreakdown& b) {
  auto same = [](double x, double y) { return std::memcmp(&x, &y, sizeof x) == 0; };
  return same(a.total, b.total) && same(a.whole_body, b.whole_body) && same(a.parts, b.parts) &&
         same(a.commitment, b.commitment) && same(a.grad_norm, b.grad_norm) && same(a.lr, b.lr) &&
         a.codes_reset == b.codes_reset;
}

// ------------------------------------------------------------ criterion 4

Outcome round_trips() {
  std::size_t checks = 0;
  double worst_merge = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MotionSequence m = testing::random_motion(5 + seed, seed);
    const MotionSequence back = merge_parts(split_parts(m), m.fps());
    worst_merge = std::max(worst_merge, (back.frames() - m.frames()).cwiseAbs().maxCoeff());
    ++checks;
  }
  bool ok = worst_merge <= 1e-12;
  const auto dir = std::filesystem::temp_directory_path();
  std::mt19937_64 rng(4);
  bool files_ok = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MotionSequence m = testing::random_motion(3 + seed, 100 + seed);
    const auto motion_path = dir / "ot2m_accept.ot2m";
    write_motion(motion_path, m);
    const std::vector<char> bytes = binary::read_file(motion_path);
    const MotionSequence read = read_motion(motion_path);
    files_ok = files_ok && read.frames() == m.frames().cast<float>().cast<double>() && encode_motion(read) == bytes;
    std::filesystem::remove(motion_path);

    prq::TokenGrid g(1 + rng() % 20, kNumParts, 1 + rng() % 6);
    std::uniform_int_distribution<std::uint32_t> code(0, 1023);
    for (std::size_t t = 0; t < g.steps(); ++t)
      for (std::size_t p = 0; p < g.parts(); ++p)
        for (std::size_t k = 0; k < g.layers(); ++k) g.at(t, p, k) = code(rng);
    const auto token_path = dir / "ot2m_accept.ot2t";
    prq::write_tokens(token_path, g, 1024);
    std::size_t cb = 0;
    const prq::TokenGrid tg = prq::read_tokens(token_path, &cb);
    files_ok = files_ok && tg == g && cb == 1024 && prq::encode_tokens(tg, cb) == binary::read_file(token_path);
    std::filesystem::remove(token_path);
    checks += 2;
  }
  ok = ok && files_ok;
  std::size_t grids = 0, grid_fail = 0;
  const ar::Vocab vocab(1024, {"walk"});
  for (; grids < 100; ++grids) {
    const std::size_t layers = 1 + rng() % 6;
    prq::TokenGrid g(1 + rng() % 16, kNumParts, layers);
    std::uniform_int_distribution<std::uint32_t> code(0, 1023);
    for (std::size_t t = 0; t < g.steps(); ++t)
      for (std::size_t p = 0; p < g.parts(); ++p)
        for (std::size_t k = 0; k < layers; ++k) g.at(t, p, k) = code(rng);
    if (!(ar::deserialize_tokens(ar::serialize_tokens(g, vocab), vocab, layers) == g)) ++grid_fail;
  }
  ok = ok && grid_fail == 0;
  return {ok, "merge(split) max err " + fmt("%.1e", worst_merge) + " (tolerance 1e-12); motion and token files " +
                  (files_ok ? "bitwise exact" : "NOT exact") + " on 20 each; template identity on " +
                  std::to_string(grids - grid_fail) + "/100 grids"};
}

// ------------------------------------------------------------ criterion 5

Outcome concat_contract() {
  std::size_t cases = 0, failed = 0;
  double worst_yaw = 0.0, worst_margin = -1e300;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const MotionSequence a = testing::random_motion(2 + seed % 13, seed);
    const MotionSequence b = testing::random_motion(2 + seed % 7, 1000 + seed);
    curation::TransitionConfig cfg;
    cfg.window_frames = 1 + seed % 12;
    const curation::ConcatResult r = curation::concat_motions(a, b, cfg);
    const std::size_t ta = a.num_frames(), w = cfg.window_frames;
    bool ok = r.motion.num_frames() == ta + w + b.num_frames();
    // Joint geodesic from a's last frame to b's aligned first frame, per joint.
    const double yaw_mismatch =
        std::abs(std::remainder(yaw_of(r.motion.facing(ta + w)) - yaw_of(a.facing(ta - 1)), 2.0 * std::numbers::pi));
    worst_yaw = std::max(worst_yaw, yaw_mismatch);
    ok = ok && yaw_mismatch <= 1e-9;
    const Skeleton& sk = a.skeleton();
    for (std::size_t j = 0; j < sk.num_joints(); ++j) {
      if (j == sk.root) continue;
      const double theta = angular_distance(r.motion.rotation(ta - 1, j), r.motion.rotation(ta + w, j));
      for (std::size_t s = ta - 1; s < ta + w; ++s) {
        const double step = angular_distance(r.motion.rotation(s, j), r.motion.rotation(s + 1, j));
        const double margin = step - theta / static_cast<double>(w);
        worst_margin = std::max(worst_margin, margin);
        ok = ok && margin <= 1e-9;
      }
    }
    ++cases;
    if (!ok) ++failed;
  }
  return {failed == 0, std::to_string(cases - failed) + "/" + std::to_string(cases) +
                           " random pairs meet length, yaw (max " + fmt("%.1e", worst_yaw) +
                           " rad) and per-step rotation bounds (max excess over theta/W " + fmt("%.1e", worst_margin) +
                           " rad)"};
}

// ------------------------------------------------------------ criterion 6

curation::KeypointTrack make_track(std::size_t frames, std::size_t visible_in_frame_7, std::optional<long> clip) {
  curation::KeypointTrack track;
  for (std::size_t i = 0; i < frames; ++i) {
    curation::TrackFrame f;
    f.frame_index = static_cast<long>(i);
    f.frame_size = {640.0, 480.0};
    f.bbox = {100.0, 50.0, 300.0, 400.0};
    for (std::size_t k = 0; k < curation::kNumKeypoints; ++k) {
      const bool visible = i != 7 || k < visible_in_frame_7;
      f.keypoints[k] = {200.0, 200.0, visible ? 0.9 : 0.1};
    }
    track.frames.push_back(f);
  }
  track.clip_frames = clip;
  return track;
}

Outcome filter_examples() {
  const curation::FilterCriteria c;
  const auto clean = curation::filter_track(make_track(120, 17, std::nullopt), c);
  const auto occluded = curation::filter_track(make_track(120, 7, std::nullopt), c);
  const auto partial = curation::filter_track(make_track(59, 17, 120), c);
  const auto eight = curation::filter_track(make_track(120, 8, std::nullopt), c);
  const auto half = curation::filter_track(make_track(60, 17, 120), c);
  const bool ok = clean.accepted && clean.reasons.empty() && !occluded.accepted &&
                  occluded.reasons == std::vector<std::string>{"min_visible_keypoints"} && !partial.accepted &&
                  partial.reasons == std::vector<std::string>{"min_motion_coverage"} && eight.accepted &&
                  half.accepted;
  return {ok, std::string("17/17 visible accepted: ") + (clean.accepted ? "yes" : "no") +
                  "; a frame with 7 visible rejected by min_visible_keypoints: " +
                  (occluded.reasons == std::vector<std::string>{"min_visible_keypoints"} ? "yes" : "no") +
                  "; 59 of 120 frames rejected by min_motion_coverage: " +
                  (partial.reasons == std::vector<std::string>{"min_motion_coverage"} ? "yes" : "no") +
                  "; boundaries 8 visible and 60/120 accepted: " + (eight.accepted && half.accepted ? "yes" : "no")};
}

// ------------------------------------------------------------ criterion 7

Outcome metric_oracles() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> mu(-5.0, 5.0), sd(0.01, 3.0);
  double worst_1d = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double m1 = mu(rng), m2 = mu(rng), s1 = sd(rng), s2 = sd(rng);
    Eigen::VectorXd a(1), b(1);
    Eigen::MatrixXd ca(1, 1), cb(1, 1);
    a << m1;
    b << m2;
    ca << s1 * s1;
    cb << s2 * s2;
    const double want = (m1 - m2) * (m1 - m2) + (s1 - s2) * (s1 - s2);
    worst_1d = std::max(worst_1d, std::abs(metrics::frechet_distance(a, ca, b, cb) - want));
  }
  std::normal_distribution<double> n(0.0, 1.0);
  metrics::FeatureMatrix feats(200, 16);
  for (Eigen::Index i = 0; i < feats.size(); ++i) feats.data()[i] = n(rng);
  const double fid_same = metrics::fid(feats, feats);

  const std::size_t queries = 10000, pool = 32;
  metrics::FeatureMatrix motion(static_cast<Eigen::Index>(queries), 8), text(static_cast<Eigen::Index>(queries), 8);
  for (Eigen::Index i = 0; i < motion.size(); ++i) motion.data()[i] = n(rng);
  for (Eigen::Index i = 0; i < text.size(); ++i) text.data()[i] = n(rng);
  const metrics::RPrecision rp = metrics::r_precision(motion, text, pool, 11);
  const double p = 1.0 / static_cast<double>(pool);
  const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(queries));
  const double z = (rp.r_at_1 - p) / sigma;

  FrameMatrix fa = testing::static_pose(3).frames();
  FrameMatrix fb = fa;
  const Skeleton& sk = Skeleton::body();
  for (Eigen::Index t = 0; t < fb.rows(); ++t) {
    for (std::size_t j = 1; j < sk.num_joints(); ++j) {
      fb(t, static_cast<Eigen::Index>(sk.block_offset(j) + 6)) += 0.3;
      fb(t, static_cast<Eigen::Index>(sk.block_offset(j) + 7)) += 0.4;
    }
  }
  const double mp = metrics::mpjpe(MotionSequence(fa, 20.0), MotionSequence(fb, 20.0));

  const bool ok = worst_1d <= 1e-8 && fid_same <= 1e-9 && std::abs(z) <= 3.0 && std::abs(mp - 500.0) <= 1e-9;
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "1-D Frechet max err %.1e (tol 1e-8); FID(identical) %.1e (tol 1e-9); random R@1 %.4f vs 1/32 "
                "(z = %.2f, need |z| <= 3, N = %zu); MPJPE 3-4-5 %.9f mm",
                worst_1d, fid_same, rp.r_at_1, z, queries, mp);
  return {ok, buf};
}

// ------------------------------------------------------------ criterion 8

struct MemorizeRun {
  ar::TrainStats stats;
  double final_nll = 0.0;
  bool greedy_exact = false;
  std::size_t ids = 0;
};

MemorizeRun memorize(const std::string& text, const prq::TokenGrid& grid) {
  ar::ArConfig cfg;
  cfg.layers = 2;
  cfg.width = 64;
  cfg.heads = 4;
  cfg.context = 512;
  cfg.learning_rate = 3e-3;
  cfg.seed = 8;
  cfg.token_layers = grid.layers();
  const ar::Vocab vocab = ar::Vocab::from_texts(1024, {text});
  const ar::Example ex = ar::make_example(text, grid, vocab);
  ar::ArModel model(cfg, vocab);
  MemorizeRun run;
  run.ids = ex.ids.size();
  run.stats = ar::train_ar(model, {ex}, 500);
  run.final_nll = ar::example_nll(model, ex);
  run.greedy_exact = ar::generate(model, text, grid.layers()) == grid;
  return run;
}

/// Independent grammar check on surfaces: <mot>, five <part_i> blocks of c
/// codes each with c a positive multiple of `layers`, </mot>, <eos>.
bool grammar_valid(const std::vector<int>& ids, const ar::Vocab& vocab, std::size_t layers) {
  std::string s;
  for (int id : ids) s += vocab.surface(id) + " ";
  static const std::regex re(
      "<mot> <part_1> ((?:<code_\\d+> )+)</part_1> <part_2> ((?:<code_\\d+> )+)</part_2> "
      "<part_3> ((?:<code_\\d+> )+)</part_3> <part_4> ((?:<code_\\d+> )+)</part_4> "
      "<part_5> ((?:<code_\\d+> )+)</part_5> </mot> <eos> ");
  std::smatch m;
  if (!std::regex_match(s, m, re)) return false;
  std::size_t count0 = 0;
  for (std::size_t g = 1; g <= 5; ++g) {
    const std::string block = m[static_cast<int>(g)].str();
    std::size_t count = 0;
    for (std::size_t pos = block.find("<code_"); pos != std::string::npos; pos = block.find("<code_", pos + 1)) {
      if (std::stoul(block.substr(pos + 6)) >= vocab.codebook_size()) return false;
      ++count;
    }
    if (count % layers != 0) return false;
    if (g == 1) count0 = count;
    if (count != count0) return false;
  }
  return true;
}

Outcome constrained_sampling() {
  const std::vector<std::string> texts{"a person walks forward", "someone waves with the right hand", "", "squat"};
  const ar::Vocab vocab = ar::Vocab::from_texts(1024, texts);
  ar::ArConfig cfg;
  cfg.layers = 1;
  cfg.width = 32;
  cfg.heads = 2;
  cfg.context = 64;
  cfg.seed = 5;
  ar::ArModel model(cfg, vocab);
  std::mt19937_64 rng(6);
  ar::SamplingOptions opt;
  opt.top_k = vocab.size();
  opt.temperature = 1.0;
  std::size_t valid = 0, total = 0, max_steps = 0;
  for (; total < 10000; ++total) {
    const std::size_t layers = 1 + total % 3;
    const std::vector<int> ids = ar::sample_answer(model, texts[total % texts.size()], layers, opt, rng);
    if (grammar_valid(ids, vocab, layers)) ++valid;
    max_steps = std::max(max_steps, (ids.size() - 13) / (kNumParts * layers));
  }
  return {valid == total, std::to_string(valid) + "/" + std::to_string(total) +
                              " samples from random weights are grammar-valid (layers 1-3, up to " +
                              std::to_string(max_steps) + " time steps)"};
}

}  // namespace

int main() {
  std::printf("acceptance run\n");
  std::fflush(stdout);
  auto t = Clock::now();
  report(1, "autodiff soundness", autodiff_soundness(), seconds_since(t), 60.0);

  t = Clock::now();
  report(2, "quantizer oracle equivalence", quantizer_oracle(), seconds_since(t), 60.0);

  t = Clock::now();
  const TableCorpus corpus = table_corpus();
  std::vector<TokenizerRun> runs;
  prq::Tokenizer l4_tokenizer(table_config(4));
  for (const std::size_t layers : {1, 4, 6}) {
    runs.push_back(train_table_run(corpus, layers, layers == 4 ? &l4_tokenizer : nullptr));
    std::printf("  tokenizer L=%zu: %.1f s training, held-out MPJPE %.2f mm\n", layers, runs.back().train_seconds,
                runs.back().mpjpe_mm);
    std::fflush(stdout);
  }
  const double table_seconds = seconds_since(t);
  report(3, "quantization depth ordering", table_direction(runs), table_seconds, 1200.0);

  t = Clock::now();
  report(4, "round trips", round_trips(), seconds_since(t), 60.0);

  t = Clock::now();
  report(5, "concatenation contract", concat_contract(), seconds_since(t), 60.0);

  t = Clock::now();
  report(6, "filter thresholds", filter_examples(), seconds_since(t), 10.0);

  t = Clock::now();
  report(7, "metric oracles", metric_oracles(), seconds_since(t), 120.0);

  t = Clock::now();
  // Memorize a real text and its tokens from the L=4 tokenizer, cropped to 32 frames.
  const MotionSequence pair_motion = corpus.test.front().slice(0, 32);
  const std::string pair_text = "a person walks forward and turns left";
  const prq::TokenGrid pair_tokens = l4_tokenizer.tokenize(pair_motion);
  const MemorizeRun mem = memorize(pair_text, pair_tokens);
  std::size_t reached = 0;
  for (std::size_t s = 0; s < mem.stats.loss.size(); ++s) {
    if (mem.stats.loss[s] < 0.05) {
      reached = s + 1;
      break;
    }
  }
  const Outcome sampling = constrained_sampling();
  {
    char buf[256];
    std::snprintf(buf, sizeof buf, "NLL %.4f after 500 steps on a %zu-id pair (first < 0.05 at step %zu), greedy %s; ",
                  mem.final_nll, mem.ids, reached, mem.greedy_exact ? "reproduces the tokens" : "differs");
    const bool ok = mem.final_nll < 0.05 && reached > 0 && sampling.pass;
    report(8, "likelihood pipeline", {ok, buf + sampling.detail}, seconds_since(t), 300.0);
  }

  report(9, "loss accounting", loss_accounting(runs), 0.0, 0.0);

  t = Clock::now();
  bool identical = true;
  for (const auto& first : runs) {
    const TokenizerRun again = train_table_run(corpus, first.layers);
    bool same = again.log.steps.size() == first.log.steps.size() && again.checkpoint == first.checkpoint;
    for (std::size_t s = 0; same && s < first.log.steps.size(); ++s) {
      same = same_breakdown(first.log.steps[s], again.log.steps[s]);
    }
    identical = identical && same;
  }
  const MemorizeRun mem_again = memorize(pair_text, pair_tokens);
  const bool ar_same = mem_again.stats.loss.size() == mem.stats.loss.size() &&
                       std::memcmp(mem_again.stats.loss.data(), mem.stats.loss.data(),
                                   mem.stats.loss.size() * sizeof(double)) == 0;
  report(10, "determinism",
         {identical && ar_same, std::string("tokenizer runs L=1/4/6 rerun: loss curves and checkpoints ") +
                                    (identical ? "bitwise identical" : "DIFFER") + "; AR memorization rerun: " +
                                    (ar_same ? "bitwise identical" : "DIFFERS")},
         seconds_since(t), 0.0);

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
