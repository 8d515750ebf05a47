#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "ot2m/ar/model.hpp"
#include "test_support.hpp"

using namespace ot2m;
using namespace ot2m::ar;
using ot2m::testing::thrown_kind;

namespace {

prq::TokenGrid random_grid(std::size_t steps, std::size_t layers, std::size_t codes, std::mt19937_64& rng) {
  prq::TokenGrid g(steps, kNumParts, layers);
  std::uniform_int_distribution<std::uint32_t> u(0, static_cast<std::uint32_t>(codes - 1));
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t p = 0; p < kNumParts; ++p)
      for (std::size_t k = 0; k < layers; ++k) g.at(t, p, k) = u(rng);
  return g;
}

ArConfig tiny_config() {
  ArConfig c;
  c.layers = 1;
  c.width = 16;
  c.heads = 2;
  c.context = 64;
  c.learning_rate = 3e-3;
  return c;
}

}  // namespace

TEST_CASE("vocab layout is disjoint and bijective") {
  const Vocab v = Vocab::from_texts(12, {"Walk forward", "walk back <x>"});
  CHECK(v.size() == 12 + kNumSpecials + 3);
  CHECK(v.words() == std::vector<std::string>{"back", "forward", "walk"});
  for (int id = 0; id < static_cast<int>(v.size()); ++id) {
    CHECK(int(v.is_code(id)) + int(v.is_special(id)) + int(v.is_word(id)) == 1);
    CHECK(v.id_of(v.surface(id)) == id);
  }
  CHECK(v.word("unknown") == v.special(Special::Unk));
  CHECK(thrown_kind([&] { v.id_of("<code_12>"); }) == ErrorKind::InvalidArgument);
  CHECK(thrown_kind([&] { v.surface(static_cast<int>(v.size())); }) == ErrorKind::IndexOutOfRange);
}

TEST_CASE("serialize length and order") {
  std::mt19937_64 rng(1);
  const Vocab v(8, {});
  const prq::TokenGrid g = random_grid(2, 2, 8, rng);
  const std::vector<int> ids = serialize_tokens(g, v);
  CHECK(ids.size() == 32);
  CHECK(ids.front() == v.special(Special::Mot));
  CHECK(ids.back() == v.special(Special::EndMot));
  CHECK(ids[1] == v.part_open(0));
  // Part 1 codes are time-major with layers innermost.
  CHECK(ids[2] == static_cast<int>(g.at(0, 0, 0)));
  CHECK(ids[3] == static_cast<int>(g.at(0, 0, 1)));
  CHECK(ids[4] == static_cast<int>(g.at(1, 0, 0)));
  CHECK(ids[6] == v.part_close(0));
  CHECK(ids[7] == v.part_open(1));
}

TEST_CASE("serialize round trip on random grids") {
  std::mt19937_64 rng(2);
  const Vocab v(1024, {});
  for (int i = 0; i < 100; ++i) {
    const std::size_t layers = 1 + rng() % 6, steps = 1 + rng() % 20;
    const prq::TokenGrid g = random_grid(steps, layers, 1024, rng);
    CHECK(deserialize_tokens(serialize_tokens(g, v), v, layers) == g);
  }
}

TEST_CASE("deserialize reports the first violation") {
  std::mt19937_64 rng(3);
  const Vocab v(8, {});
  const std::vector<int> ids = serialize_tokens(random_grid(2, 2, 8, rng), v);
  auto bad = ids;
  bad[7] = v.part_open(2);
  try {
    deserialize_tokens(bad, v, 2);
    FAIL("expected MalformedStream");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MalformedStream);
    CHECK(std::string(e.what()).find("position 7") != std::string::npos);
  }
  bad = ids;
  bad.erase(bad.begin() + 2);  // part 1 now holds 3 codes, not a multiple of 2
  CHECK(thrown_kind([&] { deserialize_tokens(bad, v, 2); }) == ErrorKind::MalformedStream);
  bad = ids;
  bad.push_back(v.special(Special::Eos));
  CHECK(thrown_kind([&] { deserialize_tokens(bad, v, 2); }) == ErrorKind::MalformedStream);
  CHECK(thrown_kind([&] { deserialize_tokens({}, v, 2); }) == ErrorKind::MalformedStream);
}

TEST_CASE("automaton enforces the template") {
  const Vocab v(4, {});
  TemplateAutomaton a(v, 2, 4);
  CHECK(a.allowed() == std::vector<int>{v.special(Special::Mot)});
  a.advance(v.special(Special::Mot));
  CHECK(!a.allows(v.part_open(1)));
  a.advance(v.part_open(0));
  CHECK(!a.allows(v.part_close(0)));  // no codes yet
  a.advance(1);
  CHECK(!a.allows(v.part_close(0)));  // 1 code is not a multiple of 2 layers
  a.advance(2);
  CHECK(a.allows(v.part_close(0)));
  CHECK(!a.allows(v.part_open(1)));
  a.advance(3);
  a.advance(0);
  CHECK(!a.allows(1));  // cap of 4 codes reached
  a.advance(v.part_close(0));
  for (std::size_t p = 1; p < kNumParts; ++p) {
    a.advance(v.part_open(p));
    for (int c = 0; c < 4; ++c) {
      CHECK(!a.allows(v.part_close(p)));
      a.advance(c);
    }
    CHECK(!a.allows(0));
    a.advance(v.part_close(p));
  }
  CHECK(a.min_remaining() == 2);
  a.advance(v.special(Special::EndMot));
  a.advance(v.special(Special::Eos));
  CHECK(a.done());
  CHECK(thrown_kind([&] { a.advance(0); }) == ErrorKind::MalformedStream);
  CHECK(max_codes_for_budget(13 + 5 * 8, 4) == 8);
  CHECK(max_codes_for_budget(13 + 5 * 7, 4) == 4);
  CHECK(max_codes_for_budget(12 + 5, 1) == 0);
}

TEST_CASE("nll examples") {
  nn::Tape tape;
  const std::size_t vsize = 7;
  const nn::Var uniform = tape.constant(nn::Tensor({3, vsize}, 0.25));
  CHECK(nll_loss(uniform, {1, 2, 3}).value().item() == doctest::Approx(std::log(7.0)).epsilon(1e-12));

  nn::Tensor onehot({2, vsize}, 0.0);
  onehot[0 * vsize + 4] = 60.0;
  onehot[1 * vsize + 2] = 60.0;
  CHECK(nll_loss(tape.constant(onehot), {4, 2}).value().item() < 1e-20);

  // Hand computation: rows (1,2,3), (0,0,0), (3,1,0) with targets 2, 0, 1 over 3 classes.
  nn::Tensor small({3, 3}, std::vector<double>{1, 2, 3, 0, 0, 0, 3, 1, 0});
  const double l0 = -(3 - std::log(std::exp(1) + std::exp(2) + std::exp(3)));
  const double l1 = std::log(3.0);
  const double l2 = -(1 - std::log(std::exp(3) + std::exp(1) + 1));
  CHECK(nll_loss(tape.constant(small), {2, 0, 1}).value().item() == doctest::Approx((l0 + l1 + l2) / 3).epsilon(1e-12));
  CHECK(nll_loss(tape.constant(small), {2, -1, -1}).value().item() == doctest::Approx(l0).epsilon(1e-12));
  CHECK(thrown_kind([&] { nll_loss(tape.constant(small), {1, 2}); }) == ErrorKind::ShapeMismatch);
}

TEST_CASE("example loss matches a per-position log-softmax oracle") {
  std::mt19937_64 rng(4);
  const Vocab v = Vocab::from_texts(10, {"jump up high"});
  const ArModel model(tiny_config(), v);
  const Example ex = make_example("jump up high", random_grid(2, 2, 10, rng), v);
  CHECK(ex.answer_begin == 4);
  const std::vector<int> targets = shifted_targets(ex);
  CHECK(std::count(targets.begin(), targets.end(), -1) == 3);

  nn::Tape tape;
  const std::vector<int> inputs(ex.ids.begin(), ex.ids.end() - 1);
  const nn::Tensor logits = model.logits(tape, inputs).value();
  double sum = 0.0;
  std::size_t count = 0;
  const std::size_t vs = v.size();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (targets[i] < 0) continue;
    double mx = -1e300;
    for (std::size_t k = 0; k < vs; ++k) mx = std::max(mx, logits[i * vs + k]);
    double z = 0.0;
    for (std::size_t k = 0; k < vs; ++k) z += std::exp(logits[i * vs + k] - mx);
    sum += -(logits[i * vs + targets[i]] - mx - std::log(z));
    ++count;
  }
  CHECK(std::abs(example_nll(model, ex) - sum / static_cast<double>(count)) <= 1e-9);
}

TEST_CASE("loss masking keeps target accounting fixed under prompt permutation") {
  std::mt19937_64 rng(5);
  const Vocab v = Vocab::from_texts(10, {"raise both arms now"});
  const prq::TokenGrid g = random_grid(2, 1, 10, rng);
  const Example a = make_example("raise both arms now", g, v);
  const Example b = make_example("now arms both raise", g, v);
  CHECK(a.answer_begin == b.answer_begin);
  CHECK(shifted_targets(a) == shifted_targets(b));
}

TEST_CASE("cached decoder matches the full forward pass") {
  std::mt19937_64 rng(6);
  const Vocab v = Vocab::from_texts(10, {"turn left"});
  const ArModel model(tiny_config(), v);
  const Example ex = make_example("turn left", random_grid(3, 2, 10, rng), v);
  nn::Tape tape;
  const nn::Tensor full = model.logits(tape, ex.ids).value();
  Decoder d(model);
  double diff = 0.0;
  for (std::size_t i = 0; i < ex.ids.size(); ++i) {
    const Eigen::VectorXd l = d.feed(ex.ids[i]);
    for (std::size_t k = 0; k < v.size(); ++k) diff = std::max(diff, std::abs(l[k] - full[i * v.size() + k]));
  }
  CHECK(diff < 1e-12);
}

TEST_CASE("constrained sampling from random weights always deserializes") {
  const Vocab v = Vocab::from_texts(32, {"a person waves"});
  ArConfig c = tiny_config();
  const ArModel model(c, v);
  std::mt19937_64 rng(7);
  SamplingOptions opt;
  opt.top_k = 20;
  for (int i = 0; i < 300; ++i) {
    const prq::TokenGrid g = generate(model, i % 2 ? "a person waves" : "", 2, opt, rng);
    CHECK(g.layers() == 2);
    CHECK(g.steps() >= 1);
  }
  SamplingOptions k1;
  k1.top_k = 1;
  CHECK(generate(model, "a person waves", 2, k1) == generate(model, "a person waves", 2));
}

TEST_CASE("generation errors") {
  const Vocab v(8, {});
  ArConfig c = tiny_config();
  c.context = 20;
  const ArModel model(c, v);
  CHECK(thrown_kind([&] { generate(model, "", 2); }) == ErrorKind::MaxLengthExceeded);
  std::mt19937_64 rng(8);
  const Example ex = make_example("", random_grid(1, 2, 8, rng), v);
  ArModel trainable(c, v);
  CHECK(thrown_kind([&] { train_ar(trainable, {ex}, 1); }) == ErrorKind::ContextOverflow);
}

TEST_CASE("single pair memorization, determinism and checkpoint") {
  std::mt19937_64 rng(9);
  const std::string text = "a person squats down";
  const Vocab v = Vocab::from_texts(16, {text});
  const prq::TokenGrid g = random_grid(2, 2, 16, rng);
  const Example ex = make_example(text, g, v);
  ArConfig c = tiny_config();
  c.width = 32;
  ArModel a(c, v), b(c, v);
  const TrainStats sa = train_ar(a, {ex}, 150);
  const TrainStats sb = train_ar(b, {ex}, 150);
  CHECK(sa.loss == sb.loss);
  CHECK(sa.loss.back() < 0.05);
  CHECK(generate(a, text, 2) == g);

  const auto path = std::filesystem::temp_directory_path() / "ot2m_test_ar.ckpt";
  a.save(path);
  const ArModel r = ArModel::load(path);
  std::filesystem::remove(path);
  CHECK(r.vocab().words() == v.words());
  CHECK(generate(r, text, 2) == g);
}

TEST_CASE("empty text trains an unconditional model") {
  std::mt19937_64 rng(10);
  const Vocab v(8, {});
  const prq::TokenGrid g = random_grid(1, 1, 8, rng);
  ArModel m(tiny_config(), v);
  const TrainStats s = train_ar(m, {make_example("", g, v)}, 100);
  CHECK(s.loss.back() < s.loss.front());
  CHECK(generate(m, "", 1) == g);
}
