#include "ot2m/ar/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ot2m/error.hpp"

namespace ot2m::ar {

using nn::Tape;
using nn::Tensor;
using nn::Var;

namespace {

using RowMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

RowMap as_matrix(const Tensor& t) {
  return RowMap(t.data(), static_cast<Eigen::Index>(t.dim(0)), static_cast<Eigen::Index>(t.dim(1)));
}

Eigen::Map<const Eigen::VectorXd> as_vector(const Tensor& t) {
  return Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(t.size()));
}

Eigen::RowVectorXd layer_norm_row(const Eigen::RowVectorXd& x, const Tensor& g, const Tensor& b) {
  const double mean = x.mean();
  const double var = (x.array() - mean).square().mean();
  const Eigen::RowVectorXd xhat = (x.array() - mean) / std::sqrt(var + 1e-5);
  return xhat.cwiseProduct(as_vector(g).transpose()) + as_vector(b).transpose();
}

void check_ids(const std::vector<int>& ids, const ArModel& model) {
  if (ids.empty() || ids.size() > model.config().context) {
    throw Error(ErrorKind::ContextOverflow, "sequence of " + std::to_string(ids.size()) + " ids does not fit context " +
                                                std::to_string(model.config().context));
  }
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= model.vocab().size()) {
      throw Error(ErrorKind::IndexOutOfRange, "token id " + std::to_string(id));
    }
  }
}

/// Layout of the words inside a checkpoint: bytes joined by '\n'.
Tensor pack_words(const std::vector<std::string>& words) {
  std::vector<double> bytes;
  for (const auto& w : words) {
    for (unsigned char c : w) bytes.push_back(c);
    bytes.push_back('\n');
  }
  const std::size_t n = bytes.size();
  return Tensor({n}, std::move(bytes));
}

std::vector<std::string> unpack_words(const Tensor& t) {
  std::vector<std::string> words;
  std::string cur;
  for (double v : t.values()) {
    const auto c = static_cast<char>(static_cast<unsigned char>(v));
    if (c == '\n') {
      words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  return words;
}

}  // namespace

void ArConfig::validate() const {
  if (layers == 0 || width == 0 || heads == 0 || width % heads != 0) {
    throw Error(ErrorKind::InvalidArgument, "width must be a positive multiple of heads and layers positive");
  }
  if (token_layers == 0) throw Error(ErrorKind::InvalidArgument, "token layers must be positive");
  if (context < 2) throw Error(ErrorKind::InvalidArgument, "context must hold at least 2 ids");
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::InvalidArgument, "learning rate must be positive");
  if (batch_size == 0) throw Error(ErrorKind::InvalidArgument, "batch size must be positive");
}

std::vector<int> make_prompt(const std::string& text, const Vocab& vocab) {
  std::vector<int> ids{vocab.special(Special::Bos)};
  for (int id : vocab.encode_text(text)) ids.push_back(id);
  return ids;
}

Example make_example(const std::string& text, const prq::TokenGrid& grid, const Vocab& vocab) {
  Example ex;
  ex.ids = make_prompt(text, vocab);
  ex.answer_begin = ex.ids.size();
  for (int id : serialize_tokens(grid, vocab)) ex.ids.push_back(id);
  ex.ids.push_back(vocab.special(Special::Eos));
  return ex;
}

prq::TokenGrid fit_to_context(const prq::TokenGrid& grid, const std::string& text, const Vocab& vocab,
                              std::size_t context) {
  const std::size_t prompt = make_prompt(text, vocab).size();
  const std::size_t budget = context + 1 > prompt ? context + 1 - prompt : 0;
  const std::size_t steps = std::min(grid.steps(), max_codes_for_budget(budget, grid.layers()) / grid.layers());
  if (steps == 0) {
    throw Error(ErrorKind::ContextOverflow, "context " + std::to_string(context) + " cannot hold a prompt of " +
                                                std::to_string(prompt) + " ids and one time step");
  }
  if (steps == grid.steps()) return grid;
  prq::TokenGrid out(steps, grid.parts(), grid.layers());
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t p = 0; p < grid.parts(); ++p) {
      for (std::size_t k = 0; k < grid.layers(); ++k) out.at(t, p, k) = grid.at(t, p, k);
    }
  }
  return out;
}

std::vector<int> shifted_targets(const Example& ex) {
  std::vector<int> targets(ex.ids.size() - 1, -1);
  for (std::size_t i = 0; i + 1 < ex.ids.size(); ++i) {
    if (i + 1 >= ex.answer_begin) targets[i] = ex.ids[i + 1];
  }
  return targets;
}

Var nll_loss(Var logits, const std::vector<int>& targets) {
  if (logits.shape().size() != 2 || logits.shape()[0] != targets.size()) {
    throw Error(ErrorKind::ShapeMismatch, "nll_loss needs one target per logits row, got " +
                                              nn::shape_string(logits.shape()) + " and " +
                                              std::to_string(targets.size()) + " targets");
  }
  return nn::softmax_cross_entropy(logits, targets);
}

ArModel::ArModel(const ArConfig& cfg, Vocab vocab) : cfg_(cfg), vocab_(std::move(vocab)) {
  cfg_.validate();
  const std::size_t w = cfg_.width, v = vocab_.size();
  params_.reserve(6 + 12 * cfg_.layers);
  std::mt19937_64 rng(cfg_.seed * 0x9E3779B97F4A7C15ULL + 7);
  const double std_w = 0.02;
  const double std_proj = 0.02 / std::sqrt(2.0 * static_cast<double>(cfg_.layers));
  tok_emb_ = add("tok_emb", {v, w}, std_w, 0.0, rng);
  pos_emb_ = add("pos_emb", {cfg_.context, w}, std_w, 0.0, rng);
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    const std::string n = "layer" + std::to_string(l);
    Layer L{};
    L.ln1_g = add(n + ".ln1.gamma", {w}, 0.0, 1.0, rng);
    L.ln1_b = add(n + ".ln1.beta", {w}, 0.0, 0.0, rng);
    L.qkv_w = add(n + ".attn.qkv.weight", {w, 3 * w}, std_w, 0.0, rng);
    L.qkv_b = add(n + ".attn.qkv.bias", {3 * w}, 0.0, 0.0, rng);
    L.out_w = add(n + ".attn.out.weight", {w, w}, std_proj, 0.0, rng);
    L.out_b = add(n + ".attn.out.bias", {w}, 0.0, 0.0, rng);
    L.ln2_g = add(n + ".ln2.gamma", {w}, 0.0, 1.0, rng);
    L.ln2_b = add(n + ".ln2.beta", {w}, 0.0, 0.0, rng);
    L.fc1_w = add(n + ".mlp.fc1.weight", {w, 4 * w}, std_w, 0.0, rng);
    L.fc1_b = add(n + ".mlp.fc1.bias", {4 * w}, 0.0, 0.0, rng);
    L.fc2_w = add(n + ".mlp.fc2.weight", {4 * w, w}, std_proj, 0.0, rng);
    L.fc2_b = add(n + ".mlp.fc2.bias", {w}, 0.0, 0.0, rng);
    layers_.push_back(L);
  }
  lnf_g_ = add("ln_f.gamma", {w}, 0.0, 1.0, rng);
  lnf_b_ = add("ln_f.beta", {w}, 0.0, 0.0, rng);
  head_w_ = add("head.weight", {w, v}, std_w, 0.0, rng);
  head_b_ = add("head.bias", {v}, 0.0, 0.0, rng);
}

std::size_t ArModel::add(const std::string& name, nn::Shape shape, double stddev, double fill, std::mt19937_64& rng) {
  Tensor t(std::move(shape), fill);
  if (stddev > 0.0) {
    std::normal_distribution<double> n(0.0, stddev);
    for (double& x : t.storage()) x = n(rng);
  }
  params_.emplace_back(name, std::move(t));
  return params_.size() - 1;
}

std::vector<nn::Parameter*> ArModel::parameter_ptrs() {
  std::vector<nn::Parameter*> out;
  for (auto& p : params_) out.push_back(&p);
  return out;
}

Var ArModel::forward(const std::vector<int>& ids, const Bind& bind) const {
  check_ids(ids, *this);
  const std::size_t t = ids.size(), w = cfg_.width, dh = w / cfg_.heads;
  std::vector<int> positions(t);
  std::iota(positions.begin(), positions.end(), 0);
  Var x = nn::add(nn::embedding(bind(tok_emb_), ids), nn::embedding(bind(pos_emb_), positions));
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (const Layer& L : layers_) {
    const Var h = nn::layer_norm(x, bind(L.ln1_g), bind(L.ln1_b));
    const Var qkv = nn::layer_bias(nn::matmul(h, bind(L.qkv_w)), bind(L.qkv_b), 1);
    std::vector<Var> heads;
    for (std::size_t i = 0; i < cfg_.heads; ++i) {
      const Var q = nn::slice(qkv, 1, i * dh, (i + 1) * dh);
      const Var k = nn::slice(qkv, 1, w + i * dh, w + (i + 1) * dh);
      const Var v = nn::slice(qkv, 1, 2 * w + i * dh, 2 * w + (i + 1) * dh);
      const Var att = nn::causal_softmax(nn::mul_scalar(nn::matmul(q, nn::transpose(k)), scale));
      heads.push_back(nn::matmul(att, v));
    }
    const Var o = heads.size() == 1 ? heads.front() : nn::concat(heads, 1);
    x = nn::add(x, nn::layer_bias(nn::matmul(o, bind(L.out_w)), bind(L.out_b), 1));
    const Var h2 = nn::layer_norm(x, bind(L.ln2_g), bind(L.ln2_b));
    const Var m = nn::relu(nn::layer_bias(nn::matmul(h2, bind(L.fc1_w)), bind(L.fc1_b), 1));
    x = nn::add(x, nn::layer_bias(nn::matmul(m, bind(L.fc2_w)), bind(L.fc2_b), 1));
  }
  const Var xf = nn::layer_norm(x, bind(lnf_g_), bind(lnf_b_));
  return nn::layer_bias(nn::matmul(xf, bind(head_w_)), bind(head_b_), 1);
}

Var ArModel::logits(Tape& tape, const std::vector<int>& ids) {
  return forward(ids, [&](std::size_t i) { return tape.parameter(params_[i]); });
}

Var ArModel::logits(Tape& tape, const std::vector<int>& ids) const {
  return forward(ids, [&](std::size_t i) { return tape.constant(params_[i].value); });
}

nn::Checkpoint ArModel::to_checkpoint() const {
  nn::Checkpoint ck;
  ck.put_scalar("config.layers", static_cast<double>(cfg_.layers));
  ck.put_scalar("config.width", static_cast<double>(cfg_.width));
  ck.put_scalar("config.heads", static_cast<double>(cfg_.heads));
  ck.put_scalar("config.context", static_cast<double>(cfg_.context));
  ck.put_scalar("config.token_layers", static_cast<double>(cfg_.token_layers));
  ck.put_scalar("vocab.codebook_size", static_cast<double>(vocab_.codebook_size()));
  ck.put("vocab.words", pack_words(vocab_.words()));
  for (const auto& p : params_) ck.put("model." + p.name, p.value);
  return ck;
}

ArModel ArModel::from_checkpoint(const nn::Checkpoint& ck) {
  ArConfig c;
  c.layers = static_cast<std::size_t>(ck.scalar("config.layers"));
  c.width = static_cast<std::size_t>(ck.scalar("config.width"));
  c.heads = static_cast<std::size_t>(ck.scalar("config.heads"));
  c.context = static_cast<std::size_t>(ck.scalar("config.context"));
  c.token_layers = static_cast<std::size_t>(ck.scalar("config.token_layers"));
  Vocab vocab(static_cast<std::size_t>(ck.scalar("vocab.codebook_size")), unpack_words(ck.get("vocab.words")));
  ArModel model(c, std::move(vocab));
  for (auto& p : model.params_) {
    const Tensor& t = ck.get("model." + p.name);
    if (t.shape() != p.value.shape()) {
      throw Error(ErrorKind::ShapeMismatch, "checkpoint tensor model." + p.name + " has shape " +
                                                nn::shape_string(t.shape()) + ", expected " +
                                                nn::shape_string(p.value.shape()));
    }
    p.value = t;
  }
  return model;
}

Decoder::Decoder(const ArModel& model) : model_(model) {
  const auto w = static_cast<Eigen::Index>(model.cfg_.width);
  const auto c = static_cast<Eigen::Index>(model.cfg_.context);
  keys_.assign(model.cfg_.layers, Eigen::MatrixXd(c, w));
  values_.assign(model.cfg_.layers, Eigen::MatrixXd(c, w));
}

Eigen::VectorXd Decoder::feed(int id) {
  const ArModel& m = model_;
  if (length_ >= m.cfg_.context) {
    throw Error(ErrorKind::ContextOverflow, "decoder context of " + std::to_string(m.cfg_.context) + " is full");
  }
  if (id < 0 || static_cast<std::size_t>(id) >= m.vocab_.size()) {
    throw Error(ErrorKind::IndexOutOfRange, "token id " + std::to_string(id));
  }
  const auto& P = m.params_;
  const auto w = static_cast<Eigen::Index>(m.cfg_.width);
  const auto dh = static_cast<Eigen::Index>(m.cfg_.width / m.cfg_.heads);
  const auto pos = static_cast<Eigen::Index>(length_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Eigen::RowVectorXd x = as_matrix(P[m.tok_emb_].value).row(id) + as_matrix(P[m.pos_emb_].value).row(pos);
  for (std::size_t l = 0; l < m.layers_.size(); ++l) {
    const auto& L = m.layers_[l];
    const Eigen::RowVectorXd h = layer_norm_row(x, P[L.ln1_g].value, P[L.ln1_b].value);
    const Eigen::RowVectorXd qkv = h * as_matrix(P[L.qkv_w].value) + as_vector(P[L.qkv_b].value).transpose();
    keys_[l].row(pos) = qkv.segment(w, w);
    values_[l].row(pos) = qkv.segment(2 * w, w);
    Eigen::RowVectorXd o(w);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(m.cfg_.heads); ++i) {
      const auto k = keys_[l].block(0, i * dh, pos + 1, dh);
      Eigen::VectorXd s = k * qkv.segment(i * dh, dh).transpose() * scale;
      s = (s.array() - s.maxCoeff()).exp();
      s /= s.sum();
      o.segment(i * dh, dh) = s.transpose() * values_[l].block(0, i * dh, pos + 1, dh);
    }
    x += o * as_matrix(P[L.out_w].value) + as_vector(P[L.out_b].value).transpose();
    const Eigen::RowVectorXd h2 = layer_norm_row(x, P[L.ln2_g].value, P[L.ln2_b].value);
    const Eigen::RowVectorXd a =
        (h2 * as_matrix(P[L.fc1_w].value) + as_vector(P[L.fc1_b].value).transpose()).cwiseMax(0.0);
    x += a * as_matrix(P[L.fc2_w].value) + as_vector(P[L.fc2_b].value).transpose();
  }
  const Eigen::RowVectorXd xf = layer_norm_row(x, P[m.lnf_g_].value, P[m.lnf_b_].value);
  ++length_;
  return (xf * as_matrix(P[m.head_w_].value) + as_vector(P[m.head_b_].value).transpose()).transpose();
}

double example_nll(const ArModel& model, const Example& ex) {
  Tape tape;
  const std::vector<int> inputs(ex.ids.begin(), ex.ids.end() - 1);
  return nll_loss(model.logits(tape, inputs), shifted_targets(ex)).value().item();
}

TrainStats train_ar(ArModel& model, const std::vector<Example>& corpus, std::size_t steps,
                    const std::function<void(std::size_t, double)>& on_step) {
  const ArConfig& c = model.config();
  if (corpus.empty()) throw Error(ErrorKind::EmptyInput, "empty AR training corpus");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Example& ex = corpus[i];
    if (ex.ids.size() < 2 || ex.answer_begin >= ex.ids.size()) {
      throw Error(ErrorKind::InvalidArgument, "example " + std::to_string(i) + " has no answer ids");
    }
    if (ex.ids.size() - 1 > c.context) {
      throw Error(ErrorKind::ContextOverflow, "example " + std::to_string(i) + " needs " +
                                                  std::to_string(ex.ids.size() - 1) + " positions, context is " +
                                                  std::to_string(c.context));
    }
  }
  nn::Adam adam(model.parameter_ptrs(), c.learning_rate);
  std::mt19937_64 rng(c.seed * 0x9E3779B97F4A7C15ULL + 11);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();
  TrainStats stats;
  for (std::size_t s = 0; s < steps; ++s) {
    Tape tape;
    Var total;
    const std::size_t batch = std::min(c.batch_size, corpus.size());
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const Example& ex = corpus[order[cursor++]];
      const std::vector<int> inputs(ex.ids.begin(), ex.ids.end() - 1);
      const Var loss = nll_loss(model.logits(tape, inputs), shifted_targets(ex));
      total = b == 0 ? loss : nn::add(total, loss);
    }
    total = nn::mul_scalar(total, 1.0 / static_cast<double>(batch));
    const double value = total.value().item();
    if (!std::isfinite(value)) {
      throw Error(ErrorKind::NonFiniteLoss, "AR loss is " + std::to_string(value) + " at step " + std::to_string(s));
    }
    adam.zero_grad();
    tape.backward(total);
    if (c.grad_clip > 0.0) {
      double sq = 0.0;
      for (const auto& p : model.parameters()) {
        for (double g : p.grad.values()) sq += g * g;
      }
      const double norm = std::sqrt(sq);
      if (norm > c.grad_clip) {
        for (auto& p : model.parameters()) {
          for (double& g : p.grad.values()) g *= c.grad_clip / norm;
        }
      }
    }
    adam.step();
    stats.loss.push_back(value);
    if (on_step) on_step(s, value);
  }
  return stats;
}

prq::TokenGrid generate(const ArModel& model, const std::string& text, std::size_t layers,
                        const SamplingOptions& options) {
  std::mt19937_64 rng(options.seed);
  return generate(model, text, layers, options, rng);
}

std::vector<int> sample_answer(const ArModel& model, const std::string& text, std::size_t layers,
                               const SamplingOptions& options, std::mt19937_64& rng) {
  const Vocab& vocab = model.vocab();
  const std::vector<int> prompt = make_prompt(text, vocab);
  const std::size_t context = model.config().context;
  // The last id of the answer (<eos>) is produced but never fed back.
  if (prompt.size() >= context) {
    throw Error(ErrorKind::MaxLengthExceeded, "prompt of " + std::to_string(prompt.size()) + " ids fills the context");
  }
  std::size_t max_codes = max_codes_for_budget(context - prompt.size() + 1, layers);
  if (options.max_steps > 0) max_codes = std::min(max_codes, options.max_steps * layers);
  if (max_codes == 0) {
    throw Error(ErrorKind::MaxLengthExceeded, "context " + std::to_string(context) + " cannot hold one time step after a " +
                                                  std::to_string(prompt.size()) + "-id prompt");
  }
  TemplateAutomaton automaton(vocab, layers, max_codes);
  Decoder decoder(model);
  Eigen::VectorXd logits;
  for (int id : prompt) logits = decoder.feed(id);
  std::vector<int> answer;
  std::vector<std::pair<double, int>> cand;
  while (!automaton.done()) {
    const std::vector<int> legal = automaton.allowed();
    int next = legal.front();
    if (legal.size() > 1) {
      if (options.top_k == 0) {
        for (int id : legal) {
          if (logits[id] > logits[next]) next = id;
        }
      } else {
        cand.clear();
        for (int id : legal) cand.emplace_back(logits[id], id);
        const std::size_t k = std::min(options.top_k, cand.size());
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(),
                          [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
        const double temp = options.temperature > 0.0 ? options.temperature : 1.0;
        std::vector<double> weights(k);
        for (std::size_t i = 0; i < k; ++i) weights[i] = std::exp((cand[i].first - cand[0].first) / temp);
        double u = std::uniform_real_distribution<double>(0.0, std::accumulate(weights.begin(), weights.end(), 0.0))(rng);
        next = cand[k - 1].second;
        for (std::size_t i = 0; i < k; ++i) {
          if (u < weights[i]) {
            next = cand[i].second;
            break;
          }
          u -= weights[i];
        }
      }
    }
    automaton.advance(next);
    answer.push_back(next);
    if (next == vocab.special(Special::Eos)) break;
    logits = decoder.feed(next);
  }
  return answer;
}

prq::TokenGrid generate(const ArModel& model, const std::string& text, std::size_t layers,
                        const SamplingOptions& options, std::mt19937_64& rng) {
  std::vector<int> answer = sample_answer(model, text, layers, options, rng);
  answer.pop_back();  // <eos>
  return deserialize_tokens(answer, model.vocab(), layers);
}

}  // namespace ot2m::ar
