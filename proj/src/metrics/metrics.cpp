#include "ot2m/metrics/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <json.hpp>

#include "ot2m/error.hpp"

namespace ot2m::metrics {

double mpjpe(const MotionSequence& a, const MotionSequence& b) {
  if (a.num_frames() != b.num_frames() || a.dim() != b.dim() || &a.skeleton() != &b.skeleton()) {
    throw Error(ErrorKind::ShapeMismatch, "mpjpe needs motions of equal shape, got " + std::to_string(a.num_frames()) +
                                              " and " + std::to_string(b.num_frames()) + " frames");
  }
  const Skeleton& sk = a.skeleton();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < a.num_frames(); ++t) {
    for (std::size_t j = 0; j < sk.num_joints(); ++j) {
      if (j == sk.root) continue;
      sum += (a.position(t, j) - b.position(t, j)).norm();
      ++count;
    }
  }
  return 1000.0 * sum / static_cast<double>(count);
}

Gaussian fit_gaussian(const FeatureMatrix& feats) {
  if (feats.rows() < 2) {
    throw Error(ErrorKind::InsufficientSamples, "a Gaussian fit needs at least 2 samples");
  }
  Gaussian g;
  g.mean = feats.colwise().mean().transpose();
  const Eigen::MatrixXd centered = feats.rowwise() - g.mean.transpose();
  g.cov = centered.transpose() * centered / static_cast<double>(feats.rows() - 1);
  return g;
}

namespace {

/// Symmetric PSD square root; small negative eigenvalues clamp to zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s, const char* what) {
  const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  Eigen::VectorXd ev = es.eigenvalues();
  const double tol = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -tol) {
      std::ostringstream msg;
      msg << what << " has eigenvalue " << ev[i];
      throw Error(ErrorKind::NotPSD, msg.str());
    }
    ev[i] = std::sqrt(std::max(ev[i], 0.0));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& s1, const Eigen::VectorXd& mu2,
                        const Eigen::MatrixXd& s2) {
  const Eigen::Index d = mu1.size();
  if (mu2.size() != d || s1.rows() != d || s1.cols() != d || s2.rows() != d || s2.cols() != d) {
    throw Error(ErrorKind::ShapeMismatch, "frechet_distance needs means and covariances of one dimension");
  }
  const Eigen::MatrixXd a = 0.5 * (s1 + s1.transpose());
  const Eigen::MatrixXd b = 0.5 * (s2 + s2.transpose());
  const Eigen::MatrixXd root_a = psd_sqrt(a, "first covariance");
  psd_sqrt(b, "second covariance");
  const Eigen::MatrixXd cross = psd_sqrt(root_a * b * root_a, "cross term");
  const double value = (mu1 - mu2).squaredNorm() + a.trace() + b.trace() - 2.0 * cross.trace();
  if (value < -1e-6) {
    throw Error(ErrorKind::NotPSD, "negative Fréchet distance " + std::to_string(value));
  }
  return std::max(value, 0.0);
}

double frechet_distance(const Gaussian& a, const Gaussian& b) { return frechet_distance(a.mean, a.cov, b.mean, b.cov); }

double fid(const FeatureMatrix& a, const FeatureMatrix& b) { return frechet_distance(fit_gaussian(a), fit_gaussian(b)); }

RPrecision r_precision(const FeatureMatrix& motion, const FeatureMatrix& text, std::size_t pool, std::uint64_t seed) {
  if (motion.rows() != text.rows() || motion.cols() != text.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "r_precision needs paired features of one dimension");
  }
  const auto n = static_cast<std::size_t>(motion.rows());
  if (pool < 1 || n < pool) {
    throw Error(ErrorKind::InsufficientPool, "r_precision needs at least " + std::to_string(pool) + " pairs, got " +
                                                 std::to_string(n));
  }
  RPrecision out;
  out.queries = n;
  out.pool = pool;
  out.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> distractors;
  std::size_t hits[3] = {0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    distractors.clear();
    while (distractors.size() + 1 < pool) {
      const std::size_t j = pick(rng);
      if (j != i && std::find(distractors.begin(), distractors.end(), j) == distractors.end()) distractors.push_back(j);
    }
    const auto row = static_cast<Eigen::Index>(i);
    const double truth = (motion.row(row) - text.row(row)).norm();
    std::size_t ahead = 0;
    for (std::size_t j : distractors) {
      if ((motion.row(row) - text.row(static_cast<Eigen::Index>(j))).norm() <= truth) ++ahead;
    }
    for (std::size_t k = 0; k < 3; ++k) {
      if (ahead <= k) ++hits[k];
    }
  }
  out.r_at_1 = static_cast<double>(hits[0]) / static_cast<double>(n);
  out.r_at_2 = static_cast<double>(hits[1]) / static_cast<double>(n);
  out.r_at_3 = static_cast<double>(hits[2]) / static_cast<double>(n);
  return out;
}

double mm_dist(const FeatureMatrix& motion, const FeatureMatrix& text) {
  if (motion.rows() != text.rows() || motion.cols() != text.cols() || motion.rows() == 0) {
    throw Error(ErrorKind::ShapeMismatch, "mm_dist needs a nonempty set of paired features of one dimension");
  }
  return (motion - text).rowwise().norm().mean();
}

double diversity(const FeatureMatrix& feats, std::size_t n_pairs, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(feats.rows());
  if (n_pairs == 0 || n < 2 * n_pairs) {
    throw Error(ErrorKind::InsufficientSamples, "diversity over " + std::to_string(n_pairs) + " pairs needs " +
                                                    std::to_string(2 * n_pairs) + " samples, got " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  double sum = 0.0;
  for (std::size_t i = 0; i < n_pairs; ++i) {
    sum += (feats.row(static_cast<Eigen::Index>(order[2 * i])) - feats.row(static_cast<Eigen::Index>(order[2 * i + 1])))
               .norm();
  }
  return sum / static_cast<double>(n_pairs);
}

FeatureMatrix FeatureExtractor::motion_features(const std::vector<MotionSequence>& motions) const {
  FeatureMatrix out(static_cast<Eigen::Index>(motions.size()), static_cast<Eigen::Index>(dim()));
  for (std::size_t i = 0; i < motions.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = motion_features(motions[i]);
  return out;
}

FeatureMatrix FeatureExtractor::text_features(const std::vector<std::string>& texts) const {
  FeatureMatrix out(static_cast<Eigen::Index>(texts.size()), static_cast<Eigen::Index>(dim()));
  for (std::size_t i = 0; i < texts.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = text_features(texts[i]);
  return out;
}

namespace {

constexpr std::size_t kPerJoint = 12;
constexpr std::size_t kRootStats = 6;

double frame0_yaw(const MotionSequence& m) {
  try {
    return yaw_of(m.facing(0));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::GimbalDegenerate) throw;
    return 0.0;
  }
}

}  // namespace

std::size_t KinematicExtractor::dim() const { return (Skeleton::body().num_joints() - 1) * kPerJoint + kRootStats; }

Eigen::VectorXd KinematicExtractor::motion_features(const MotionSequence& m) const {
  const Skeleton& sk = m.skeleton();
  const std::size_t frames = m.num_frames();
  const Vec3 start = m.root_position(0);
  const MotionSequence c = transform_motion(m, -frame0_yaw(m), -(yaw_rotation(-frame0_yaw(m)) * Vec3(start.x(), 0.0, start.z())));
  const auto hip_mid = [&](std::size_t t) {
    return Vec3(0.5 * (c.position(t, sk.hip_joints[0]) + c.position(t, sk.hip_joints[1])));
  };
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>((sk.num_joints() - 1) * kPerJoint + kRootStats));
  const double inv_t = 1.0 / static_cast<double>(frames);
  Eigen::Index o = 0;
  for (std::size_t j = 0; j < sk.num_joints(); ++j) {
    if (j == sk.root) continue;
    Vec3 pm = Vec3::Zero(), pq = Vec3::Zero(), vm = Vec3::Zero(), vq = Vec3::Zero();
    for (std::size_t t = 0; t < frames; ++t) {
      const Vec3 p = c.position(t, j) - hip_mid(t);
      pm += p;
      pq += p.cwiseProduct(p);
      const Vec3 v = t + 1 < frames ? Vec3((c.position(t + 1, j) - c.position(t, j)) * m.fps()) : Vec3::Zero();
      vm += v;
      vq += v.cwiseProduct(v);
    }
    pm *= inv_t;
    vm *= inv_t;
    const Vec3 ps = (pq * inv_t - pm.cwiseProduct(pm)).cwiseMax(0.0).cwiseSqrt();
    const Vec3 vs = (vq * inv_t - vm.cwiseProduct(vm)).cwiseMax(0.0).cwiseSqrt();
    out.segment<3>(o) = pm;
    out.segment<3>(o + 3) = ps;
    out.segment<3>(o + 6) = vm;
    out.segment<3>(o + 9) = vs;
    o += static_cast<Eigen::Index>(kPerJoint);
  }
  const Vec3 net = hip_mid(frames - 1) - hip_mid(0);
  double speed = 0.0, yaw_rate = 0.0, hm = 0.0, hq = 0.0;
  for (std::size_t t = 0; t < frames; ++t) {
    speed += std::hypot(c.root(t, root_channel::kVelocityX), c.root(t, root_channel::kVelocityZ)) * m.fps();
    yaw_rate += c.root(t, root_channel::kYawVelocity) * m.fps();
    const double h = c.root(t, root_channel::kHeight);
    hm += h;
    hq += h * h;
  }
  hm *= inv_t;
  out[o] = net.x();
  out[o + 1] = net.z();
  out[o + 2] = speed * inv_t;
  out[o + 3] = yaw_rate * inv_t;
  out[o + 4] = hm;
  out[o + 5] = std::sqrt(std::max(0.0, hq * inv_t - hm * hm));
  return out;
}

std::vector<std::string> words_of(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isalnum(u) || ch == '\'') {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

Eigen::VectorXd KinematicExtractor::bag(const std::string& text) const {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab_.size() + 1));
  for (const auto& w : words_of(text)) {
    const auto it = std::lower_bound(vocab_.begin(), vocab_.end(), w);
    if (it != vocab_.end() && *it == w) b[it - vocab_.begin()] += 1.0;
  }
  b[static_cast<Eigen::Index>(vocab_.size())] = 1.0;
  return b;
}

void KinematicExtractor::fit_text(const std::vector<std::string>& texts, const std::vector<MotionSequence>& motions,
                                  double ridge) {
  if (texts.size() != motions.size() || texts.empty()) {
    throw Error(ErrorKind::ShapeMismatch, "fit_text needs a nonempty list of paired texts and motions");
  }
  if (!(ridge > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "ridge must be positive");
  }
  std::vector<std::string> vocab;
  for (const auto& t : texts) {
    for (auto& w : words_of(t)) vocab.push_back(std::move(w));
  }
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  vocab_ = std::move(vocab);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(texts.size()), static_cast<Eigen::Index>(vocab_.size() + 1));
  for (std::size_t i = 0; i < texts.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = bag(texts[i]).transpose();
  const FeatureMatrix y = FeatureExtractor::motion_features(motions);
  Eigen::MatrixXd gram = x.transpose() * x;
  gram.diagonal().array() += ridge;
  weights_ = gram.ldlt().solve(x.transpose() * y);
}

Eigen::VectorXd KinematicExtractor::text_features(const std::string& text) const {
  if (!text_fitted()) {
    throw Error(ErrorKind::InvalidArgument, "text features need fit_text first");
  }
  return weights_.transpose() * bag(text);
}

std::string EvalReport::to_json() const {
  nlohmann::json j{{"mpjpe_mm", mpjpe},
                   {"fid", fid},
                   {"r_at_1", r_at_1},
                   {"r_at_2", r_at_2},
                   {"r_at_3", r_at_3},
                   {"mm_dist", mm_dist},
                   {"diversity", diversity},
                   {"samples", samples},
                   {"pool", pool},
                   {"diversity_pairs", diversity_pairs},
                   {"seed", seed},
                   {"extractor", extractor},
                   {"retrieval_distance", "euclidean"},
                   {"warnings", warnings}};
  return j.dump(2);
}

EvalReport evaluate(const std::vector<MotionSequence>& reference, const std::vector<MotionSequence>& candidate,
                    const std::vector<std::string>& texts, const FeatureExtractor& extractor, const EvalOptions& options) {
  if (reference.size() != candidate.size() || reference.empty()) {
    throw Error(ErrorKind::ShapeMismatch, "evaluate needs a nonempty list of paired motions");
  }
  if (!texts.empty() && texts.size() != reference.size()) {
    throw Error(ErrorKind::ShapeMismatch, "evaluate needs one text per motion");
  }
  EvalReport r;
  r.samples = reference.size();
  r.pool = options.pool;
  r.seed = options.seed;
  r.extractor = extractor.id();
  bool paired_shapes = true;
  double sum = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (reference[i].num_frames() != candidate[i].num_frames()) {
      paired_shapes = false;
      break;
    }
    sum += mpjpe(reference[i], candidate[i]);
  }
  if (paired_shapes) {
    r.mpjpe = sum / static_cast<double>(reference.size());
  } else {
    r.mpjpe = std::nan("");
    r.warnings.emplace_back("mpjpe skipped: paired motions differ in length");
  }
  const FeatureMatrix ref = extractor.motion_features(reference);
  const FeatureMatrix cand = extractor.motion_features(candidate);
  if (reference.size() >= 2) {
    r.fid = fid(ref, cand);
  } else {
    r.warnings.emplace_back("fid skipped: fewer than 2 samples");
  }
  r.diversity_pairs = std::min(options.diversity_pairs, candidate.size() / 2);
  if (r.diversity_pairs > 0) {
    r.diversity = diversity(cand, r.diversity_pairs, options.seed);
  }
  if (r.diversity_pairs < options.diversity_pairs) {
    r.warnings.emplace_back("diversity uses " + std::to_string(r.diversity_pairs) + " pairs");
  }
  const auto* kin = dynamic_cast<const KinematicExtractor*>(&extractor);
  const bool has_text = !texts.empty() && (kin == nullptr || kin->text_fitted());
  if (has_text && reference.size() >= options.pool) {
    const FeatureMatrix txt = extractor.text_features(texts);
    const RPrecision gen = r_precision(cand, txt, options.pool, options.seed);
    const RPrecision real = r_precision(ref, txt, options.pool, options.seed);
    r.r_at_1 = gen.r_at_1;
    r.r_at_2 = gen.r_at_2;
    r.r_at_3 = gen.r_at_3;
    r.mm_dist = mm_dist(cand, txt);
    if (gen.r_at_1 > real.r_at_1) {
      r.warnings.emplace_back("candidate R@1 exceeds reference R@1 (" + std::to_string(gen.r_at_1) + " > " +
                              std::to_string(real.r_at_1) + ")");
    }
  } else {
    r.warnings.emplace_back("retrieval metrics skipped: no fitted text features or fewer samples than the pool");
  }
  return r;
}

}  // namespace ot2m::metrics
