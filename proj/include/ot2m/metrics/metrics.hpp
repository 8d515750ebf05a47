#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ot2m/core/motion.hpp"

namespace ot2m::metrics {

/// One feature vector per row.
using FeatureMatrix = Eigen::MatrixXd;

/// Mean over frames and stored joints of the joint position distance, in
/// millimeters. Throws ShapeMismatch.
double mpjpe(const MotionSequence& a, const MotionSequence& b);

struct Gaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Sample mean and unbiased covariance of the rows. Needs at least 2 rows.
Gaussian fit_gaussian(const FeatureMatrix& feats);

/// ||mu1 - mu2||^2 + tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2). Covariances are
/// symmetrized; eigenvalues down to -1e-10 (relative to the largest) are
/// clamped to 0, anything lower throws NotPSD.
double frechet_distance(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& s1, const Eigen::VectorXd& mu2,
                        const Eigen::MatrixXd& s2);
double frechet_distance(const Gaussian& a, const Gaussian& b);
/// Fréchet distance between Gaussian fits of two feature sets.
double fid(const FeatureMatrix& a, const FeatureMatrix& b);

struct RPrecision {
  double r_at_1 = 0.0;
  double r_at_2 = 0.0;
  double r_at_3 = 0.0;
  std::size_t queries = 0;
  std::size_t pool = 0;
  std::uint64_t seed = 0;
};

/// Row i of `motion` is paired with row i of `text`. Each motion ranks its
/// text against pool-1 distinct random other texts by Euclidean distance;
/// distractors at exactly the true distance rank ahead of it. Throws
/// InsufficientPool when there are fewer rows than `pool`.
RPrecision r_precision(const FeatureMatrix& motion, const FeatureMatrix& text, std::size_t pool = 32,
                       std::uint64_t seed = 0);

/// Mean Euclidean distance between paired rows. Throws ShapeMismatch.
double mm_dist(const FeatureMatrix& motion, const FeatureMatrix& text);

/// Mean distance over `n_pairs` disjoint random pairs of rows. Throws
/// InsufficientSamples when rows < 2 * n_pairs.
double diversity(const FeatureMatrix& feats, std::size_t n_pairs = 300, std::uint64_t seed = 0);

/// Maps motions (and texts, once fitted) to fixed-length vectors.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  virtual Eigen::VectorXd motion_features(const MotionSequence& m) const = 0;
  virtual Eigen::VectorXd text_features(const std::string& text) const = 0;

  FeatureMatrix motion_features(const std::vector<MotionSequence>& motions) const;
  FeatureMatrix text_features(const std::vector<std::string>& texts) const;
};

/// Handcrafted extractor. Motion side, in the clip's frame-0 facing frame:
/// per stored joint the mean and std of hip-relative positions and of
/// velocities (m/s), then root trajectory statistics (net displacement x/z,
/// mean speed, mean yaw rate, mean and std of height). Text side: ridge
/// regression from lowercase bag-of-words onto motion features, fitted on
/// paired data; unfitted text queries throw InvalidArgument.
class KinematicExtractor : public FeatureExtractor {
 public:
  std::string id() const override { return "kinematic-v1"; }
  std::size_t dim() const override;
  Eigen::VectorXd motion_features(const MotionSequence& m) const override;
  Eigen::VectorXd text_features(const std::string& text) const override;
  using FeatureExtractor::motion_features;
  using FeatureExtractor::text_features;

  void fit_text(const std::vector<std::string>& texts, const std::vector<MotionSequence>& motions, double ridge = 1e-3);
  bool text_fitted() const { return !vocab_.empty(); }

 private:
  std::vector<std::string> vocab_;
  Eigen::MatrixXd weights_;  // (vocab + 1) x dim, last row is the bias
  Eigen::VectorXd bag(const std::string& text) const;
};

std::vector<std::string> words_of(const std::string& text);

struct EvalReport {
  double mpjpe = 0.0;
  double fid = 0.0;
  double r_at_1 = 0.0;
  double r_at_2 = 0.0;
  double r_at_3 = 0.0;
  double mm_dist = 0.0;
  double diversity = 0.0;
  std::size_t samples = 0;
  std::size_t pool = 32;
  std::size_t diversity_pairs = 0;
  std::uint64_t seed = 0;
  std::string extractor;
  std::vector<std::string> warnings;

  std::string to_json() const;
};

struct EvalOptions {
  std::size_t pool = 32;
  std::size_t diversity_pairs = 300;
  std::uint64_t seed = 0;
};

/// Reconstruction report: MPJPE between paired motions plus distribution
/// metrics of the reconstructions against the originals. Retrieval metrics
/// are filled when the extractor has text features and enough samples; the
/// diversity pair count shrinks to fit small sets.
EvalReport evaluate(const std::vector<MotionSequence>& reference, const std::vector<MotionSequence>& candidate,
                    const std::vector<std::string>& texts, const FeatureExtractor& extractor,
                    const EvalOptions& options = {});

}  // namespace ot2m::metrics
