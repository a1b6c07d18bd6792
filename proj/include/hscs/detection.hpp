#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "hscs/cube.hpp"

namespace hscs {

// Background mean and diagonally loaded maximum-likelihood covariance.
// Gamma^{-1} is applied through a Cholesky factor; Gamma is never inverted.
class BackgroundModel {
 public:
  // Loading fractions tried in order; the first that lifts the smallest
  // eigenvalue to >= kMinEigenFraction * trace/b is used.
  static constexpr double kLoadingLadder[] = {0.0, 1e-6, 1e-4, 1e-2};
  static constexpr double kMinEigenFraction = 1e-10;

  // Model from an explicit mean and (already final) covariance. Throws
  // DegenerateInput if the covariance is not positive definite.
  BackgroundModel(Spectrum mean, Eigen::MatrixXd covariance);

  // MLE mean/covariance of the columns of `pixels` (b x N), then loading.
  static BackgroundModel estimate(const Eigen::MatrixXd& pixels);

  const Spectrum& mean() const noexcept { return mean_; }
  // Gamma after loading.
  const Eigen::MatrixXd& covariance() const noexcept { return covariance_; }
  // The unloaded (1/N) sum (x - mean)(x - mean)^T.
  const Eigen::MatrixXd& sample_covariance() const noexcept { return sample_covariance_; }
  double epsilon() const noexcept { return epsilon_; }
  std::size_t bands() const noexcept { return static_cast<std::size_t>(mean_.size()); }

  // L^{-1} v with Gamma = L L^T, so <whiten(a), whiten(b)> = a^T Gamma^{-1} b.
  Eigen::VectorXd whiten(const Eigen::VectorXd& v) const;
  Eigen::VectorXd apply_inverse(const Eigen::VectorXd& v) const;

 private:
  BackgroundModel() = default;

  Spectrum mean_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd sample_covariance_;
  double epsilon_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> factor_;
};

// Background model over every pixel of the listed frames (which must be
// chemical free).
BackgroundModel estimate_background(const CubeVideo& video, std::span<const std::size_t> frame_indices);

// Per-pixel statistic on the spatial grid of a cube.
class DetectionMap {
 public:
  DetectionMap() = default;
  DetectionMap(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  DetectionMap(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double max() const;

  friend bool operator==(const DetectionMap&, const DetectionMap&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

enum class Statistic { Ace, Bulk, BulkPersistence };

std::string to_string(Statistic s);
// Accepts "ace", "bulk", "bulk+persistence".
Statistic parse_statistic(const std::string& name);

struct DetectionConfig {
  int neighborhood_radius = 1;  // (2r+1)^2 window
  int persistence_length = 5;
  double threshold_margin = 0.05;
  Statistic statistic = Statistic::BulkPersistence;
  // Subtract the background mean from the pixel under test before scoring.
  bool center_pixel = true;

  void validate() const;
};

// Squared Gamma^{-1} cosine between the pixel under test and the target
// signature. The pixel is centered by the background mean (unless
// center_pixel is false); the signature is an additive direction and is
// used as given. Returns 0 for a zero pixel; throws DegenerateInput for a
// zero signature.
double ace(const Spectrum& x, const Spectrum& s, const BackgroundModel& model, bool center_pixel = true);

DetectionMap ace_map(const HyperCube& cube, const Spectrum& s, const BackgroundModel& model,
                     bool center_pixel = true);

// 1 - prod(1 - c_i) over the (2r+1)x(2r+1) window, clipped at the borders.
DetectionMap bulk_coherence(const DetectionMap& map, int radius);

struct DetectionSeries {
  std::vector<DetectionMap> maps;
  double threshold = 0.0;
  std::vector<std::size_t> counts;
};

// Keeps a value only where it lies in a run of >= length consecutive frames
// strictly above threshold; everything else becomes 0. Counts are
// recomputed against the threshold.
DetectionSeries persistence_filter(const DetectionSeries& series, double threshold, int length);

// (1 + delta) * max over all pixels of the background maps.
double calibrate_threshold(std::span<const DetectionMap> background, double delta);

// Pixels with value strictly above threshold.
std::size_t count_above(const DetectionMap& map, double threshold);

// Uniform bins on [0, 1]; left-closed, last bin closed on both sides.
std::vector<std::size_t> histogram(const DetectionMap& map, std::size_t bins);

// Linear-interpolated percentile (q in [0, 100]) of a sample.
double percentile(std::vector<double> values, double q);

// Output of the full detection stack on one video arm.
struct DetectionResult {
  BackgroundModel model;
  // Statistic before persistence (ACE or bulk coherence), one map per frame.
  std::vector<DetectionMap> statistic;
  // Final series (after persistence when configured), with counts.
  DetectionSeries series;
};

// Estimates the background from background_frames, calibrates the threshold
// on the same frames, then scores every frame. Frames are processed on up
// to `threads` workers.
DetectionResult detect_video(const CubeVideo& video, const Spectrum& signature,
                             std::span<const std::size_t> background_frames, const DetectionConfig& cfg,
                             unsigned threads = 0);

}  // namespace hscs
