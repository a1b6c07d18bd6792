#include "hscs/detection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "hscs/errors.hpp"
#include "hscs/parallel.hpp"

namespace hscs {

BackgroundModel::BackgroundModel(Spectrum mean, Eigen::MatrixXd covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)), sample_covariance_(covariance_) {
  if (covariance_.rows() != mean_.size() || covariance_.cols() != mean_.size())
    throw DimensionMismatch("covariance must be b x b for a length-b mean");
  factor_.compute(covariance_);
  if (factor_.info() != Eigen::Success) throw DegenerateInput("background covariance is not positive definite");
}

BackgroundModel BackgroundModel::estimate(const Eigen::MatrixXd& pixels) {
  if (pixels.cols() == 0) throw InvalidArgument("background estimate needs at least one pixel");
  const auto b = pixels.rows();
  const double count = static_cast<double>(pixels.cols());
  BackgroundModel m;
  m.mean_ = pixels.rowwise().sum() / count;
  const Eigen::MatrixXd centered = pixels.colwise() - m.mean_;
  m.sample_covariance_ = (centered * centered.transpose()) / count;
  m.sample_covariance_ = 0.5 * (m.sample_covariance_ + m.sample_covariance_.transpose());

  const double scale = m.sample_covariance_.trace() / static_cast<double>(b);
  if (!(scale > 0.0))
    throw DegenerateInput("background covariance has rank 0 (constant data); diagonal loading has no scale");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m.sample_covariance_, Eigen::EigenvaluesOnly);
  const double smallest = eig.eigenvalues().minCoeff();
  for (double eps : kLoadingLadder) {
    if (smallest + eps * scale >= kMinEigenFraction * scale) {
      m.epsilon_ = eps;
      m.covariance_ = m.sample_covariance_;
      m.covariance_.diagonal().array() += eps * scale;
      m.factor_.compute(m.covariance_);
      if (m.factor_.info() == Eigen::Success) return m;
    }
  }
  throw DegenerateInput("background covariance stays singular under the largest diagonal loading");
}

Eigen::VectorXd BackgroundModel::whiten(const Eigen::VectorXd& v) const {
  return factor_.matrixL().solve(v);
}

Eigen::VectorXd BackgroundModel::apply_inverse(const Eigen::VectorXd& v) const { return factor_.solve(v); }

BackgroundModel estimate_background(const CubeVideo& video, std::span<const std::size_t> frame_indices) {
  if (frame_indices.empty()) throw InvalidArgument("no background frames designated");
  const std::size_t p = video.rows() * video.cols();
  Eigen::MatrixXd pixels(static_cast<Eigen::Index>(video.bands()),
                         static_cast<Eigen::Index>(p * frame_indices.size()));
  Eigen::Index col = 0;
  for (std::size_t t : frame_indices) {
    if (t >= video.size())
      throw OutOfBounds("background frame " + std::to_string(t) + " outside video of " +
                        std::to_string(video.size()) + " frames");
    const HyperCube& frame = video[t];
    for (std::size_t j = 0; j < frame.bands(); ++j) {
      const auto band = frame.band(j);
      for (std::size_t i = 0; i < p; ++i) pixels(static_cast<Eigen::Index>(j), col + static_cast<Eigen::Index>(i)) = band[i];
    }
    col += static_cast<Eigen::Index>(p);
  }
  return BackgroundModel::estimate(pixels);
}

DetectionMap::DetectionMap(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) throw DimensionMismatch("detection map size does not match its grid");
}

double DetectionMap::max() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

std::string to_string(Statistic s) {
  switch (s) {
    case Statistic::Ace: return "ace";
    case Statistic::Bulk: return "bulk";
    case Statistic::BulkPersistence: return "bulk+persistence";
  }
  return "?";
}

Statistic parse_statistic(const std::string& name) {
  if (name == "ace") return Statistic::Ace;
  if (name == "bulk") return Statistic::Bulk;
  if (name == "bulk+persistence") return Statistic::BulkPersistence;
  throw InvalidArgument("unknown statistic '" + name + "' (expected ace, bulk or bulk+persistence)");
}

void DetectionConfig::validate() const {
  if (neighborhood_radius < 0) throw InvalidArgument("neighborhood radius must be non-negative");
  if (persistence_length < 1) throw InvalidArgument("persistence length must be >= 1");
  if (!(threshold_margin >= 0.0)) throw InvalidArgument("threshold margin must be non-negative");
}

namespace {

// Signature whitened once; scores pixels by the squared whitened cosine.
class AceScorer {
 public:
  AceScorer(const Spectrum& s, const BackgroundModel& model, bool center_pixel)
      : model_(model), center_(center_pixel) {
    if (static_cast<std::size_t>(s.size()) != model.bands())
      throw DimensionMismatch("signature length does not match the background model");
    ws_ = model.whiten(s);
    ss_ = ws_.squaredNorm();
    if (!(ss_ > 0.0)) throw DegenerateInput("target signature is zero");
  }

  double operator()(const Spectrum& x) const {
    if (static_cast<std::size_t>(x.size()) != model_.bands())
      throw DimensionMismatch("pixel length does not match the background model");
    const Eigen::VectorXd wx = model_.whiten(center_ ? Eigen::VectorXd(x - model_.mean()) : x);
    const double xx = wx.squaredNorm();
    if (xx == 0.0) return 0.0;
    const double sx = ws_.dot(wx);
    return std::clamp(sx * sx / (ss_ * xx), 0.0, 1.0);
  }

 private:
  const BackgroundModel& model_;
  bool center_;
  Eigen::VectorXd ws_;
  double ss_ = 0.0;
};

}  // namespace

double ace(const Spectrum& x, const Spectrum& s, const BackgroundModel& model, bool center_pixel) {
  return AceScorer(s, model, center_pixel)(x);
}

DetectionMap ace_map(const HyperCube& cube, const Spectrum& s, const BackgroundModel& model, bool center_pixel) {
  const AceScorer score(s, model, center_pixel);
  DetectionMap map(cube.rows(), cube.cols());
  auto out = map.values();
  for (std::size_t p = 0; p < cube.pixels(); ++p) out[p] = score(cube.pixel(p));
  return map;
}

DetectionMap bulk_coherence(const DetectionMap& map, int radius) {
  if (radius < 0) throw InvalidArgument("neighborhood radius must be non-negative");
  const auto rows = static_cast<long>(map.rows()), cols = static_cast<long>(map.cols());
  DetectionMap out(map.rows(), map.cols());
  for (long r = 0; r < rows; ++r) {
    for (long c = 0; c < cols; ++c) {
      double prod = 1.0;
      for (long rr = std::max(0L, r - radius); rr <= std::min(rows - 1, r + radius); ++rr)
        for (long cc = std::max(0L, c - radius); cc <= std::min(cols - 1, c + radius); ++cc)
          prod *= 1.0 - map.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
      out.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = 1.0 - prod;
    }
  }
  return out;
}

std::size_t count_above(const DetectionMap& map, double threshold) {
  return static_cast<std::size_t>(
      std::count_if(map.values().begin(), map.values().end(), [&](double v) { return v > threshold; }));
}

DetectionSeries persistence_filter(const DetectionSeries& series, double threshold, int length) {
  if (length < 1) throw InvalidArgument("persistence length must be >= 1");
  DetectionSeries out{series.maps, threshold, {}};
  const std::size_t frames = out.maps.size();
  if (frames > 0) {
    const std::size_t pixels = out.maps.front().size();
    for (const auto& m : out.maps)
      if (m.size() != pixels) throw DimensionMismatch("series maps differ in size");
    for (std::size_t p = 0; p < pixels; ++p) {
      std::size_t t = 0;
      while (t < frames) {
        if (series.maps[t].values()[p] > threshold) {
          std::size_t end = t;
          while (end < frames && series.maps[end].values()[p] > threshold) ++end;
          if (end - t < static_cast<std::size_t>(length))
            for (std::size_t i = t; i < end; ++i) out.maps[i].values()[p] = 0.0;
          t = end;
        } else {
          out.maps[t].values()[p] = 0.0;
          ++t;
        }
      }
    }
  }
  for (const auto& m : out.maps) out.counts.push_back(count_above(m, threshold));
  return out;
}

double calibrate_threshold(std::span<const DetectionMap> background, double delta) {
  if (background.empty()) throw InvalidArgument("threshold calibration needs background maps");
  if (!(delta >= 0.0)) throw InvalidArgument("threshold margin must be non-negative");
  double peak = -std::numeric_limits<double>::infinity();
  for (const auto& m : background) peak = std::max(peak, m.max());
  return (1.0 + delta) * peak;
}

std::vector<std::size_t> histogram(const DetectionMap& map, std::size_t bins) {
  if (bins == 0) throw InvalidArgument("histogram needs at least one bin");
  std::vector<std::size_t> counts(bins, 0);
  for (double v : map.values()) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    auto bin = static_cast<std::size_t>(clamped * static_cast<double>(bins));
    counts[std::min(bin, bins - 1)]++;
  }
  return counts;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

DetectionResult detect_video(const CubeVideo& video, const Spectrum& signature,
                             std::span<const std::size_t> background_frames, const DetectionConfig& cfg,
                             unsigned threads) {
  cfg.validate();
  DetectionResult result{estimate_background(video, background_frames), {}, {}};
  result.statistic.resize(video.size());
  parallel_for(video.size(), threads, [&](std::size_t t) {
    DetectionMap m = ace_map(video[t], signature, result.model, cfg.center_pixel);
    if (cfg.statistic != Statistic::Ace) m = bulk_coherence(m, cfg.neighborhood_radius);
    result.statistic[t] = std::move(m);
  });

  std::vector<DetectionMap> calibration;
  for (std::size_t t : background_frames) calibration.push_back(result.statistic[t]);
  const double threshold = calibrate_threshold(calibration, cfg.threshold_margin);

  DetectionSeries raw{result.statistic, threshold, {}};
  if (cfg.statistic == Statistic::BulkPersistence) {
    result.series = persistence_filter(raw, threshold, cfg.persistence_length);
  } else {
    for (const auto& m : raw.maps) raw.counts.push_back(count_above(m, threshold));
    result.series = std::move(raw);
  }
  return result;
}

}  // namespace hscs
