#include "hscs/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "hscs/errors.hpp"

namespace hscs {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double band_position(std::size_t j, std::size_t bands) {
  return bands > 1 ? static_cast<double>(j) / static_cast<double>(bands - 1) : 0.0;
}

// Spectral shape of background component m.
double profile(int m, std::size_t j, std::size_t bands) {
  const double x = band_position(j, bands);
  switch (m % 3) {
    case 0: return 1.0 - 0.5 * x;
    case 1: return std::cos(std::numbers::pi * x);
    default: return std::sin(std::numbers::pi * x);
  }
}

}  // namespace

void SynthConfig::validate() const {
  if (rows == 0 || cols == 0 || bands == 0 || frames == 0)
    throw InvalidArgument("synthetic video dimensions must be positive");
  if (!signature.empty() && signature.size() != bands)
    throw InvalidArgument("signature length must equal the band count");
  if (background.kind == BackgroundKind::DyadicPlateau &&
      (background.block_rows == 0 || background.block_cols == 0 || rows % background.block_rows != 0 ||
       cols % background.block_cols != 0))
    throw InvalidArgument("plateau blocks must tile the image");
  if (background.components < 0) throw InvalidArgument("background component count must be non-negative");
  const auto& p = plume;
  if (!(p.release_start >= 0 && p.release_start < p.peak && p.peak < p.decay &&
        static_cast<std::size_t>(p.decay) <= frames))
    throw InvalidArgument("plume envelope requires 0 <= release_start < peak < decay <= frames");
  if (!(p.strength >= 0.0)) throw InvalidArgument("plume strength must be non-negative");
  if (!(p.sigma > 0.0) || !(p.sigma_col >= 0.0)) throw InvalidArgument("plume sigma must be positive");
  if (!(noise_sigma >= 0.0)) throw InvalidArgument("noise sigma must be non-negative");
}

std::vector<bool> GroundTruth::mask(std::size_t frame) const {
  const auto values = alpha[frame].band(0);
  std::vector<bool> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] > kPlumeMaskFraction * strength;
  return out;
}

Spectrum default_signature(std::size_t bands) {
  // Two broad features on a flat spectral axis.
  Spectrum s(static_cast<Eigen::Index>(bands));
  for (std::size_t j = 0; j < bands; ++j) {
    const double x = band_position(j, bands);
    s[static_cast<Eigen::Index>(j)] =
        std::exp(-std::pow((x - 0.3) / 0.24, 2)) + 0.6 * std::exp(-std::pow((x - 0.72) / 0.15, 2));
  }
  return s / s.norm();
}

double plume_envelope(const PlumeConfig& p, std::size_t frame) {
  const double t = static_cast<double>(frame);
  if (t <= p.release_start || t >= p.decay) return 0.0;
  if (t <= p.peak) return (t - p.release_start) / (p.peak - p.release_start);
  return (p.decay - t) / (p.decay - p.peak);
}

HyperCube generate_background(const SynthConfig& cfg) {
  cfg.validate();
  const auto& bg = cfg.background;
  std::mt19937_64 rng(splitmix64(cfg.seed));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  const std::size_t pixels = cfg.rows * cfg.cols;
  std::vector<std::vector<double>> fields(static_cast<std::size_t>(bg.components), std::vector<double>(pixels));
  for (auto& field : fields) {
    if (bg.kind == BackgroundKind::DyadicPlateau) {
      const std::size_t br = cfg.rows / bg.block_rows, bc = cfg.cols / bg.block_cols;
      std::vector<double> level(br * bc);
      for (auto& v : level) v = bg.spatial_amplitude * unit(rng);
      for (std::size_t r = 0; r < cfg.rows; ++r)
        for (std::size_t c = 0; c < cfg.cols; ++c)
          field[r * cfg.cols + c] = level[(r / bg.block_rows) * bc + c / bg.block_cols];
    } else {
      double coef[6];
      for (double& a : coef) a = unit(rng);
      for (std::size_t r = 0; r < cfg.rows; ++r) {
        for (std::size_t c = 0; c < cfg.cols; ++c) {
          const double u = cfg.rows > 1 ? 2.0 * r / (cfg.rows - 1) - 1.0 : 0.0;
          const double v = cfg.cols > 1 ? 2.0 * c / (cfg.cols - 1) - 1.0 : 0.0;
          const double poly = coef[0] + coef[1] * u + coef[2] * v + coef[3] * u * v + coef[4] * u * u + coef[5] * v * v;
          field[r * cfg.cols + c] = bg.spatial_amplitude * poly / 3.0;
        }
      }
    }
  }

  HyperCube cube(cfg.rows, cfg.cols, cfg.bands);
  for (std::size_t j = 0; j < cfg.bands; ++j) {
    const double offset = bg.base_level * (1.0 + bg.band_slope * band_position(j, cfg.bands));
    auto band = cube.band(j);
    for (std::size_t p = 0; p < pixels; ++p) {
      double v = offset;
      for (int m = 0; m < bg.components; ++m) v += fields[static_cast<std::size_t>(m)][p] * profile(m, j, cfg.bands);
      band[p] = v;
    }
  }
  return cube;
}

SynthVideo generate_video(const SynthConfig& cfg) {
  cfg.validate();
  const HyperCube background = generate_background(cfg);
  Spectrum signature = cfg.signature.empty()
                           ? default_signature(cfg.bands)
                           : Spectrum(Eigen::Map<const Eigen::VectorXd>(cfg.signature.data(),
                                                                        static_cast<Eigen::Index>(cfg.bands)));
  const auto& p = cfg.plume;
  const double sc = p.sigma_col > 0.0 ? p.sigma_col : p.sigma;
  const std::size_t pixels = cfg.rows * cfg.cols;

  std::vector<HyperCube> frames, alphas;
  frames.reserve(cfg.frames);
  alphas.reserve(cfg.frames);
  for (std::size_t t = 0; t < cfg.frames; ++t) {
    HyperCube alpha(cfg.rows, cfg.cols, 1);
    const double env = plume_envelope(p, t);
    if (env > 0.0 && p.strength > 0.0) {
      for (std::size_t r = 0; r < cfg.rows; ++r)
        for (std::size_t c = 0; c < cfg.cols; ++c) {
          const double dr = static_cast<double>(r) - p.center_row, dc = static_cast<double>(c) - p.center_col;
          alpha.at(r, c, 0) =
              p.strength * env * std::exp(-0.5 * (dr * dr / (p.sigma * p.sigma) + dc * dc / (sc * sc)));
        }
    }

    HyperCube frame = background;
    std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(t + 1)));
    std::normal_distribution<double> noise(0.0, 1.0);
    const auto a = alpha.band(0);
    for (std::size_t j = 0; j < cfg.bands; ++j) {
      auto band = frame.band(j);
      const double sj = signature[static_cast<Eigen::Index>(j)];
      for (std::size_t i = 0; i < pixels; ++i) {
        band[i] += a[i] * sj;
        if (cfg.noise_sigma > 0.0) band[i] += cfg.noise_sigma * noise(rng);
      }
    }
    frames.push_back(std::move(frame));
    alphas.push_back(std::move(alpha));
  }
  return {CubeVideo(std::move(frames)), GroundTruth{CubeVideo(std::move(alphas)), p.strength},
          std::move(signature)};
}

SynthConfig default_scenario() { return SynthConfig{}; }

std::string describe(const SynthConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  const auto& bg = cfg.background;
  const auto& p = cfg.plume;
  os << "rows = " << cfg.rows << "\ncols = " << cfg.cols << "\nbands = " << cfg.bands
     << "\nframes = " << cfg.frames << "\nseed = " << cfg.seed << "\nbackground.kind = "
     << (bg.kind == BackgroundKind::DyadicPlateau ? "plateau" : "polynomial")
     << "\nbackground.block_rows = " << bg.block_rows << "\nbackground.block_cols = " << bg.block_cols
     << "\nbackground.components = " << bg.components << "\nbackground.base_level = " << bg.base_level
     << "\nbackground.band_slope = " << bg.band_slope << "\nbackground.spatial_amplitude = "
     << bg.spatial_amplitude << "\nplume.center_row = " << p.center_row << "\nplume.center_col = "
     << p.center_col << "\nplume.sigma = " << p.sigma << "\nplume.sigma_col = " << p.sigma_col << "\nplume.release_start = " << p.release_start
     << "\nplume.peak = " << p.peak << "\nplume.decay = " << p.decay << "\nplume.strength = " << p.strength
     << "\nnoise_sigma = " << cfg.noise_sigma << "\nsignature = " << (cfg.signature.empty() ? "default" : "custom")
     << "\n";
  return os.str();
}

}  // namespace hscs
