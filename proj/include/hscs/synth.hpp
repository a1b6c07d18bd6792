#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hscs/cube.hpp"
#include "hscs/detection.hpp"

namespace hscs {

enum class BackgroundKind { DyadicPlateau, Polynomial };

// Static scene: offset(j) + sum_m field_m(r, c) * profile_m(j).
struct BackgroundConfig {
  BackgroundKind kind = BackgroundKind::DyadicPlateau;
  std::size_t block_rows = 8;  // plateau size; must divide the image
  std::size_t block_cols = 64;
  int components = 2;
  double base_level = 100.0;      // mean radiance of band 0
  double band_slope = 0.2;        // relative offset change from first to last band
  double spatial_amplitude = 10.0;
};

struct PlumeConfig {
  double center_row = 28.0;
  double center_col = 36.0;
  double sigma = 4.0;       // spread across rows, pixels
  double sigma_col = 20.0;  // spread along rows; 0 means isotropic (= sigma)
  // Piecewise-linear envelope: 0 before release_start, rises to 1 at peak,
  // falls to 0 at decay.
  int release_start = 20;
  int peak = 40;
  int decay = 70;
  double strength = 10.0;  // kappa, in signature units
};

struct SynthConfig {
  std::size_t rows = 64;
  std::size_t cols = 64;
  std::size_t bands = 20;
  std::size_t frames = 140;
  std::uint64_t seed = 1;
  BackgroundConfig background;
  // Unit-norm target signature; empty means default_signature(bands).
  std::vector<double> signature;
  PlumeConfig plume;
  double noise_sigma = 1.0;

  // Throws InvalidArgument on an inconsistent configuration.
  void validate() const;
};

// Fraction of kappa above which a pixel counts as plume in the ground truth.
inline constexpr double kPlumeMaskFraction = 0.05;

struct GroundTruth {
  // alpha(r, c, t) as a one-band video.
  CubeVideo alpha;
  double strength = 0.0;

  // alpha > kPlumeMaskFraction * strength.
  std::vector<bool> mask(std::size_t frame) const;
};

struct SynthVideo {
  CubeVideo video;
  GroundTruth truth;
  Spectrum signature;
};

Spectrum default_signature(std::size_t bands);
double plume_envelope(const PlumeConfig& plume, std::size_t frame);

// Pixel (r, c, t) = background(r, c) + alpha(r, c, t) * signature + noise
// with alpha = kappa * envelope(t) * exp(-d^2 / (2 sigma^2)). Deterministic
// in the configuration.
SynthVideo generate_video(const SynthConfig& cfg);

// The noise-free static scene.
HyperCube generate_background(const SynthConfig& cfg);

// 64x64x20, 140 frames, release 20 -> peak 40 -> decay 70.
SynthConfig default_scenario();

// Human-readable key = value echo of every parameter.
std::string describe(const SynthConfig& cfg);

}  // namespace hscs
