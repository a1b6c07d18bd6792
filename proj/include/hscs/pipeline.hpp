#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hscs/detection.hpp"
#include "hscs/solver.hpp"
#include "hscs/synth.hpp"

namespace hscs {

// ---- Small text formats --------------------------------------------------

// One float per line.
Spectrum read_signature(const std::filesystem::path& path);
void write_signature(const Spectrum& s, const std::filesystem::path& path);

// "a:b" (inclusive), "a", or comma-separated mixtures such as "0:9,15".
std::vector<std::size_t> parse_frame_list(const std::string& text);
std::string format_frame_list(const std::vector<std::size_t>& frames);

// `frame,count`
void write_counts_csv(const std::vector<std::size_t>& counts, const std::filesystem::path& path);
std::vector<std::size_t> read_counts_csv(const std::filesystem::path& path);

// `bin_left,bin_right,count`
void write_histogram_csv(const std::vector<std::size_t>& counts, const std::filesystem::path& path);

// Separation between plume and background statistic values in one frame:
// 10th percentile over plume pixels minus 99.9th percentile over the rest.
struct SeparationGap {
  std::size_t frame = 0;
  double plume_p10 = 0.0;
  double background_p999 = 0.0;
  double gap = 0.0;
};

// nullopt when the mask selects no pixel or every pixel.
std::optional<SeparationGap> separation_gap(const DetectionMap& map, const std::vector<bool>& plume_mask);

// `frame,plume_p10,background_p999,gap`
void write_gaps_csv(const std::vector<SeparationGap>& gaps, const std::filesystem::path& path);
std::vector<SeparationGap> read_gaps_csv(const std::filesystem::path& path);

// ---- Arm comparison ------------------------------------------------------

struct ComparisonSummary {
  std::size_t frames = 0;
  std::size_t peak_raw = 0, peak_raw_frame = 0;
  std::size_t peak_recon = 0, peak_recon_frame = 0;
  std::vector<std::size_t> recon_above_raw;  // frames where recon count > raw count
  // Present when both arms supplied gap tables.
  std::optional<double> best_gap_raw, best_gap_recon;
  std::vector<std::size_t> gap_recon_ge_raw;  // frames where recon gap >= raw gap
  double max_gap_difference = 0.0;        // max over common frames of recon gap - raw gap
};

// Throws DimensionMismatch when the count series differ in length.
ComparisonSummary compare_counts(const std::vector<std::size_t>& raw, const std::vector<std::size_t>& recon,
                                 const std::vector<SeparationGap>* gaps_raw = nullptr,
                                 const std::vector<SeparationGap>* gaps_recon = nullptr);

// `frame,count_raw,count_recon`
void write_comparison_csv(const std::vector<std::size_t>& raw, const std::vector<std::size_t>& recon,
                          const std::filesystem::path& path);
std::string format_summary(const ComparisonSummary& s);

// ---- Configuration <-> JSON ----------------------------------------------

nlohmann::json to_json(const SynthConfig& cfg);
// Missing keys keep their defaults; unknown keys are rejected.
SynthConfig synth_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SolverConfig& cfg);
SolverConfig solver_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DetectionConfig& cfg);
DetectionConfig detection_config_from_json(const nlohmann::json& j);

// ---- End-to-end run ------------------------------------------------------

// Everything needed to reproduce one synth -> sample -> reconstruct ->
// detect (raw and reconstructed arms) -> compare run.
struct PipelineManifest {
  SynthConfig synth;
  double rate = 0.10;
  std::uint64_t sampler_seed = 0;
  SolverConfig solver;
  DetectionConfig detection;
  std::vector<std::size_t> background_frames;
  std::size_t histogram_bins = 50;
  // Histogram frame; defaults to the plume peak frame.
  std::optional<std::size_t> histogram_frame;
  unsigned threads = 0;

  // Filled in by run_pipeline: artifact name -> file name and SHA-256.
  std::map<std::string, std::string> artifacts;
  std::map<std::string, std::string> checksums;
};

// Default scenario at rate 0.10 with a pinned sampler seed and frames 0:19
// as the plume-free background set.
PipelineManifest default_manifest();

nlohmann::json to_json(const PipelineManifest& m);
// Throws FormatError(MissingField) when a required key is absent.
PipelineManifest manifest_from_json(const nlohmann::json& j);
PipelineManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const PipelineManifest& m, const std::filesystem::path& path);

struct ArmResult {
  DetectionResult detection;
  std::vector<SeparationGap> gaps;
};

struct PipelineResult {
  PipelineManifest manifest;  // with artifacts and checksums
  SynthVideo synth;
  CubeVideo reconstruction;
  std::vector<SolverReport> solver_reports;  // frame-major, band-minor
  ArmResult raw, recon;
  ComparisonSummary summary;
};

// Runs every stage, writing all artifacts into out_dir (created if needed)
// plus manifest.json describing them.
PipelineResult run_pipeline(const PipelineManifest& manifest, const std::filesystem::path& out_dir);

// Reconstructs every frame of a measurement video.
struct VideoReconstruction {
  CubeVideo video;
  std::vector<SolverReport> reports;
};
VideoReconstruction reconstruct_video(const MeasurementVideo& measurements, std::size_t rows, std::size_t cols,
                                      const SolverConfig& cfg, unsigned threads = 0);

// Per-frame gaps of a statistic series against the ground-truth masks.
std::vector<SeparationGap> separation_gaps(const std::vector<DetectionMap>& maps, const GroundTruth& truth);

// Sidecar text with threshold and model parameters of one detection run.
std::string describe_detection(const DetectionResult& r, const DetectionConfig& cfg,
                               const std::vector<std::size_t>& background_frames);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace hscs
