// hscs: command-line driver for the compressive sampling / detection pipeline.
//
//   hscs synth        generate a synthetic plume video
//   hscs sample       measure every band of a video
//   hscs reconstruct  recover a video from measurements
//   hscs detect       run the detector on one video arm
//   hscs compare      compare raw and reconstructed count curves
//   hscs run          all of the above from one manifest

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hscs/errors.hpp"
#include "hscs/pipeline.hpp"
#include "hscs/sampling.hpp"

namespace {

using namespace hscs;
namespace fs = std::filesystem;

enum Exit : int { kOk = 0, kFailure = 1, kBadArgs = 2, kFormat = 3, kDimension = 4, kNonConvergence = 5 };

SynthConfig load_synth_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(FormatError::Kind::Io, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatError::Kind::Parse, path + ": " + e.what());
  }
  return synth_config_from_json(j);
}

void add_solver_flags(CLI::App* cmd, SolverConfig& cfg) {
  cmd->add_option("--mu", cfg.mu, "data-term weight")->capture_default_str();
  cmd->add_option("--lambda", cfg.lambda, "splitting weight (shrink threshold 1/lambda)")->capture_default_str();
  cmd->add_option("--max-outer", cfg.max_outer, "outer Bregman iterations")->capture_default_str();
  cmd->add_option("--max-inner", cfg.max_inner, "inner sweeps per outer iteration")->capture_default_str();
  cmd->add_option("--tol-constraint", cfg.tol_constraint, "relative residual tolerance")->capture_default_str();
  cmd->add_option("--tol-change", cfg.tol_change, "relative iterate change tolerance")->capture_default_str();
}

void add_detection_flags(CLI::App* cmd, DetectionConfig& cfg, std::string& statistic, bool& no_center) {
  cmd->add_option("--radius", cfg.neighborhood_radius, "bulk coherence radius")->capture_default_str();
  cmd->add_option("--persistence", cfg.persistence_length, "minimum run of frames above threshold")
      ->capture_default_str();
  cmd->add_option("--delta", cfg.threshold_margin, "threshold margin over the background maximum")
      ->capture_default_str();
  cmd->add_option("--statistic", statistic, "ace | bulk | bulk+persistence")->capture_default_str();
  cmd->add_flag("--no-center", no_center, "score the raw pixel instead of subtracting the background mean");
}

int run(int argc, char** argv) {
  CLI::App app{"Compressive sampling, reconstruction and plume detection on hyperspectral videos"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = hardware concurrency)");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic plume video with ground truth");
  std::string synth_config, synth_out = "video.hsc", synth_truth, synth_sig;
  std::optional<std::uint64_t> synth_seed;
  std::optional<std::size_t> synth_frames;
  std::optional<double> synth_strength, synth_noise;
  synth->add_option("--config", synth_config, "JSON scenario (defaults to the built-in scenario)")
      ->check(CLI::ExistingFile);
  synth->add_option("--seed", synth_seed, "override the scenario seed");
  synth->add_option("--frames", synth_frames, "override the frame count");
  synth->add_option("--strength", synth_strength, "override the plume strength");
  synth->add_option("--noise", synth_noise, "override the noise standard deviation");
  synth->add_option("-o,--out", synth_out, "output video (HSC)")->capture_default_str();
  synth->add_option("--truth", synth_truth, "output plume abundance video (HSC, 1 band)");
  synth->add_option("--signature", synth_sig, "output target signature (text)");

  // sample
  auto* sample = app.add_subcommand("sample", "measure every band with a subsampled Walsh-Hadamard operator");
  std::string sample_in, sample_out = "measurements.hsm";
  double rate = 0.10;
  std::uint64_t sample_seed = 0;
  sample->add_option("-i,--in", sample_in, "input video (HSC)")->required();
  sample->add_option("--rate", rate, "sampling rate; k = max(1, floor(rate * n))")->capture_default_str();
  sample->add_option("--seed", sample_seed, "operator seed")->capture_default_str();
  sample->add_option("-o,--out", sample_out, "output measurements (HSM)")->capture_default_str();

  // reconstruct
  auto* recon = app.add_subcommand("reconstruct", "recover every band by l1 minimization in the Haar domain");
  std::string recon_in, recon_out = "reconstruction.hsc", recon_report;
  std::size_t recon_rows = 0, recon_cols = 0;
  bool strict = false;
  SolverConfig solver;
  recon->add_option("-i,--in", recon_in, "input measurements (HSM)")->required();
  recon->add_option("--rows", recon_rows, "spatial rows (default: square field of view)");
  recon->add_option("--cols", recon_cols, "spatial columns (default: square field of view)");
  add_solver_flags(recon, solver);
  recon->add_flag("--strict", strict, "exit with status 5 if any band fails to converge");
  recon->add_option("--report", recon_report, "per-band solver report (CSV)");
  recon->add_option("-o,--out", recon_out, "output video (HSC)")->capture_default_str();

  // detect
  auto* detect = app.add_subcommand("detect", "score a video against a target signature");
  std::string det_in, det_sig, det_bg, det_counts = "counts.csv", det_hist, det_truth, det_gaps, det_meta;
  std::string statistic = "bulk+persistence";
  bool no_center = false;
  std::size_t bins = 50;
  std::optional<std::size_t> hist_frame;
  DetectionConfig detection;
  detect->add_option("-i,--in", det_in, "input video (HSC)")->required();
  detect->add_option("--signature", det_sig, "target signature, one value per band")->required();
  detect->add_option("--background-frames", det_bg, "plume-free frames, e.g. 0:19")->required();
  add_detection_flags(detect, detection, statistic, no_center);
  detect->add_option("--counts", det_counts, "per-frame detected pixel counts (CSV)")->capture_default_str();
  detect->add_option("--hist", det_hist, "histogram of the final statistic at --hist-frame (CSV)");
  detect->add_option("--bins", bins, "histogram bins on [0, 1]")->capture_default_str();
  detect->add_option("--hist-frame", hist_frame, "histogram frame (default: frame with the most detections)");
  detect->add_option("--truth", det_truth, "plume abundance video (HSC) for separation gaps");
  detect->add_option("--gaps", det_gaps, "per-frame separation gaps (CSV, requires --truth)");
  detect->add_option("--meta", det_meta, "threshold and background model summary (text)");

  // compare
  auto* compare = app.add_subcommand("compare", "compare raw-arm and reconstructed-arm count curves");
  std::string cmp_raw, cmp_recon, cmp_out = "comparison.csv", cmp_gaps_raw, cmp_gaps_recon, cmp_summary;
  compare->add_option("--raw", cmp_raw, "raw-arm counts (CSV)")->required();
  compare->add_option("--recon", cmp_recon, "reconstructed-arm counts (CSV)")->required();
  compare->add_option("--gaps-raw", cmp_gaps_raw, "raw-arm separation gaps (CSV)");
  compare->add_option("--gaps-recon", cmp_gaps_recon, "reconstructed-arm separation gaps (CSV)");
  compare->add_option("-o,--out", cmp_out, "side-by-side counts (CSV)")->capture_default_str();
  compare->add_option("--summary", cmp_summary, "write the summary here instead of stdout");

  // run
  auto* runcmd = app.add_subcommand("run", "run the whole pipeline from a manifest");
  std::string manifest_path, run_out = "run";
  bool write_default = false;
  runcmd->add_option("-m,--manifest", manifest_path, "pipeline manifest (JSON; default: built-in scenario)");
  runcmd->add_option("-o,--out", run_out, "output directory")->capture_default_str();
  runcmd->add_flag("--write-default", write_default, "only write the default manifest to --manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadArgs;
  }

  if (*synth) {
    SynthConfig cfg = synth_config.empty() ? default_scenario() : load_synth_config(synth_config);
    if (synth_seed) cfg.seed = *synth_seed;
    if (synth_frames) cfg.frames = *synth_frames;
    if (synth_strength) cfg.plume.strength = *synth_strength;
    if (synth_noise) cfg.noise_sigma = *synth_noise;
    const SynthVideo v = generate_video(cfg);
    save_video(v.video, synth_out);
    if (!synth_truth.empty()) save_video(v.truth.alpha, synth_truth);
    if (!synth_sig.empty()) write_signature(v.signature, synth_sig);
    std::cout << describe(cfg);
  } else if (*sample) {
    const CubeVideo video = load_video(sample_in);
    const SamplingOperator op = build_sampler(video.rows() * video.cols(), rate, sample_seed);
    save_measurements(sample_video(op, video), sample_out);
    std::cout << "n = " << op.n() << "\nk = " << op.k() << "\nrate = " << rate << "\nseed = " << sample_seed << '\n';
  } else if (*recon) {
    solver.validate();
    const MeasurementVideo meas = load_measurements(recon_in);
    if (recon_rows == 0 && recon_cols == 0) {
      std::size_t side = 1;
      while (side * side < meas.n) side *= 2;
      if (side * side != meas.n) throw InvalidArgument("n is not a square; pass --rows and --cols");
      recon_rows = recon_cols = side;
    } else if (recon_rows == 0) {
      recon_rows = recon_cols ? meas.n / recon_cols : 0;
    } else if (recon_cols == 0) {
      recon_cols = meas.n / recon_rows;
    }
    const auto rec = reconstruct_video(meas, recon_rows, recon_cols, solver, threads);
    save_video(rec.video, recon_out);
    std::size_t failed = 0;
    for (const auto& r : rec.reports) failed += r.converged ? 0 : 1;
    if (!recon_report.empty()) {
      std::ofstream out(recon_report);
      if (!out) throw FormatError(FormatError::Kind::Io, "cannot open " + recon_report);
      out << std::setprecision(17) << "frame,band,outer_iterations,inner_iterations,final_constraint_residual,final_l1,converged\n";
      const std::size_t bands = rec.video.bands();
      for (std::size_t i = 0; i < rec.reports.size(); ++i) {
        const auto& r = rec.reports[i];
        out << i / bands << ',' << i % bands << ',' << r.outer_iterations << ',' << r.inner_iterations << ','
            << r.final_constraint_residual << ',' << r.final_l1 << ',' << (r.converged ? 1 : 0) << '\n';
      }
    }
    std::cout << "bands_reconstructed = " << rec.reports.size() << "\nbands_not_converged = " << failed << '\n';
    if (strict && failed) throw NonConvergence(std::to_string(failed) + " band(s) did not converge");
  } else if (*detect) {
    detection.statistic = parse_statistic(statistic);
    detection.center_pixel = !no_center;
    detection.validate();
    if (!det_gaps.empty() && det_truth.empty()) throw InvalidArgument("--gaps requires --truth");
    const CubeVideo video = load_video(det_in);
    const Spectrum sig = read_signature(det_sig);
    const auto frames = parse_frame_list(det_bg);
    const DetectionResult r = detect_video(video, sig, frames, detection, threads);
    write_counts_csv(r.series.counts, det_counts);
    if (!det_hist.empty()) {
      std::size_t frame = 0;
      if (hist_frame) {
        frame = *hist_frame;
        if (frame >= video.size()) throw OutOfBounds("--hist-frame outside the video");
      } else {
        for (std::size_t t = 1; t < r.series.counts.size(); ++t)
          if (r.series.counts[t] > r.series.counts[frame]) frame = t;
      }
      write_histogram_csv(histogram(r.series.maps[frame], bins), det_hist);
    }
    if (!det_truth.empty()) {
      const CubeVideo alpha = load_video(det_truth);
      if (alpha.size() != video.size() || alpha.rows() != video.rows() || alpha.cols() != video.cols())
        throw DimensionMismatch("truth video does not match the input video");
      GroundTruth truth{alpha, 0.0};
      double peak = 0.0;
      for (std::size_t t = 0; t < alpha.size(); ++t)
        for (double v : alpha[t].data()) peak = std::max(peak, v);
      truth.strength = peak;
      const auto gaps = separation_gaps(r.statistic, truth);
      if (!det_gaps.empty()) write_gaps_csv(gaps, det_gaps);
    }
    const std::string meta = describe_detection(r, detection, frames);
    if (!det_meta.empty()) {
      std::ofstream out(det_meta);
      if (!out) throw FormatError(FormatError::Kind::Io, "cannot open " + det_meta);
      out << meta;
    }
    std::cout << std::setprecision(17) << "threshold = " << r.series.threshold << '\n';
  } else if (*compare) {
    if (cmp_gaps_raw.empty() != cmp_gaps_recon.empty())
      throw InvalidArgument("--gaps-raw and --gaps-recon go together");
    const auto raw = read_counts_csv(cmp_raw);
    const auto rec = read_counts_csv(cmp_recon);
    std::optional<std::vector<SeparationGap>> graw, grec;
    if (!cmp_gaps_raw.empty()) {
      graw = read_gaps_csv(cmp_gaps_raw);
      grec = read_gaps_csv(cmp_gaps_recon);
    }
    const auto summary = compare_counts(raw, rec, graw ? &*graw : nullptr, grec ? &*grec : nullptr);
    write_comparison_csv(raw, rec, cmp_out);
    const std::string text = format_summary(summary);
    if (cmp_summary.empty()) {
      std::cout << text;
    } else {
      std::ofstream out(cmp_summary);
      if (!out) throw FormatError(FormatError::Kind::Io, "cannot open " + cmp_summary);
      out << text;
    }
  } else if (*runcmd) {
    if (write_default) {
      if (manifest_path.empty()) throw InvalidArgument("--write-default needs --manifest");
      save_manifest(default_manifest(), manifest_path);
      return kOk;
    }
    PipelineManifest m = manifest_path.empty() ? default_manifest() : load_manifest(manifest_path);
    if (app.get_option("--threads")->count()) m.threads = threads;
    const auto r = run_pipeline(m, run_out);
    std::cout << format_summary(r.summary);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const hscs::FormatError& e) {
    std::cerr << "hscs: format error: " << e.what() << '\n';
    return kFormat;
  } catch (const hscs::DimensionMismatch& e) {
    std::cerr << "hscs: dimension mismatch: " << e.what() << '\n';
    return kDimension;
  } catch (const hscs::NonConvergence& e) {
    std::cerr << "hscs: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const hscs::InvalidArgument& e) {
    std::cerr << "hscs: " << e.what() << '\n';
    return kBadArgs;
  } catch (const hscs::DegenerateInput& e) {
    std::cerr << "hscs: degenerate input: " << e.what() << '\n';
    return kBadArgs;
  } catch (const std::exception& e) {
    std::cerr << "hscs: " << e.what() << '\n';
    return kFailure;
  }
}
