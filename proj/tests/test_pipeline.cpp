#include <doctest.h>

#include <fstream>
#include <sstream>

#include "hscs/errors.hpp"
#include "hscs/pipeline.hpp"
#include "support.hpp"

using namespace hscs;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

PipelineManifest small_manifest(double rate) {
  PipelineManifest m;
  m.synth.rows = 16;
  m.synth.cols = 16;
  m.synth.bands = 6;
  m.synth.frames = 30;
  m.synth.background.block_rows = 4;
  m.synth.background.block_cols = 16;
  m.synth.plume = {.center_row = 8, .center_col = 8, .sigma = 2, .sigma_col = 5, .release_start = 10, .peak = 16,
                   .decay = 24, .strength = 10};
  m.rate = rate;
  m.sampler_seed = 99;
  m.solver.max_outer = 60;
  m.background_frames = parse_frame_list("0:9");
  m.threads = 2;
  return m;
}

}  // namespace

TEST_CASE("frame lists") {
  CHECK(parse_frame_list("0:3") == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(parse_frame_list("5, 1:2,9") == std::vector<std::size_t>{1, 2, 5, 9});
  CHECK(parse_frame_list("4,4") == std::vector<std::size_t>{4});
  CHECK(format_frame_list({0, 1, 2, 3, 7, 9, 10}) == "0:3,7,9:10");
  CHECK(parse_frame_list(format_frame_list({0, 1, 2, 3, 7, 9, 10})) == std::vector<std::size_t>{0, 1, 2, 3, 7, 9, 10});
  CHECK_THROWS_AS(parse_frame_list(""), InvalidArgument);
  CHECK_THROWS_AS(parse_frame_list("3:1"), InvalidArgument);
  CHECK_THROWS_AS(parse_frame_list("a"), InvalidArgument);
  CHECK_THROWS_AS(parse_frame_list("-1"), InvalidArgument);
}

TEST_CASE("counts and gaps CSV round-trip") {
  const auto dir = test::scratch_dir("csv");
  const std::vector<std::size_t> counts = {0, 3, 17, 0};
  write_counts_csv(counts, dir / "c.csv");
  CHECK(slurp(dir / "c.csv") == "frame,count\n0,0\n1,3\n2,17\n3,0\n");
  CHECK(read_counts_csv(dir / "c.csv") == counts);

  const std::vector<SeparationGap> gaps = {{3, 0.5, 0.25, 0.25}, {4, 0.125, 0.5, -0.375}};
  write_gaps_csv(gaps, dir / "g.csv");
  const auto back = read_gaps_csv(dir / "g.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[1].frame == 4);
  CHECK(back[1].gap == -0.375);

  spit(dir / "bad.csv", "frame,counts\n0,1\n");
  CHECK_THROWS_AS(read_counts_csv(dir / "bad.csv"), FormatError);
  spit(dir / "order.csv", "frame,count\n1,1\n");
  CHECK_THROWS_AS(read_counts_csv(dir / "order.csv"), FormatError);
  spit(dir / "short.csv", "frame,count\n0\n");
  CHECK_THROWS_AS(read_counts_csv(dir / "short.csv"), FormatError);
  spit(dir / "nan.csv", "frame,plume_p10,background_p999,gap\n0,x,1,1\n");
  CHECK_THROWS_AS(read_gaps_csv(dir / "nan.csv"), FormatError);
  CHECK_THROWS_AS(read_counts_csv(dir / "missing.csv"), FormatError);
}

TEST_CASE("histogram CSV") {
  const auto dir = test::scratch_dir("hist");
  write_histogram_csv({1, 2, 3, 4}, dir / "h.csv");
  CHECK(slurp(dir / "h.csv") == "bin_left,bin_right,count\n0,0.25,1\n0.25,0.5,2\n0.5,0.75,3\n0.75,1,4\n");
}

TEST_CASE("signature file") {
  const auto dir = test::scratch_dir("sig");
  const Spectrum s = default_signature(20);
  write_signature(s, dir / "s.txt");
  CHECK(read_signature(dir / "s.txt") == s);
  spit(dir / "bad.txt", "0.5\nabc\n");
  CHECK_THROWS_AS(read_signature(dir / "bad.txt"), FormatError);
  spit(dir / "empty.txt", "\n");
  CHECK_THROWS_AS(read_signature(dir / "empty.txt"), FormatError);
}

TEST_CASE("separation gap") {
  DetectionMap m(1, 4, std::vector<double>{0.9, 0.8, 0.1, 0.2});
  const auto g = separation_gap(m, {true, true, false, false});
  REQUIRE(g);
  CHECK(g->plume_p10 == doctest::Approx(0.81));
  CHECK(g->background_p999 == doctest::Approx(0.1999));
  CHECK(g->gap == doctest::Approx(0.81 - 0.1999));
  CHECK_FALSE(separation_gap(m, {false, false, false, false}));
  CHECK_FALSE(separation_gap(m, {true, true, true, true}));
  CHECK_THROWS_AS(separation_gap(m, {true}), DimensionMismatch);
}

TEST_CASE("compare identical inputs") {
  const std::vector<std::size_t> c = {0, 2, 9, 4, 0};
  const std::vector<SeparationGap> g = {{1, 0.3, 0.2, 0.1}, {2, 0.5, 0.1, 0.4}};
  const auto s = compare_counts(c, c, &g, &g);
  CHECK(s.frames == 5);
  CHECK(s.recon_above_raw.empty());
  CHECK(s.max_gap_difference == 0.0);
  CHECK(s.peak_raw == 9);
  CHECK(s.peak_raw_frame == 2);
  CHECK(s.peak_recon == 9);
  CHECK(*s.best_gap_raw == 0.4);
  CHECK(s.gap_recon_ge_raw == std::vector<std::size_t>{1, 2});
}

TEST_CASE("compare with recon counts one higher everywhere") {
  const std::vector<std::size_t> raw = {0, 2, 9, 4, 0};
  std::vector<std::size_t> recon = raw;
  for (auto& c : recon) ++c;
  const auto s = compare_counts(raw, recon);
  CHECK(s.recon_above_raw == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK_FALSE(s.best_gap_raw);
  CHECK(s.peak_recon == 10);
  CHECK_THROWS_AS(compare_counts(raw, {1, 2}), DimensionMismatch);
}

TEST_CASE("summary and comparison CSV") {
  const auto dir = test::scratch_dir("cmp");
  write_comparison_csv({1, 2}, {3, 4}, dir / "c.csv");
  CHECK(slurp(dir / "c.csv") == "frame,count_raw,count_recon\n0,1,3\n1,2,4\n");
  const auto text = format_summary(compare_counts({1, 2}, {3, 4}));
  CHECK(text.find("peak_raw = 2") != std::string::npos);
  CHECK(text.find("recon_above_raw = 0:1") != std::string::npos);
}

TEST_CASE("config JSON round-trips") {
  SynthConfig sc = default_scenario();
  sc.seed = 77;
  sc.plume.sigma_col = 0;
  sc.background.kind = BackgroundKind::Polynomial;
  const SynthConfig sb = synth_config_from_json(to_json(sc));
  CHECK(to_json(sb) == to_json(sc));
  CHECK(sb.seed == 77);
  CHECK(sb.background.kind == BackgroundKind::Polynomial);

  SolverConfig so;
  so.max_inner = 9;
  CHECK(solver_config_from_json(to_json(so)).max_inner == 9);
  DetectionConfig dc;
  dc.statistic = Statistic::Ace;
  dc.center_pixel = false;
  const auto db = detection_config_from_json(to_json(dc));
  CHECK(db.statistic == Statistic::Ace);
  CHECK_FALSE(db.center_pixel);

  CHECK(synth_config_from_json(nlohmann::json::object()).rows == 64);
  CHECK_THROWS_AS(synth_config_from_json({{"rowz", 3}}), FormatError);
  CHECK_THROWS_AS(solver_config_from_json({{"mu", "one"}}), FormatError);
  CHECK_THROWS_AS(solver_config_from_json({{"mu", -1.0}}), InvalidArgument);
  CHECK_THROWS_AS(detection_config_from_json({{"statistic", "cem"}}), InvalidArgument);
}

TEST_CASE("manifest JSON") {
  const auto dir = test::scratch_dir("manifest");
  PipelineManifest m = small_manifest(0.25);
  m.histogram_frame = 16;
  save_manifest(m, dir / "m.json");
  const auto back = load_manifest(dir / "m.json");
  CHECK(to_json(back) == to_json(m));
  CHECK(back.background_frames == m.background_frames);

  for (const char* key : {"synth", "rate", "sampler_seed", "background_frames"}) {
    auto j = to_json(m);
    j.erase(key);
    try {
      manifest_from_json(j);
      FAIL("missing ", key, " accepted");
    } catch (const FormatError& e) {
      CHECK(e.kind() == FormatError::Kind::MissingField);
    }
  }
  auto extra = to_json(m);
  extra["colour"] = "blue";
  CHECK_THROWS_AS(manifest_from_json(extra), FormatError);
  spit(dir / "broken.json", "{ not json");
  CHECK_THROWS_AS(load_manifest(dir / "broken.json"), FormatError);
  CHECK(default_manifest().rate == 0.10);
  CHECK(default_manifest().background_frames.size() == 20);
}

TEST_CASE("sha256") {
  const auto dir = test::scratch_dir("sha");
  spit(dir / "abc.txt", "abc");
  CHECK(sha256_file(dir / "abc.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  spit(dir / "empty.txt", "");
  CHECK(sha256_file(dir / "empty.txt") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("reconstruct_video checks the grid") {
  MeasurementVideo m;
  m.n = 64;
  m.rate = 0.5;
  CHECK_THROWS_AS(reconstruct_video(m, 4, 8, SolverConfig{}), DimensionMismatch);
}

TEST_CASE("full-rate pipeline reproduces the raw arm") {
  const auto dir = test::scratch_dir("pipeline_full");
  const auto r = run_pipeline(small_manifest(1.0), dir);
  REQUIRE(r.reconstruction.size() == r.synth.video.size());
  for (std::size_t t = 0; t < r.reconstruction.size(); ++t)
    for (std::size_t j = 0; j < r.reconstruction.bands(); ++j) {
      const auto a = r.reconstruction[t].band(j), b = r.synth.video[t].band(j);
      CHECK(test::rel_error({a.begin(), a.end()}, {b.begin(), b.end()}) < 1e-6);
    }
  CHECK(r.raw.detection.series.counts == r.recon.detection.series.counts);
  CHECK(r.summary.recon_above_raw.empty());
}

TEST_CASE("pipeline artifacts, independence of arms and determinism") {
  const auto a = test::scratch_dir("pipeline_a");
  const auto b = test::scratch_dir("pipeline_b");
  const auto m = small_manifest(0.25);
  const auto ra = run_pipeline(m, a);
  const auto rb = run_pipeline(m, b);

  // Each arm carries its own model and threshold.
  CHECK(ra.raw.detection.series.threshold != ra.recon.detection.series.threshold);
  CHECK_FALSE(ra.raw.detection.model.covariance().isApprox(ra.recon.detection.model.covariance()));
  CHECK(ra.summary.frames == 30);
  CHECK(ra.solver_reports.size() == 30 * 6);

  const auto saved = load_manifest(a / "manifest.json");
  CHECK(saved.rate == 0.25);
  REQUIRE(saved.artifacts.size() == saved.checksums.size());
  for (const auto& [key, file] : saved.artifacts) {
    CHECK(fs::exists(a / file));
    CHECK(saved.checksums.at(key) == sha256_file(a / file));
    CHECK(slurp(a / file) == slurp(b / file));
  }
  CHECK(saved.artifacts.count("counts_raw"));
  CHECK(saved.artifacts.count("counts_recon"));
  CHECK(saved.artifacts.count("comparison"));
  CHECK(read_counts_csv(a / "counts_raw.csv") == ra.raw.detection.series.counts);
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));

  // Re-running from the saved manifest reproduces the run.
  const auto c = test::scratch_dir("pipeline_c");
  run_pipeline(saved, c);
  CHECK(slurp(c / "comparison.csv") == slurp(a / "comparison.csv"));
}

TEST_CASE("pipeline validates the manifest") {
  const auto dir = test::scratch_dir("pipeline_bad");
  auto m = small_manifest(0.25);
  m.background_frames = {40};
  CHECK_THROWS_AS(run_pipeline(m, dir), OutOfBounds);
  m = small_manifest(0.25);
  m.histogram_frame = 30;
  CHECK_THROWS_AS(run_pipeline(m, dir), OutOfBounds);
  m = small_manifest(0.25);
  m.background_frames.clear();
  CHECK_THROWS_AS(run_pipeline(m, dir), InvalidArgument);
}
