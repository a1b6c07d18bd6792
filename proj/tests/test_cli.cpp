#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "hscs/pipeline.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const fs::path& dir) {
  const std::string cmd = "cd '" + dir.string() + "' && '" HSCS_CLI "' " + args + " > out.txt 2> err.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const char* kScenario = R"({"rows": 16, "cols": 16, "bands": 6, "frames": 30,
  "background": {"block_rows": 4, "block_cols": 16},
  "plume": {"center_row": 8, "center_col": 8, "sigma": 2, "sigma_col": 5,
            "release_start": 10, "peak": 16, "decay": 24}})";

}  // namespace

TEST_CASE("stage-by-stage run") {
  const auto dir = test::scratch_dir("cli_stages");
  std::ofstream(dir / "s.json") << kScenario;
  REQUIRE(run_cli("synth --config s.json -o v.hsc --truth t.hsc --signature sig.txt", dir) == 0);
  CHECK(slurp(dir / "out.txt").find("frames = 30") != std::string::npos);
  REQUIRE(run_cli("sample -i v.hsc --rate 0.25 --seed 3 -o m.hsm", dir) == 0);
  CHECK(slurp(dir / "out.txt").find("k = 64") != std::string::npos);
  REQUIRE(run_cli("reconstruct -i m.hsm -o r.hsc --max-outer 40 --report rep.csv", dir) == 0);
  CHECK(hscs::load_video(dir / "r.hsc").rows() == 16);
  REQUIRE(run_cli("detect -i v.hsc --signature sig.txt --background-frames 0:9 --counts c_raw.csv --hist h.csv "
               "--truth t.hsc --gaps g_raw.csv --meta meta.txt",
               dir) == 0);
  CHECK(slurp(dir / "out.txt").find("threshold = ") == 0);
  CHECK(slurp(dir / "meta.txt").find("threshold = ") == 0);
  CHECK(slurp(dir / "h.csv").find("bin_left,bin_right,count\n") == 0);
  REQUIRE(run_cli("detect -i r.hsc --signature sig.txt --background-frames 0:9 --counts c_rec.csv --truth t.hsc "
               "--gaps g_rec.csv",
               dir) == 0);
  REQUIRE(run_cli("compare --raw c_raw.csv --recon c_rec.csv --gaps-raw g_raw.csv --gaps-recon g_rec.csv -o cmp.csv "
               "--summary summary.txt",
               dir) == 0);
  CHECK(slurp(dir / "cmp.csv").find("frame,count_raw,count_recon\n") == 0);
  CHECK(slurp(dir / "summary.txt").find("best_gap_recon = ") != std::string::npos);
}

TEST_CASE("exit codes") {
  const auto dir = test::scratch_dir("cli_codes");
  std::ofstream(dir / "s.json") << kScenario;
  REQUIRE(run_cli("synth --config s.json -o v.hsc --signature sig.txt", dir) == 0);
  REQUIRE(run_cli("sample -i v.hsc --rate 0.25 -o m.hsm", dir) == 0);

  CHECK(run_cli("", dir) == 2);
  CHECK(run_cli("sample", dir) == 2);
  CHECK(run_cli("sample -i v.hsc --rate 2", dir) == 2);
  CHECK(run_cli("detect -i v.hsc --signature sig.txt --background-frames 5:1", dir) == 2);
  CHECK(run_cli("reconstruct -i m.hsm --mu -1", dir) == 2);

  std::ofstream(dir / "junk.hsc") << "junk";
  CHECK(run_cli("sample -i junk.hsc", dir) == 3);
  CHECK(run_cli("sample -i nowhere.hsc", dir) == 3);
  std::ofstream(dir / "bad.json") << R"({"synth": {}})";
  CHECK(run_cli("run -m bad.json -o out", dir) == 3);
  CHECK(slurp(dir / "err.txt").find("rate") != std::string::npos);

  CHECK(run_cli("detect -i v.hsc --signature sig.txt --background-frames 0:40", dir) == 4);
  std::ofstream(dir / "short_sig.txt") << "1\n2\n";
  CHECK(run_cli("detect -i v.hsc --signature short_sig.txt --background-frames 0:9", dir) == 4);
  CHECK(run_cli("reconstruct -i m.hsm --rows 8 --cols 8", dir) == 4);

  CHECK(run_cli("reconstruct -i m.hsm -o r.hsc --max-outer 2", dir) == 0);
  CHECK(run_cli("reconstruct -i m.hsm -o r.hsc --max-outer 2 --strict", dir) == 5);
}

TEST_CASE("run from a manifest") {
  const auto dir = test::scratch_dir("cli_run");
  REQUIRE(run_cli("run --manifest default.json --write-default", dir) == 0);
  const auto def = hscs::load_manifest(dir / "default.json");
  CHECK(def.rate == 0.10);

  auto m = def;
  m.synth = hscs::synth_config_from_json(nlohmann::json::parse(kScenario));
  m.rate = 0.25;
  m.solver.max_outer = 30;
  m.background_frames = hscs::parse_frame_list("0:9");
  hscs::save_manifest(m, dir / "small.json");
  REQUIRE(run_cli("run -m small.json -o a", dir) == 0);
  CHECK(slurp(dir / "out.txt").find("peak_raw = ") != std::string::npos);
  REQUIRE(run_cli("--threads 1 run -m small.json -o b", dir) == 0);
  for (const char* f : {"counts_raw.csv", "counts_recon.csv", "comparison.csv", "gaps_raw.csv", "gaps_recon.csv"})
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
}
