#include "hscs/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "hscs/errors.hpp"
#include "hscs/sampling.hpp"

namespace hscs {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError(FormatError::Kind::Io, "cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(FormatError::Kind::Io, "cannot open " + path.string());
  return in;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::size_t parse_index(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  if (t.empty() || !std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); }))
    throw InvalidArgument("bad " + context + " '" + text + "'");
  return std::stoull(t);
}

double parse_double(const std::string& text, const fs::path& path, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (trim(text.substr(used)).empty() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw FormatError(FormatError::Kind::Parse,
                    path.string() + ":" + std::to_string(line) + ": not a number: '" + text + "'");
}

// Data rows of a CSV with an exact header line.
std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::string& header) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != header)
    throw FormatError(FormatError::Kind::Parse, path.string() + ": expected header '" + header + "'");
  const std::size_t columns = split(header, ',').size();
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split(trim(line), ',');
    if (fields.size() != columns)
      throw FormatError(FormatError::Kind::Parse, path.string() + ":" + std::to_string(lineno) + ": expected " +
                                                       std::to_string(columns) + " fields");
    rows.push_back(std::move(fields));
  }
  return rows;
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw FormatError(FormatError::Kind::Parse, where + " must be a JSON object");
  std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw FormatError(FormatError::Kind::Parse, "unknown key '" + key + "' in " + where);
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::Parse, std::string("bad value for '") + key + "': " + e.what());
  }
}

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw FormatError(FormatError::Kind::MissingField, std::string("manifest is missing '") + key + "'");
  return j.at(key);
}

}  // namespace

// ---- Small text formats --------------------------------------------------

Spectrum read_signature(const fs::path& path) {
  auto in = open_in(path);
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    values.push_back(parse_double(t, path, lineno));
  }
  if (values.empty()) throw FormatError(FormatError::Kind::Parse, path.string() + ": empty signature");
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void write_signature(const Spectrum& s, const fs::path& path) {
  auto out = open_out(path);
  for (Eigen::Index i = 0; i < s.size(); ++i) out << s[i] << '\n';
}

std::vector<std::size_t> parse_frame_list(const std::string& text) {
  std::vector<std::size_t> frames;
  for (const auto& part : split(text, ',')) {
    const auto colon = part.find(':');
    if (colon == std::string::npos) {
      frames.push_back(parse_index(part, "frame index"));
      continue;
    }
    const std::size_t a = parse_index(part.substr(0, colon), "frame range start");
    const std::size_t b = parse_index(part.substr(colon + 1), "frame range end");
    if (b < a) throw InvalidArgument("frame range '" + part + "' is reversed");
    for (std::size_t t = a; t <= b; ++t) frames.push_back(t);
  }
  if (frames.empty()) throw InvalidArgument("empty frame list");
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
  return frames;
}

std::string format_frame_list(const std::vector<std::size_t>& frames) {
  std::ostringstream os;
  for (std::size_t i = 0; i < frames.size();) {
    std::size_t j = i;
    while (j + 1 < frames.size() && frames[j + 1] == frames[j] + 1) ++j;
    if (i) os << ',';
    os << frames[i];
    if (j > i) os << ':' << frames[j];
    i = j + 1;
  }
  return os.str();
}

void write_counts_csv(const std::vector<std::size_t>& counts, const fs::path& path) {
  auto out = open_out(path);
  out << "frame,count\n";
  for (std::size_t t = 0; t < counts.size(); ++t) out << t << ',' << counts[t] << '\n';
}

std::vector<std::size_t> read_counts_csv(const fs::path& path) {
  std::vector<std::size_t> counts;
  for (const auto& row : read_csv(path, "frame,count")) {
    if (parse_index(row[0], "frame") != counts.size())
      throw FormatError(FormatError::Kind::Parse, path.string() + ": frames must be 0, 1, 2, ... in order");
    counts.push_back(parse_index(row[1], "count"));
  }
  return counts;
}

void write_histogram_csv(const std::vector<std::size_t>& counts, const fs::path& path) {
  auto out = open_out(path);
  out << "bin_left,bin_right,count\n";
  const double width = 1.0 / static_cast<double>(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    out << width * static_cast<double>(i) << ',' << (i + 1 == counts.size() ? 1.0 : width * static_cast<double>(i + 1))
        << ',' << counts[i] << '\n';
}

std::optional<SeparationGap> separation_gap(const DetectionMap& map, const std::vector<bool>& plume_mask) {
  if (plume_mask.size() != map.size()) throw DimensionMismatch("plume mask does not match the map");
  std::vector<double> plume, background;
  for (std::size_t i = 0; i < map.size(); ++i) (plume_mask[i] ? plume : background).push_back(map.values()[i]);
  if (plume.empty() || background.empty()) return std::nullopt;
  SeparationGap g;
  g.plume_p10 = percentile(std::move(plume), 10.0);
  g.background_p999 = percentile(std::move(background), 99.9);
  g.gap = g.plume_p10 - g.background_p999;
  return g;
}

void write_gaps_csv(const std::vector<SeparationGap>& gaps, const fs::path& path) {
  auto out = open_out(path);
  out << "frame,plume_p10,background_p999,gap\n";
  for (const auto& g : gaps) out << g.frame << ',' << g.plume_p10 << ',' << g.background_p999 << ',' << g.gap << '\n';
}

std::vector<SeparationGap> read_gaps_csv(const fs::path& path) {
  std::vector<SeparationGap> gaps;
  std::size_t line = 1;
  for (const auto& row : read_csv(path, "frame,plume_p10,background_p999,gap")) {
    ++line;
    gaps.push_back({parse_index(row[0], "frame"), parse_double(row[1], path, line), parse_double(row[2], path, line),
                    parse_double(row[3], path, line)});
  }
  return gaps;
}

// ---- Arm comparison ------------------------------------------------------

ComparisonSummary compare_counts(const std::vector<std::size_t>& raw, const std::vector<std::size_t>& recon,
                                 const std::vector<SeparationGap>* gaps_raw,
                                 const std::vector<SeparationGap>* gaps_recon) {
  if (raw.size() != recon.size())
    throw DimensionMismatch("count series differ in length (" + std::to_string(raw.size()) + " vs " +
                            std::to_string(recon.size()) + ")");
  ComparisonSummary s;
  s.frames = raw.size();
  for (std::size_t t = 0; t < raw.size(); ++t) {
    if (raw[t] > s.peak_raw) s.peak_raw = raw[t], s.peak_raw_frame = t;
    if (recon[t] > s.peak_recon) s.peak_recon = recon[t], s.peak_recon_frame = t;
    if (recon[t] > raw[t]) s.recon_above_raw.push_back(t);
  }
  if (gaps_raw && gaps_recon) {
    std::map<std::size_t, double> by_frame;
    for (const auto& g : *gaps_raw) {
      by_frame[g.frame] = g.gap;
      s.best_gap_raw = std::max(s.best_gap_raw.value_or(g.gap), g.gap);
    }
    bool any = false;
    for (const auto& g : *gaps_recon) {
      s.best_gap_recon = std::max(s.best_gap_recon.value_or(g.gap), g.gap);
      const auto it = by_frame.find(g.frame);
      if (it == by_frame.end()) continue;
      const double diff = g.gap - it->second;
      s.max_gap_difference = any ? std::max(s.max_gap_difference, diff) : diff;
      any = true;
      if (diff >= 0.0) s.gap_recon_ge_raw.push_back(g.frame);
    }
  }
  return s;
}

void write_comparison_csv(const std::vector<std::size_t>& raw, const std::vector<std::size_t>& recon,
                          const fs::path& path) {
  if (raw.size() != recon.size()) throw DimensionMismatch("count series differ in length");
  auto out = open_out(path);
  out << "frame,count_raw,count_recon\n";
  for (std::size_t t = 0; t < raw.size(); ++t) out << t << ',' << raw[t] << ',' << recon[t] << '\n';
}

std::string format_summary(const ComparisonSummary& s) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "frames = " << s.frames << "\npeak_raw = " << s.peak_raw << "\npeak_raw_frame = " << s.peak_raw_frame
     << "\npeak_recon = " << s.peak_recon << "\npeak_recon_frame = " << s.peak_recon_frame
     << "\nrecon_above_raw_frames = " << s.recon_above_raw.size()
     << "\nrecon_above_raw = " << (s.recon_above_raw.empty() ? "none" : format_frame_list(s.recon_above_raw))
     << '\n';
  if (s.best_gap_raw && s.best_gap_recon) {
    os << "best_gap_raw = " << *s.best_gap_raw << "\nbest_gap_recon = " << *s.best_gap_recon
       << "\nmax_gap_difference = " << s.max_gap_difference << "\ngap_recon_ge_raw = "
       << (s.gap_recon_ge_raw.empty() ? "none" : format_frame_list(s.gap_recon_ge_raw)) << '\n';
  }
  return os.str();
}

// ---- Configuration <-> JSON ----------------------------------------------

json to_json(const SynthConfig& c) {
  const auto& bg = c.background;
  const auto& p = c.plume;
  json j = {
      {"rows", c.rows}, {"cols", c.cols}, {"bands", c.bands}, {"frames", c.frames}, {"seed", c.seed},
      {"noise_sigma", c.noise_sigma},
      {"background",
       {{"kind", bg.kind == BackgroundKind::DyadicPlateau ? "plateau" : "polynomial"},
        {"block_rows", bg.block_rows},
        {"block_cols", bg.block_cols},
        {"components", bg.components},
        {"base_level", bg.base_level},
        {"band_slope", bg.band_slope},
        {"spatial_amplitude", bg.spatial_amplitude}}},
      {"plume",
       {{"center_row", p.center_row},
        {"center_col", p.center_col},
        {"sigma", p.sigma},
        {"sigma_col", p.sigma_col},
        {"release_start", p.release_start},
        {"peak", p.peak},
        {"decay", p.decay},
        {"strength", p.strength}}}};
  if (!c.signature.empty()) j["signature"] = c.signature;
  return j;
}

SynthConfig synth_config_from_json(const json& j) {
  reject_unknown_keys(j, {"rows", "cols", "bands", "frames", "seed", "noise_sigma", "background", "plume", "signature"},
                      "synth config");
  SynthConfig c;
  read_opt(j, "rows", c.rows);
  read_opt(j, "cols", c.cols);
  read_opt(j, "bands", c.bands);
  read_opt(j, "frames", c.frames);
  read_opt(j, "seed", c.seed);
  read_opt(j, "noise_sigma", c.noise_sigma);
  read_opt(j, "signature", c.signature);
  if (j.contains("background")) {
    const auto& b = j.at("background");
    reject_unknown_keys(b, {"kind", "block_rows", "block_cols", "components", "base_level", "band_slope",
                            "spatial_amplitude"},
                        "background");
    std::string kind = "plateau";
    read_opt(b, "kind", kind);
    if (kind == "plateau") c.background.kind = BackgroundKind::DyadicPlateau;
    else if (kind == "polynomial") c.background.kind = BackgroundKind::Polynomial;
    else throw FormatError(FormatError::Kind::Parse, "background kind must be plateau or polynomial");
    read_opt(b, "block_rows", c.background.block_rows);
    read_opt(b, "block_cols", c.background.block_cols);
    read_opt(b, "components", c.background.components);
    read_opt(b, "base_level", c.background.base_level);
    read_opt(b, "band_slope", c.background.band_slope);
    read_opt(b, "spatial_amplitude", c.background.spatial_amplitude);
  }
  if (j.contains("plume")) {
    const auto& p = j.at("plume");
    reject_unknown_keys(p, {"center_row", "center_col", "sigma", "sigma_col", "release_start", "peak", "decay",
                            "strength"},
                        "plume");
    read_opt(p, "center_row", c.plume.center_row);
    read_opt(p, "center_col", c.plume.center_col);
    read_opt(p, "sigma", c.plume.sigma);
    read_opt(p, "sigma_col", c.plume.sigma_col);
    read_opt(p, "release_start", c.plume.release_start);
    read_opt(p, "peak", c.plume.peak);
    read_opt(p, "decay", c.plume.decay);
    read_opt(p, "strength", c.plume.strength);
  }
  c.validate();
  return c;
}

json to_json(const SolverConfig& c) {
  return {{"mu", c.mu},
          {"lambda", c.lambda},
          {"max_outer", c.max_outer},
          {"max_inner", c.max_inner},
          {"tol_constraint", c.tol_constraint},
          {"tol_change", c.tol_change}};
}

SolverConfig solver_config_from_json(const json& j) {
  reject_unknown_keys(j, {"mu", "lambda", "max_outer", "max_inner", "tol_constraint", "tol_change"}, "solver config");
  SolverConfig c;
  read_opt(j, "mu", c.mu);
  read_opt(j, "lambda", c.lambda);
  read_opt(j, "max_outer", c.max_outer);
  read_opt(j, "max_inner", c.max_inner);
  read_opt(j, "tol_constraint", c.tol_constraint);
  read_opt(j, "tol_change", c.tol_change);
  c.validate();
  return c;
}

json to_json(const DetectionConfig& c) {
  return {{"neighborhood_radius", c.neighborhood_radius},
          {"persistence_length", c.persistence_length},
          {"threshold_margin", c.threshold_margin},
          {"statistic", to_string(c.statistic)},
          {"center_pixel", c.center_pixel}};
}

DetectionConfig detection_config_from_json(const json& j) {
  reject_unknown_keys(j, {"neighborhood_radius", "persistence_length", "threshold_margin", "statistic", "center_pixel"},
                      "detection config");
  DetectionConfig c;
  read_opt(j, "neighborhood_radius", c.neighborhood_radius);
  read_opt(j, "persistence_length", c.persistence_length);
  read_opt(j, "threshold_margin", c.threshold_margin);
  read_opt(j, "center_pixel", c.center_pixel);
  if (j.contains("statistic")) {
    std::string name;
    read_opt(j, "statistic", name);
    c.statistic = parse_statistic(name);
  }
  c.validate();
  return c;
}

PipelineManifest default_manifest() {
  PipelineManifest m;
  m.synth = default_scenario();
  m.rate = 0.10;
  m.sampler_seed = 12345;
  m.background_frames = parse_frame_list("0:19");
  return m;
}

json to_json(const PipelineManifest& m) {
  json j = {{"synth", to_json(m.synth)},
            {"rate", m.rate},
            {"sampler_seed", m.sampler_seed},
            {"solver", to_json(m.solver)},
            {"detection", to_json(m.detection)},
            {"background_frames", format_frame_list(m.background_frames)},
            {"histogram_bins", m.histogram_bins},
            {"threads", m.threads}};
  if (m.histogram_frame) j["histogram_frame"] = *m.histogram_frame;
  if (!m.artifacts.empty()) j["artifacts"] = m.artifacts;
  if (!m.checksums.empty()) j["checksums"] = m.checksums;
  return j;
}

PipelineManifest manifest_from_json(const json& j) {
  reject_unknown_keys(j, {"synth", "rate", "sampler_seed", "solver", "detection", "background_frames",
                          "histogram_bins", "histogram_frame", "threads", "artifacts", "checksums"},
                      "manifest");
  PipelineManifest m;
  m.synth = synth_config_from_json(require(j, "synth"));
  try {
    m.rate = require(j, "rate").get<double>();
    m.sampler_seed = require(j, "sampler_seed").get<std::uint64_t>();
    m.background_frames = parse_frame_list(require(j, "background_frames").get<std::string>());
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::Parse, std::string("bad manifest value: ") + e.what());
  }
  if (j.contains("solver")) m.solver = solver_config_from_json(j.at("solver"));
  if (j.contains("detection")) m.detection = detection_config_from_json(j.at("detection"));
  read_opt(j, "histogram_bins", m.histogram_bins);
  if (j.contains("histogram_frame")) {
    std::size_t f = 0;
    read_opt(j, "histogram_frame", f);
    m.histogram_frame = f;
  }
  read_opt(j, "threads", m.threads);
  read_opt(j, "artifacts", m.artifacts);
  read_opt(j, "checksums", m.checksums);
  return m;
}

PipelineManifest load_manifest(const fs::path& path) {
  auto in = open_in(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::Parse, path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

void save_manifest(const PipelineManifest& m, const fs::path& path) {
  auto out = open_out(path);
  out << to_json(m).dump(2) << '\n';
}

// ---- End-to-end run ------------------------------------------------------

VideoReconstruction reconstruct_video(const MeasurementVideo& measurements, std::size_t rows, std::size_t cols,
                                      const SolverConfig& cfg, unsigned threads) {
  if (rows * cols != measurements.n)
    throw DimensionMismatch("cannot reshape n=" + std::to_string(measurements.n) + " into " + std::to_string(rows) +
                            "x" + std::to_string(cols));
  const SamplingOperator op = build_sampler(measurements.n, measurements.rate, measurements.seed);
  VideoReconstruction out;
  std::vector<HyperCube> frames;
  frames.reserve(measurements.frames.size());
  for (const auto& y : measurements.frames) {
    auto rec = reconstruct_cube(y, op, cfg, threads);
    frames.push_back(unflatten(rec.flat, rows, cols));
    out.reports.insert(out.reports.end(), rec.reports.begin(), rec.reports.end());
  }
  out.video = CubeVideo(std::move(frames));
  return out;
}

std::vector<SeparationGap> separation_gaps(const std::vector<DetectionMap>& maps, const GroundTruth& truth) {
  if (maps.size() != truth.alpha.size()) throw DimensionMismatch("ground truth and detection series differ in length");
  std::vector<SeparationGap> gaps;
  for (std::size_t t = 0; t < maps.size(); ++t) {
    if (auto g = separation_gap(maps[t], truth.mask(t))) {
      g->frame = t;
      gaps.push_back(*g);
    }
  }
  return gaps;
}

std::string describe_detection(const DetectionResult& r, const DetectionConfig& cfg,
                               const std::vector<std::size_t>& background_frames) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "threshold = " << r.series.threshold << "\nstatistic = " << to_string(cfg.statistic)
     << "\nneighborhood_radius = " << cfg.neighborhood_radius << "\npersistence_length = " << cfg.persistence_length
     << "\nthreshold_margin = " << cfg.threshold_margin << "\ncenter_pixel = " << (cfg.center_pixel ? "true" : "false")
     << "\nbackground_frames = " << format_frame_list(background_frames) << "\nbands = " << r.model.bands()
     << "\nloading_epsilon = " << r.model.epsilon() << "\ncovariance_trace = " << r.model.covariance().trace()
     << "\nbackground_mean =";
  for (Eigen::Index i = 0; i < r.model.mean().size(); ++i) os << ' ' << r.model.mean()[i];
  os << '\n';
  return os.str();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::Io, "cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

namespace {

ArmResult run_arm(const CubeVideo& video, const PipelineManifest& m, const SynthVideo& synth, const fs::path& dir,
                  const std::string& arm, std::size_t hist_frame, std::map<std::string, std::string>& artifacts) {
  ArmResult out{detect_video(video, synth.signature, m.background_frames, m.detection, m.threads), {}};
  out.gaps = separation_gaps(out.detection.statistic, synth.truth);
  const auto put = [&](const std::string& key, const std::string& file) {
    artifacts[key + "_" + arm] = file;
    return dir / file;
  };
  write_counts_csv(out.detection.series.counts, put("counts", "counts_" + arm + ".csv"));
  write_histogram_csv(histogram(out.detection.series.maps.at(hist_frame), m.histogram_bins),
                      put("histogram", "histogram_" + arm + ".csv"));
  write_gaps_csv(out.gaps, put("gaps", "gaps_" + arm + ".csv"));
  std::ofstream meta = open_out(put("detection_meta", "detection_" + arm + ".txt"));
  meta << describe_detection(out.detection, m.detection, m.background_frames);
  return out;
}

}  // namespace

PipelineResult run_pipeline(const PipelineManifest& manifest, const fs::path& out_dir) {
  manifest.synth.validate();
  manifest.solver.validate();
  manifest.detection.validate();
  if (manifest.background_frames.empty()) throw InvalidArgument("manifest designates no background frames");
  fs::create_directories(out_dir);

  PipelineManifest m = manifest;
  m.artifacts.clear();
  m.checksums.clear();
  const std::size_t hist_frame = m.histogram_frame.value_or(static_cast<std::size_t>(m.synth.plume.peak));
  if (hist_frame >= m.synth.frames) throw OutOfBounds("histogram frame outside the video");

  SynthVideo synth = generate_video(m.synth);
  m.artifacts["video"] = "video.hsc";
  save_video(synth.video, out_dir / "video.hsc");
  m.artifacts["truth"] = "truth.hsc";
  save_video(synth.truth.alpha, out_dir / "truth.hsc");
  m.artifacts["signature"] = "signature.txt";
  write_signature(synth.signature, out_dir / "signature.txt");
  m.artifacts["synth_config"] = "synth_config.txt";
  open_out(out_dir / "synth_config.txt") << describe(m.synth);

  // The raw arm sees exactly what is stored on disk.
  const CubeVideo raw = load_video(out_dir / "video.hsc");
  const SamplingOperator op = build_sampler(raw.rows() * raw.cols(), m.rate, m.sampler_seed);
  m.artifacts["measurements"] = "measurements.hsm";
  save_measurements(sample_video(op, raw), out_dir / "measurements.hsm");

  auto rec = reconstruct_video(load_measurements(out_dir / "measurements.hsm"), raw.rows(), raw.cols(), m.solver,
                               m.threads);
  m.artifacts["reconstruction"] = "reconstruction.hsc";
  save_video(rec.video, out_dir / "reconstruction.hsc");
  CubeVideo reconstruction = load_video(out_dir / "reconstruction.hsc");
  {
    std::ofstream rep = open_out(out_dir / "solver_reports.csv");
    m.artifacts["solver_reports"] = "solver_reports.csv";
    rep << "frame,band,outer_iterations,inner_iterations,final_constraint_residual,final_l1,converged\n";
    const std::size_t bands = raw.bands();
    for (std::size_t i = 0; i < rec.reports.size(); ++i) {
      const auto& s = rec.reports[i];
      rep << i / bands << ',' << i % bands << ',' << s.outer_iterations << ',' << s.inner_iterations << ','
          << s.final_constraint_residual << ',' << s.final_l1 << ',' << (s.converged ? 1 : 0) << '\n';
    }
  }

  // Each arm estimates its own background model and threshold.
  ArmResult raw_arm = run_arm(raw, m, synth, out_dir, "raw", hist_frame, m.artifacts);
  ArmResult recon_arm = run_arm(reconstruction, m, synth, out_dir, "recon", hist_frame, m.artifacts);

  ComparisonSummary summary = compare_counts(raw_arm.detection.series.counts, recon_arm.detection.series.counts,
                                             &raw_arm.gaps, &recon_arm.gaps);
  m.artifacts["comparison"] = "comparison.csv";
  write_comparison_csv(raw_arm.detection.series.counts, recon_arm.detection.series.counts,
                       out_dir / "comparison.csv");
  m.artifacts["summary"] = "summary.txt";
  open_out(out_dir / "summary.txt") << format_summary(summary);

  for (const auto& [key, file] : m.artifacts) m.checksums[key] = sha256_file(out_dir / file);
  save_manifest(m, out_dir / "manifest.json");
  return PipelineResult{std::move(m),          std::move(synth),    std::move(reconstruction), std::move(rec.reports),
                        std::move(raw_arm),    std::move(recon_arm), std::move(summary)};
}

}  // namespace hscs
