#include "hscs/cube.hpp"

#include <array>
#include <cmath>
#include <string>

#include "binio.hpp"
#include "hscs/errors.hpp"

namespace hscs {

HyperCube::HyperCube(std::size_t rows, std::size_t cols, std::size_t bands)
    : HyperCube(rows, cols, bands, std::vector<double>(rows * cols * bands, 0.0)) {}

HyperCube::HyperCube(std::size_t rows, std::size_t cols, std::size_t bands, std::vector<double> data)
    : rows_(rows), cols_(cols), bands_(bands), data_(std::move(data)) {
  if (rows == 0 || cols == 0 || bands == 0)
    throw InvalidArgument("cube dimensions must be positive");
  if (data_.size() != rows * cols * bands)
    throw DimensionMismatch("cube data has " + std::to_string(data_.size()) + " values, expected " +
                            std::to_string(rows * cols * bands));
  for (double v : data_)
    if (!std::isfinite(v)) throw InvalidArgument("cube contains a non-finite value");
}

Spectrum HyperCube::pixel(std::size_t p) const {
  Spectrum s(static_cast<Eigen::Index>(bands_));
  const std::size_t stride = pixels();
  for (std::size_t j = 0; j < bands_; ++j) s[static_cast<Eigen::Index>(j)] = data_[j * stride + p];
  return s;
}

Spectrum HyperCube::pixel(std::size_t r, std::size_t c) const { return pixel(r * cols_ + c); }

FlatCube flatten(const HyperCube& cube) {
  FlatCube flat;
  flat.n = cube.pixels();
  flat.b = cube.bands();
  // Band-major storage with row-major bands is already the column layout.
  flat.data.assign(cube.data().begin(), cube.data().end());
  return flat;
}

HyperCube unflatten(const FlatCube& flat, std::size_t rows, std::size_t cols) {
  if (rows * cols != flat.n)
    throw DimensionMismatch("cannot unflatten n=" + std::to_string(flat.n) + " into " +
                            std::to_string(rows) + "x" + std::to_string(cols));
  return HyperCube(rows, cols, flat.b, flat.data);
}

HyperCube extract_roi(const HyperCube& cube, std::size_t r0, std::size_t c0, std::size_t h,
                      std::size_t w) {
  if (h == 0 || w == 0) throw OutOfBounds("empty region of interest");
  if (r0 > cube.rows() || h > cube.rows() - r0 || c0 > cube.cols() || w > cube.cols() - c0)
    throw OutOfBounds("region " + std::to_string(h) + "x" + std::to_string(w) + " at (" +
                      std::to_string(r0) + "," + std::to_string(c0) + ") exceeds " +
                      std::to_string(cube.rows()) + "x" + std::to_string(cube.cols()));
  HyperCube out(h, w, cube.bands());
  for (std::size_t j = 0; j < cube.bands(); ++j)
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c) out.at(r, c, j) = cube.at(r0 + r, c0 + c, j);
  return out;
}

CubeVideo::CubeVideo(std::vector<HyperCube> frames) : frames_(std::move(frames)) {
  if (frames_.empty()) throw InvalidArgument("video must contain at least one frame");
  for (const auto& f : frames_)
    if (!f.same_shape(frames_.front()))
      throw DimensionMismatch("all video frames must share rows, cols and bands");
}

void save_video(const CubeVideo& video, const std::filesystem::path& path) {
  if (video.empty()) throw InvalidArgument("cannot save an empty video");
  detail::ByteWriter w;
  w.magic("HSC1");
  w.u32(static_cast<std::uint32_t>(video.rows()));
  w.u32(static_cast<std::uint32_t>(video.cols()));
  w.u32(static_cast<std::uint32_t>(video.bands()));
  w.u32(static_cast<std::uint32_t>(video.size()));
  for (const auto& frame : video.frames()) w.f32_values(frame.data());
  w.write_to(path);
}

CubeVideo load_video(const std::filesystem::path& path) {
  detail::ByteReader r(path);
  r.expect_magic("HSC1");
  const std::uint64_t rows = r.u32(), cols = r.u32(), bands = r.u32(), frames = r.u32();
  if (rows == 0 || cols == 0 || bands == 0 || frames == 0)
    throw FormatError(FormatError::Kind::Parse, r.path() + ": zero dimension in header");
  const std::array<std::uint64_t, 4> dims{rows, cols, bands, frames};
  const std::uint64_t total = detail::checked_product(dims, kMaxVideoValues, r.path());
  r.need(4 * total, "payload");
  const std::size_t per_frame = rows * cols * bands;
  std::vector<HyperCube> out;
  out.reserve(frames);
  for (std::uint64_t t = 0; t < frames; ++t) {
    auto values = r.f32_values(per_frame);
    for (double v : values)
      if (!std::isfinite(v))
        throw FormatError(FormatError::Kind::Parse, r.path() + ": non-finite value in frame " + std::to_string(t));
    out.emplace_back(rows, cols, bands, std::move(values));
  }
  r.expect_end();
  return CubeVideo(std::move(out));
}

}  // namespace hscs
