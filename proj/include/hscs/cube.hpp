#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace hscs {

// A spectrum (pixel under test, target signature, background mean): one
// value per band.
using Spectrum = Eigen::VectorXd;

// Hyperspectral cube of rows x cols x bands values. Storage is band-major:
// each band is a contiguous row-major rows x cols image, and bands follow
// each other.
class HyperCube {
 public:
  HyperCube() = default;
  // Zero-filled cube.
  HyperCube(std::size_t rows, std::size_t cols, std::size_t bands);
  // Takes ownership of data, which must hold rows*cols*bands finite values.
  HyperCube(std::size_t rows, std::size_t cols, std::size_t bands, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t bands() const noexcept { return bands_; }
  std::size_t pixels() const noexcept { return rows_ * cols_; }

  double at(std::size_t r, std::size_t c, std::size_t band) const {
    return data_[band * pixels() + r * cols_ + c];
  }
  double& at(std::size_t r, std::size_t c, std::size_t band) {
    return data_[band * pixels() + r * cols_ + c];
  }

  std::span<const double> band(std::size_t j) const {
    return {data_.data() + j * pixels(), pixels()};
  }
  std::span<double> band(std::size_t j) { return {data_.data() + j * pixels(), pixels()}; }

  std::span<const double> data() const noexcept { return data_; }

  Spectrum pixel(std::size_t r, std::size_t c) const;
  // Same as pixel(r, c) with the flattened spatial index p = r*cols + c.
  Spectrum pixel(std::size_t p) const;

  bool same_shape(const HyperCube& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_ && bands_ == other.bands_;
  }

  friend bool operator==(const HyperCube&, const HyperCube&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t bands_ = 0;
  std::vector<double> data_;
};

// The n x b matrix X whose column j is band j flattened row-major
// (element (r, c) at index r*cols + c). Column-major storage.
struct FlatCube {
  std::size_t n = 0;
  std::size_t b = 0;
  std::vector<double> data;

  FlatCube() = default;
  FlatCube(std::size_t n_, std::size_t b_) : n(n_), b(b_), data(n_ * b_, 0.0) {}

  std::span<const double> column(std::size_t j) const { return {data.data() + j * n, n}; }
  std::span<double> column(std::size_t j) { return {data.data() + j * n, n}; }

  friend bool operator==(const FlatCube&, const FlatCube&) = default;
};

FlatCube flatten(const HyperCube& cube);
// Throws DimensionMismatch unless rows*cols == flat.n.
HyperCube unflatten(const FlatCube& flat, std::size_t rows, std::size_t cols);

// h x w window with top-left corner (r0, c0). Throws OutOfBounds if the
// window leaves the cube or is empty.
HyperCube extract_roi(const HyperCube& cube, std::size_t r0, std::size_t c0, std::size_t h,
                      std::size_t w);

// Non-empty time-ordered sequence of equally shaped cubes.
class CubeVideo {
 public:
  CubeVideo() = default;
  explicit CubeVideo(std::vector<HyperCube> frames);

  std::size_t size() const noexcept { return frames_.size(); }
  bool empty() const noexcept { return frames_.empty(); }
  std::size_t rows() const { return frames_.front().rows(); }
  std::size_t cols() const { return frames_.front().cols(); }
  std::size_t bands() const { return frames_.front().bands(); }

  const HyperCube& operator[](std::size_t t) const { return frames_[t]; }
  const std::vector<HyperCube>& frames() const noexcept { return frames_; }

  friend bool operator==(const CubeVideo&, const CubeVideo&) = default;

 private:
  std::vector<HyperCube> frames_;
};

// HSC1 container: "HSC1", u32 rows, cols, bands, frame_count (little
// endian), then every frame's values as f32 in the in-memory order.
void save_video(const CubeVideo& video, const std::filesystem::path& path);
CubeVideo load_video(const std::filesystem::path& path);

// Largest payload accepted by load_video, in values.
inline constexpr std::uint64_t kMaxVideoValues = std::uint64_t{1} << 34;

}  // namespace hscs
