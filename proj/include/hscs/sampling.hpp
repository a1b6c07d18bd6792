#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hscs/cube.hpp"

namespace hscs {

// Row-subsampled, randomized Walsh-Hadamard measurement operator
//
//   S x = (1/sqrt(n)) * R * W * D * P x
//
// with P a column permutation ((P x)[i] = x[perm[i]]), D a diagonal of +-1
// signs, W the natural-order n x n Hadamard matrix and R the selection of k
// rows. Rows of S are orthonormal, so S S^T = I_k. S is never formed; apply
// and apply_adjoint run the fast transform in O(n log n).
class SamplingOperator {
 public:
  // Explicit construction. rows must be distinct indices in [0, n) and
  // contain 0; perm must be a permutation of [0, n); signs must be +-1.
  SamplingOperator(std::size_t n, std::vector<std::uint32_t> rows, std::vector<std::uint32_t> perm,
                   std::vector<std::int8_t> signs);

  std::size_t n() const noexcept { return n_; }
  std::size_t k() const noexcept { return rows_.size(); }
  double rate() const noexcept { return rate_; }
  std::uint64_t seed() const noexcept { return seed_; }

  const std::vector<std::uint32_t>& row_indices() const noexcept { return rows_; }
  const std::vector<std::uint32_t>& permutation() const noexcept { return perm_; }
  const std::vector<std::int8_t>& sign_flips() const noexcept { return signs_; }

  // y = S x. x.size() == n, y.size() == k.
  void apply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> apply(std::span<const double> x) const;

  // x = S^T y. y.size() == k, x.size() == n.
  void apply_adjoint(std::span<const double> y, std::span<double> x) const;
  std::vector<double> apply_adjoint(std::span<const double> y) const;

  friend bool operator==(const SamplingOperator&, const SamplingOperator&) = default;

 private:
  friend SamplingOperator build_sampler(std::size_t, double, std::uint64_t);

  std::size_t n_ = 0;
  double rate_ = 1.0;
  std::uint64_t seed_ = 0;
  std::vector<std::uint32_t> rows_;
  std::vector<std::uint32_t> perm_;
  std::vector<std::int8_t> signs_;
};

// k = max(1, floor(rate * n)) rows: row 0 plus k-1 rows drawn without
// replacement from [1, n). Permutation and signs come from the same seeded
// generator. Identical (n, rate, seed) give identical operators.
SamplingOperator build_sampler(std::size_t n, double rate, std::uint64_t seed);

std::size_t measurement_count(std::size_t n, double rate);

// Unnormalized in-place fast Walsh-Hadamard transform, natural ordering.
void fwht_inplace(std::span<double> x) noexcept;

// Dense k x n matrix of the operator built from the closed-form Hadamard
// entries (-1)^popcount(i & j). For validating the fast paths; n <= 4096.
Eigen::MatrixXd materialize(const SamplingOperator& op);

// k x b measurement matrix Y = S X, column-major.
struct Measurements {
  std::size_t k = 0;
  std::size_t b = 0;
  double rate = 1.0;
  std::vector<double> data;

  std::span<const double> column(std::size_t j) const { return {data.data() + j * k, k}; }
  std::span<double> column(std::size_t j) { return {data.data() + j * k, k}; }
};

Measurements sample_cube(const SamplingOperator& op, const FlatCube& flat);

// A measured video plus the triple that rebuilds its operator.
struct MeasurementVideo {
  std::size_t n = 0;
  double rate = 1.0;
  std::uint64_t seed = 0;
  std::vector<Measurements> frames;
};

MeasurementVideo sample_video(const SamplingOperator& op, const CubeVideo& video);

// HSM1 container: "HSM1", u32 n, k, b, frame_count, u64 seed, f64 rate, then
// per frame k*b f32 values, band after band (column-major Y).
void save_measurements(const MeasurementVideo& video, const std::filesystem::path& path);
MeasurementVideo load_measurements(const std::filesystem::path& path);

}  // namespace hscs
