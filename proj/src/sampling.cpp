#include "hscs/sampling.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "binio.hpp"
#include "hscs/errors.hpp"
#include "hscs/wavelet.hpp"

namespace hscs {

namespace {

// Uniform integer in [0, bound) straight from the engine so operators are
// reproducible across standard library implementations.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % bound;
}

std::vector<double>& scratch_buffer(std::size_t n) {
  thread_local std::vector<double> buf;
  if (buf.size() < n) buf.resize(n);
  return buf;
}

}  // namespace

void fwht_inplace(std::span<double> x) noexcept {
  const std::size_t n = x.size();
  for (std::size_t h = 1; h < n; h *= 2) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = x[j], b = x[j + h];
        x[j] = a + b;
        x[j + h] = a - b;
      }
    }
  }
}

std::size_t measurement_count(std::size_t n, double rate) {
  if (!(rate > 0.0 && rate <= 1.0)) throw InvalidArgument("sampling rate must lie in (0, 1]");
  const auto k = static_cast<std::size_t>(std::floor(rate * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n);
}

SamplingOperator::SamplingOperator(std::size_t n, std::vector<std::uint32_t> rows,
                                   std::vector<std::uint32_t> perm, std::vector<std::int8_t> signs)
    : n_(n), rows_(std::move(rows)), perm_(std::move(perm)), signs_(std::move(signs)) {
  dyadic_levels(n);
  if (rows_.empty() || rows_.size() > n) throw InvalidArgument("row count must lie in [1, n]");
  std::sort(rows_.begin(), rows_.end());
  if (std::adjacent_find(rows_.begin(), rows_.end()) != rows_.end())
    throw InvalidArgument("row indices must be distinct");
  if (rows_.front() != 0) throw InvalidArgument("row indices must include the constant row 0");
  if (rows_.back() >= n) throw InvalidArgument("row index out of range");
  if (perm_.size() != n || signs_.size() != n)
    throw DimensionMismatch("permutation and sign vectors must have length n");
  std::vector<bool> seen(n, false);
  for (auto p : perm_) {
    if (p >= n || seen[p]) throw InvalidArgument("column permutation is not a permutation of [0, n)");
    seen[p] = true;
  }
  for (auto s : signs_)
    if (s != 1 && s != -1) throw InvalidArgument("sign flips must be +1 or -1");
  rate_ = static_cast<double>(rows_.size()) / static_cast<double>(n);
}

SamplingOperator build_sampler(std::size_t n, double rate, std::uint64_t seed) {
  dyadic_levels(n);
  const std::size_t k = measurement_count(n, rate);
  std::mt19937_64 rng(seed);

  // Partial Fisher-Yates over [1, n) picks the k-1 non-constant rows.
  std::vector<std::uint32_t> pool(n - 1);
  std::iota(pool.begin(), pool.end(), 1u);
  for (std::size_t i = 0; i + 1 < k; ++i) {
    const std::size_t j = i + uniform_below(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  std::vector<std::uint32_t> rows{0};
  rows.insert(rows.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k - 1));

  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[uniform_below(rng, i + 1)]);

  std::vector<std::int8_t> signs(n);
  for (auto& s : signs) s = (rng() >> 63) ? std::int8_t{-1} : std::int8_t{1};

  SamplingOperator op(n, std::move(rows), std::move(perm), std::move(signs));
  op.rate_ = rate;
  op.seed_ = seed;
  return op;
}

void SamplingOperator::apply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != n_ || y.size() != k())
    throw DimensionMismatch("apply expects x of length " + std::to_string(n_) + " and y of length " +
                            std::to_string(k()));
  auto& z = scratch_buffer(n_);
  for (std::size_t i = 0; i < n_; ++i) z[i] = signs_[i] * x[perm_[i]];
  fwht_inplace({z.data(), n_});
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_));
  for (std::size_t r = 0; r < rows_.size(); ++r) y[r] = scale * z[rows_[r]];
}

std::vector<double> SamplingOperator::apply(std::span<const double> x) const {
  std::vector<double> y(k());
  apply(x, y);
  return y;
}

void SamplingOperator::apply_adjoint(std::span<const double> y, std::span<double> x) const {
  if (y.size() != k() || x.size() != n_)
    throw DimensionMismatch("apply_adjoint expects y of length " + std::to_string(k()) +
                            " and x of length " + std::to_string(n_));
  auto& z = scratch_buffer(n_);
  std::fill(z.begin(), z.begin() + static_cast<std::ptrdiff_t>(n_), 0.0);
  for (std::size_t r = 0; r < rows_.size(); ++r) z[rows_[r]] = y[r];
  fwht_inplace({z.data(), n_});
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_));
  for (std::size_t i = 0; i < n_; ++i) x[perm_[i]] = scale * signs_[i] * z[i];
}

std::vector<double> SamplingOperator::apply_adjoint(std::span<const double> y) const {
  std::vector<double> x(n_);
  apply_adjoint(y, x);
  return x;
}

Eigen::MatrixXd materialize(const SamplingOperator& op) {
  const std::size_t n = op.n();
  if (n > 4096) throw InvalidArgument("materialize is limited to n <= 4096");
  Eigen::MatrixXd s(static_cast<Eigen::Index>(op.k()), static_cast<Eigen::Index>(n));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  const auto& rows = op.row_indices();
  const auto& perm = op.permutation();
  const auto& signs = op.sign_flips();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      const double h = (std::popcount(rows[r] & static_cast<std::uint32_t>(i)) & 1) ? -1.0 : 1.0;
      s(static_cast<Eigen::Index>(r), perm[i]) = scale * h * signs[i];
    }
  }
  return s;
}

Measurements sample_cube(const SamplingOperator& op, const FlatCube& flat) {
  if (flat.n != op.n())
    throw DimensionMismatch("cube has n=" + std::to_string(flat.n) + " but operator expects " +
                            std::to_string(op.n()));
  Measurements m{op.k(), flat.b, op.rate(), std::vector<double>(op.k() * flat.b)};
  for (std::size_t j = 0; j < flat.b; ++j) op.apply(flat.column(j), m.column(j));
  return m;
}

MeasurementVideo sample_video(const SamplingOperator& op, const CubeVideo& video) {
  MeasurementVideo out{op.n(), op.rate(), op.seed(), {}};
  out.frames.reserve(video.size());
  for (const auto& frame : video.frames()) out.frames.push_back(sample_cube(op, flatten(frame)));
  return out;
}

void save_measurements(const MeasurementVideo& video, const std::filesystem::path& path) {
  if (video.frames.empty()) throw InvalidArgument("cannot save an empty measurement video");
  const auto& first = video.frames.front();
  for (const auto& f : video.frames)
    if (f.k != first.k || f.b != first.b) throw DimensionMismatch("measurement frames differ in shape");
  detail::ByteWriter w;
  w.magic("HSM1");
  w.u32(static_cast<std::uint32_t>(video.n));
  w.u32(static_cast<std::uint32_t>(first.k));
  w.u32(static_cast<std::uint32_t>(first.b));
  w.u32(static_cast<std::uint32_t>(video.frames.size()));
  w.u64(video.seed);
  w.f64(video.rate);
  for (const auto& f : video.frames) w.f32_values(f.data);
  w.write_to(path);
}

MeasurementVideo load_measurements(const std::filesystem::path& path) {
  detail::ByteReader r(path);
  r.expect_magic("HSM1");
  MeasurementVideo out;
  out.n = r.u32();
  const std::uint64_t k = r.u32(), b = r.u32(), frames = r.u32();
  out.seed = r.u64();
  out.rate = r.f64();
  if (out.n == 0 || k == 0 || b == 0 || frames == 0 || k > out.n)
    throw FormatError(FormatError::Kind::Parse, r.path() + ": invalid header dimensions");
  if (!is_power_of_two(out.n))
    throw FormatError(FormatError::Kind::Parse, r.path() + ": n is not a power of two");
  if (!(out.rate > 0.0 && out.rate <= 1.0) || measurement_count(out.n, out.rate) != k)
    throw FormatError(FormatError::Kind::Parse, r.path() + ": rate does not match k");
  const std::array<std::uint64_t, 3> dims{k, b, frames};
  const std::uint64_t total = detail::checked_product(dims, kMaxVideoValues, r.path());
  r.need(4 * total, "payload");
  for (std::uint64_t t = 0; t < frames; ++t) {
    Measurements m{k, b, out.rate, r.f32_values(k * b)};
    for (double v : m.data)
      if (!std::isfinite(v)) throw FormatError(FormatError::Kind::Parse, r.path() + ": non-finite measurement");
    out.frames.push_back(std::move(m));
  }
  r.expect_end();
  return out;
}

}  // namespace hscs
