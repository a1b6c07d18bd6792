#include "hscs/wavelet.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "hscs/errors.hpp"

namespace hscs {

namespace {
constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
}

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

int dyadic_levels(std::size_t n) {
  if (!is_power_of_two(n))
    throw InvalidArgument("length " + std::to_string(n) + " is not a power of two");
  int levels = 0;
  while ((std::size_t{1} << levels) < n) ++levels;
  return levels;
}

void haar_forward_inplace(std::span<double> x, std::span<double> scratch) noexcept {
  for (std::size_t len = x.size(); len > 1; len /= 2) {
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < half; ++i) {
      const double a = x[2 * i], b = x[2 * i + 1];
      scratch[i] = (a + b) * kInvSqrt2;
      scratch[half + i] = (a - b) * kInvSqrt2;
    }
    std::copy(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(len), x.begin());
  }
}

void haar_inverse_inplace(std::span<double> x, std::span<double> scratch) noexcept {
  for (std::size_t len = 2; len <= x.size(); len *= 2) {
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < half; ++i) {
      const double s = x[i], d = x[half + i];
      scratch[2 * i] = (s + d) * kInvSqrt2;
      scratch[2 * i + 1] = (s - d) * kInvSqrt2;
    }
    std::copy(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(len), x.begin());
  }
}

WaveletCoeffs haar_forward(std::span<const double> x) {
  WaveletCoeffs out{{x.begin(), x.end()}, dyadic_levels(x.size())};
  std::vector<double> scratch(x.size());
  haar_forward_inplace(out.values, scratch);
  return out;
}

std::vector<double> haar_inverse(const WaveletCoeffs& u) {
  const int levels = dyadic_levels(u.values.size());
  if (levels != u.levels)
    throw InvalidArgument("coefficient levels " + std::to_string(u.levels) + " do not match length " +
                          std::to_string(u.values.size()));
  std::vector<double> x = u.values;
  std::vector<double> scratch(x.size());
  haar_inverse_inplace(x, scratch);
  return x;
}

namespace {
template <void (*Transform)(std::span<double>, std::span<double>) noexcept>
FlatCube columnwise(const FlatCube& in) {
  dyadic_levels(in.n);
  FlatCube out = in;
  std::vector<double> scratch(in.n);
  for (std::size_t j = 0; j < in.b; ++j) Transform(out.column(j), scratch);
  return out;
}
}  // namespace

FlatCube haar_forward_cube(const FlatCube& flat) { return columnwise<haar_forward_inplace>(flat); }
FlatCube haar_inverse_cube(const FlatCube& coeffs) { return columnwise<haar_inverse_inplace>(coeffs); }

double l1_norm(const FlatCube& coeffs) {
  double sum = 0.0;
  for (double v : coeffs.data) sum += std::abs(v);
  return sum;
}

}  // namespace hscs
