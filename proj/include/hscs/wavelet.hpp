#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hscs/cube.hpp"

namespace hscs {

// Full-depth orthonormal 1-D Haar coefficients of a length-2^levels signal.
// Layout: [scaling, coarsest detail, next 2 details, ..., finest n/2 details].
struct WaveletCoeffs {
  std::vector<double> values;
  int levels = 0;
};

bool is_power_of_two(std::size_t n) noexcept;
// log2(n); throws InvalidArgument unless n is a positive power of two.
int dyadic_levels(std::size_t n);

WaveletCoeffs haar_forward(std::span<const double> x);
std::vector<double> haar_inverse(const WaveletCoeffs& u);

// In-place variants for hot loops. scratch must hold at least x.size()
// values; x.size() must be a power of two (not checked).
void haar_forward_inplace(std::span<double> x, std::span<double> scratch) noexcept;
void haar_inverse_inplace(std::span<double> x, std::span<double> scratch) noexcept;

// Column-wise transforms of a flattened cube (U = HX and X = H^{-1}U).
FlatCube haar_forward_cube(const FlatCube& flat);
FlatCube haar_inverse_cube(const FlatCube& coeffs);

// l1 norm of the whole coefficient matrix taken as one length n*b vector.
double l1_norm(const FlatCube& coeffs);

}  // namespace hscs
