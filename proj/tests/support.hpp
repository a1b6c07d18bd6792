#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hscs/cube.hpp"

namespace test {

inline std::vector<double> randn(std::size_t n, std::mt19937_64& rng, double sigma = 1.0) {
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

inline double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline hscs::HyperCube random_cube(std::size_t rows, std::size_t cols, std::size_t bands, std::mt19937_64& rng) {
  return hscs::HyperCube(rows, cols, bands, randn(rows * cols * bands, rng));
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hscs_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Eigen::MatrixXd random_spd(std::size_t b, std::mt19937_64& rng) {
  const auto v = randn(b * b, rng);
  const Eigen::MatrixXd a = Eigen::Map<const Eigen::MatrixXd>(v.data(), b, b);
  return a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(b, b);
}

}  // namespace test
