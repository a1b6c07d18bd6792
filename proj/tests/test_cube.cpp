#include <doctest.h>

#include <cstring>
#include <fstream>

#include "hscs/cube.hpp"
#include "hscs/errors.hpp"
#include "support.hpp"

using namespace hscs;

namespace {

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::vector<unsigned char> hsc_header(std::uint32_t rows, std::uint32_t cols, std::uint32_t bands,
                                      std::uint32_t frames) {
  std::vector<unsigned char> b = {'H', 'S', 'C', '1'};
  put_u32(b, rows);
  put_u32(b, cols);
  put_u32(b, bands);
  put_u32(b, frames);
  return b;
}

FormatError::Kind load_error_kind(const std::filesystem::path& p) {
  try {
    load_video(p);
  } catch (const FormatError& e) {
    return e.kind();
  }
  FAIL("load_video accepted a malformed file");
  return FormatError::Kind::Io;
}

}  // namespace

TEST_CASE("flatten examples") {
  const FlatCube one = flatten(HyperCube(1, 1, 1, {5.0}));
  CHECK(one.n == 1);
  CHECK(one.b == 1);
  CHECK(one.column(0)[0] == 5.0);

  const FlatCube f = flatten(HyperCube(2, 2, 1, {1, 2, 3, 4}));
  CHECK(std::vector<double>(f.column(0).begin(), f.column(0).end()) == std::vector<double>{1, 2, 3, 4});
}

TEST_CASE("flatten follows row-major index arithmetic") {
  std::mt19937_64 rng(3);
  const HyperCube c = test::random_cube(2, 2, 2, rng);
  const FlatCube f = flatten(c);
  REQUIRE(f.b == 2);
  REQUIRE(f.n == 4);
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t col = 0; col < 2; ++col) CHECK(f.column(j)[r * 2 + col] == c.at(r, col, j));
}

TEST_CASE("unflatten examples and errors") {
  FlatCube f(4, 1);
  f.data = {1, 2, 3, 4};
  const HyperCube c = unflatten(f, 2, 2);
  CHECK(c.at(0, 0, 0) == 1);
  CHECK(c.at(0, 1, 0) == 2);
  CHECK(c.at(1, 0, 0) == 3);
  CHECK(c.at(1, 1, 0) == 4);
  CHECK_THROWS_AS(unflatten(f, 4, 2), DimensionMismatch);
}

TEST_CASE("flatten and unflatten are inverse over random shapes") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> dim(1, 9);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t r = dim(rng), c = dim(rng), b = dim(rng);
    const HyperCube cube = test::random_cube(r, c, b, rng);
    CHECK(unflatten(flatten(cube), r, c) == cube);
    const FlatCube f = flatten(cube);
    CHECK(flatten(unflatten(f, r, c)) == f);
  }
}

TEST_CASE("cube construction validates input") {
  CHECK_THROWS_AS(HyperCube(0, 2, 2), InvalidArgument);
  CHECK_THROWS_AS(HyperCube(2, 2, 2, std::vector<double>(7)), DimensionMismatch);
  std::vector<double> bad(8, 0.0);
  bad[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(HyperCube(2, 2, 2, bad), InvalidArgument);
}

TEST_CASE("pixel gathers one value per band") {
  std::mt19937_64 rng(5);
  const HyperCube c = test::random_cube(3, 4, 5, rng);
  const Spectrum p = c.pixel(2, 1);
  REQUIRE(p.size() == 5);
  for (std::size_t j = 0; j < 5; ++j) CHECK(p[j] == c.at(2, 1, j));
  CHECK(c.pixel(2 * 4 + 1) == p);
}

TEST_CASE("extract_roi") {
  std::mt19937_64 rng(7);
  const HyperCube c = test::random_cube(6, 5, 3, rng);
  CHECK(extract_roi(c, 0, 0, 6, 5) == c);

  const HyperCube big = test::random_cube(128, 128, 20, rng);
  const HyperCube roi = extract_roi(big, 32, 16, 64, 64);
  CHECK(roi.rows() == 64);
  CHECK(roi.cols() == 64);
  CHECK(roi.bands() == 20);
  CHECK(roi.at(0, 0, 0) == big.at(32, 16, 0));
  CHECK(roi.at(63, 63, 19) == big.at(95, 79, 19));

  CHECK_THROWS_AS(extract_roi(c, 4, 0, 3, 5), OutOfBounds);
  CHECK_THROWS_AS(extract_roi(c, 0, 1, 6, 5), OutOfBounds);
  CHECK_THROWS_AS(extract_roi(c, 0, 0, 0, 5), OutOfBounds);
}

TEST_CASE("extract_roi commutes with per-pixel operations") {
  std::mt19937_64 rng(8);
  const HyperCube c = test::random_cube(10, 12, 4, rng);
  auto square_sum = [](const HyperCube& in) {
    std::vector<double> out(in.pixels());
    for (std::size_t p = 0; p < in.pixels(); ++p) out[p] = in.pixel(p).squaredNorm();
    return out;
  };
  const auto full = square_sum(c);
  const auto sub = square_sum(extract_roi(c, 3, 2, 5, 7));
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t col = 0; col < 7; ++col) CHECK(sub[r * 7 + col] == full[(r + 3) * 12 + col + 2]);
}

TEST_CASE("video requires equal non-empty frames") {
  CHECK_THROWS_AS(CubeVideo(std::vector<HyperCube>{}), InvalidArgument);
  CHECK_THROWS_AS(CubeVideo({HyperCube(2, 2, 1), HyperCube(2, 2, 2)}), DimensionMismatch);
}

TEST_CASE("HSC save and load round-trip") {
  const auto dir = test::scratch_dir("cube_io");
  std::mt19937_64 rng(9);
  std::vector<HyperCube> frames;
  for (int t = 0; t < 3; ++t) {
    // Values exactly representable as f32 so the round-trip is bitwise.
    auto v = test::randn(8 * 8 * 4, rng);
    for (auto& x : v) x = static_cast<float>(x);
    frames.emplace_back(8, 8, 4, v);
  }
  const CubeVideo video(frames);
  save_video(video, dir / "v.hsc");
  CHECK(load_video(dir / "v.hsc") == video);
  CHECK(std::filesystem::file_size(dir / "v.hsc") == 20 + 3 * 8 * 8 * 4 * 4);
}

TEST_CASE("HSC load rejects malformed files") {
  const auto dir = test::scratch_dir("cube_bad");

  auto magic = hsc_header(1, 1, 1, 1);
  std::memcpy(magic.data(), "XXXX", 4);
  magic.resize(magic.size() + 4, 0);
  write_bytes(dir / "magic.hsc", magic);
  CHECK(load_error_kind(dir / "magic.hsc") == FormatError::Kind::BadMagic);

  // 140 frames of 64x64x20 need exactly 140*64*64*20*4 payload bytes.
  auto header = hsc_header(64, 64, 20, 140);
  const std::size_t payload = std::size_t{140} * 64 * 64 * 20 * 4;
  auto short_file = header;
  short_file.resize(header.size() + payload - 4, 0);
  write_bytes(dir / "short.hsc", short_file);
  CHECK(load_error_kind(dir / "short.hsc") == FormatError::Kind::Truncated);
  std::filesystem::remove(dir / "short.hsc");

  auto exact = hsc_header(4, 4, 2, 3);
  exact.resize(exact.size() + 4 * 4 * 2 * 3 * 4, 0);
  write_bytes(dir / "exact.hsc", exact);
  const CubeVideo v = load_video(dir / "exact.hsc");
  CHECK(v.size() == 3);
  CHECK(v.rows() == 4);
  CHECK(v.bands() == 2);

  exact.push_back(0);
  write_bytes(dir / "long.hsc", exact);
  CHECK(load_error_kind(dir / "long.hsc") == FormatError::Kind::TrailingData);

  write_bytes(dir / "zero.hsc", hsc_header(0, 4, 4, 1));
  CHECK(load_error_kind(dir / "zero.hsc") == FormatError::Kind::Parse);

  write_bytes(dir / "huge.hsc", hsc_header(0xFFFFFFFFu, 0xFFFFFFFFu, 0xFFFFFFFFu, 0xFFFFFFFFu));
  CHECK(load_error_kind(dir / "huge.hsc") == FormatError::Kind::DimensionOverflow);

  write_bytes(dir / "stub.hsc", {'H', 'S', 'C'});
  CHECK(load_error_kind(dir / "stub.hsc") == FormatError::Kind::BadMagic);

  CHECK(load_error_kind(dir / "missing.hsc") == FormatError::Kind::Io);
}
