#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tadkit/gaf.hpp"
#include "tadkit/rng.hpp"

using namespace tadkit;

TEST_CASE("paa segment means") {
  CHECK(paa({1, 2, 3, 4}, 2) == std::vector<double>{1.5, 3.5});
  const std::vector<double> same{0.1, 0.2, 0.3};
  CHECK(paa(same, 3) == same);
  // L=3 -> segments [0,1) and [1,3).
  const auto r = paa({1, 2, 3}, 2);
  CHECK(r[0] == 1.0);
  CHECK(r[1] == 2.5);
}

TEST_CASE("paa preserves the global mean when S divides L") {
  Rng rng(3);
  std::vector<double> x(24);
  for (auto& v : x) v = rng.uniform(-1, 1);
  for (std::size_t s : {1ul, 2ul, 3ul, 4ul, 6ul, 8ul, 12ul, 24ul}) {
    const auto y = paa(x, s);
    double mx = 0, my = 0;
    for (double v : x) mx += v;
    for (double v : y) my += v;
    CHECK(mx / x.size() == Catch::Approx(my / y.size()).margin(1e-12));
  }
}

TEST_CASE("gasf endpoints and diagonal identity") {
  GafConfig cfg;
  cfg.resolution = 2;
  const auto g = gaf_encode({1.0, -1.0}, cfg);
  CHECK(g.data == std::vector<double>{1, -1, -1, 1});

  const auto z = gaf_encode({0.0, 0.5, -0.25}, cfg);
  for (std::size_t i = 0; i < 3; ++i) {
    const double x = std::vector<double>{0.0, 0.5, -0.25}[i];
    CHECK(z.data[i * 3 + i] == 2 * x * x - 1);  // exact on the diagonal
  }
}

TEST_CASE("gasf matches the hand-derived 3x3 matrix") {
  GafConfig cfg;
  const auto g = gaf_encode({0.5, 0.0, -0.5}, cfg);
  const double s32 = std::sqrt(3.0) / 2.0;
  const double expected[9] = {-0.5, -s32, -1.0, -s32, -1.0, -s32, -1.0, -s32, -0.5};
  for (int i = 0; i < 9; ++i) CHECK(g.data[i] == Catch::Approx(expected[i]).margin(1e-12));
}

TEST_CASE("closed form equals the trig form within 1e-9") {
  Rng rng(9);
  GafConfig sum_cfg;
  GafConfig diff_cfg;
  diff_cfg.variant = GafVariant::difference;
  for (int it = 0; it < 200; ++it) {
    std::vector<double> x(8);
    for (auto& v : x) v = rng.uniform(-1, 1);
    x[0] = 1.0;  // exercise the boundary
    x[1] = -1.0;
    const auto g = gaf_encode(x, sum_cfg);
    const auto d = gaf_encode(x, diff_cfg);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double pi_ = std::acos(x[i]);
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double pj = std::acos(x[j]);
        CHECK(std::abs(g.data[i * x.size() + j] - std::cos(pi_ + pj)) < 1e-9);
        CHECK(std::abs(d.data[i * x.size() + j] - std::sin(pi_ - pj)) < 1e-9);
      }
    }
  }
}

TEST_CASE("gasf is exactly symmetric, gadf exactly antisymmetric") {
  Rng rng(11);
  std::vector<double> x(16);
  for (auto& v : x) v = rng.uniform(-1, 1);
  GafConfig sum_cfg;
  const auto g = gaf_encode(x, sum_cfg);
  GafConfig diff_cfg;
  diff_cfg.variant = GafVariant::difference;
  const auto d = gaf_encode(x, diff_cfg);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(d.data[i * 16 + i] == 0.0);
    for (std::size_t j = 0; j < 16; ++j) {
      CHECK(g.data[i * 16 + j] == g.data[j * 16 + i]);
      CHECK(d.data[i * 16 + j] == -d.data[j * 16 + i]);
    }
  }
}

TEST_CASE("outputs stay in [-1,1] including boundary inputs") {
  Rng rng(13);
  for (auto variant : {GafVariant::summation, GafVariant::difference}) {
    GafConfig cfg;
    cfg.variant = variant;
    std::vector<double> x(32);
    for (auto& v : x) v = rng.uniform(-1, 1);
    x[0] = 1.0;
    x[31] = -1.0;
    const auto g = gaf_encode(x, cfg);
    for (double v : g.data) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("inputs slightly outside clip, grossly outside fail") {
  GafConfig cfg;
  const auto g = gaf_encode({1.0 + 1e-12, -1.0 - 1e-12}, cfg);
  CHECK(g.data[0] == 1.0);
  CHECK_THROWS_AS(gaf_encode({1.1}, cfg), Error);
  CHECK_THROWS_AS(gaf_encode({-1.0 - 1e-8}, cfg), Error);
}

TEST_CASE("gaf stack encodes channels independently and in order") {
  GafConfig cfg;
  cfg.resolution = 4;
  // Two channels: constant 0 and a ramp.
  const std::size_t len = 8, nc = 2;
  std::vector<double> window(len * nc);
  for (std::size_t t = 0; t < len; ++t) {
    window[t * nc + 0] = 0.0;
    window[t * nc + 1] = -1.0 + 2.0 * double(t) / double(len - 1);
  }
  const auto stack = gaf_stack(window, len, nc, cfg, 7);
  REQUIRE(stack.images.shape == std::vector<std::size_t>{2, 4, 4});
  CHECK(stack.window_id == 7);
  // Constant-zero channel: every entry is -1 (diagonal identity everywhere).
  for (std::size_t i = 0; i < 16; ++i) CHECK(stack.images.data[i] == Catch::Approx(-1.0));

  // Swapping channels swaps slices.
  std::vector<double> swapped(len * nc);
  for (std::size_t t = 0; t < len; ++t) {
    swapped[t * nc + 0] = window[t * nc + 1];
    swapped[t * nc + 1] = window[t * nc + 0];
  }
  const auto sstack = gaf_stack(swapped, len, nc, cfg);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(sstack.images.data[i] == stack.images.data[16 + i]);
    CHECK(sstack.images.data[16 + i] == stack.images.data[i]);
  }

  // Single channel reduces to gaf_encode(paa(x, S)).
  std::vector<double> ramp(len);
  for (std::size_t t = 0; t < len; ++t) ramp[t] = window[t * nc + 1];
  const auto single = gaf_stack(ramp, len, 1, cfg);
  const auto direct = gaf_encode(paa(ramp, 4), cfg);
  CHECK(single.images.data == direct.data);
}

TEST_CASE("pgm export: affine map, rounding, size") {
  const auto path = (std::filesystem::temp_directory_path() / "tadkit_test.pgm").string();
  Tensor img({2, 2});
  img.data = {-1.0, 1.0, 0.0, 0.5};
  export_pgm(img, path);

  std::ifstream in(path, std::ios::binary);
  std::string magic, dims;
  std::getline(in, magic);
  CHECK(magic == "P5");
  std::getline(in, dims);
  CHECK(dims == "2 2");
  std::getline(in, dims);
  CHECK(dims == "255");
  unsigned char px[4];
  in.read(reinterpret_cast<char*>(px), 4);
  CHECK(px[0] == 0);
  CHECK(px[1] == 255);
  CHECK(px[2] == 128);  // round-half-up of 127.5
  CHECK(px[3] == 191);  // round of 191.25
  CHECK(std::filesystem::file_size(path) == 11 + 4);  // "P5\n2 2\n255\n" + pixels
  std::remove(path.c_str());
}
