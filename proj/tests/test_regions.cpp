#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "bandtint/regions.hpp"
#include "oracles.hpp"

using namespace bandtint;

namespace {

PlanarImage quadrants(int n, const std::array<std::array<float, 3>, 4>& colors) {
  PlanarImage img(3, n, n);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) img.at(c, y, x) = colors[(y >= n / 2) * 2 + (x >= n / 2)][c];
  return img;
}

}  // namespace

TEST_CASE("scheme names") {
  for (int k = 0; k <= 4; ++k) CHECK(SchemeKind::parse("grid" + std::to_string(k)) == SchemeKind::grid(k));
  CHECK(SchemeKind::parse("five") == SchemeKind::five());
  CHECK(SchemeKind::grid(3).name() == "grid3");
  CHECK(SchemeKind::five().name() == "five");
  CHECK_THROWS_AS(SchemeKind::parse("grid9"), Error);
  CHECK_THROWS_AS(SchemeKind::parse("grid-1"), Error);
  CHECK_THROWS_AS(SchemeKind::parse("six"), Error);
  CHECK(region_count(SchemeKind::grid(2)) == 16);
  CHECK(region_count(SchemeKind::five()) == 5);
}

TEST_CASE("grid0 is the whole image and grid4 has 256 cells") {
  const auto g0 = build_partition(SchemeKind::grid(0), 64, 64);
  REQUIRE(g0.regions.size() == 1);
  CHECK(g0.regions[0] == Region{0, 0, 64, 64});
  CHECK(build_partition(SchemeKind::grid(4), 64, 64).regions.size() == 256);
}

TEST_CASE("grid cells tile every pixel exactly once") {
  for (auto [h, w] : {std::pair{64, 64}, std::pair{67, 45}, std::pair{17, 33}}) {
    for (int k = 0; k <= 4; ++k) {
      const auto p = build_partition(SchemeKind::grid(k), h, w);
      CHECK(p.regions.size() == (1u << (2 * k)));
      std::vector<int> hits(static_cast<std::size_t>(h) * w, 0);
      for (const auto& r : p.regions) {
        CHECK(r.x0 >= 0);
        CHECK(r.y0 >= 0);
        CHECK(r.x0 + r.w <= w);
        CHECK(r.y0 + r.h <= h);
        for (int y = r.y0; y < r.y0 + r.h; ++y)
          for (int x = r.x0; x < r.x0 + r.w; ++x) ++hits[y * w + x];
      }
      for (int v : hits) CHECK(v == 1);
    }
  }
}

TEST_CASE("remainder pixels go to the trailing cells") {
  const auto p = build_partition(SchemeKind::grid(1), 5, 7);
  REQUIRE(p.regions.size() == 4);
  CHECK(p.regions[0] == Region{0, 0, 3, 2});
  CHECK(p.regions[3] == Region{3, 2, 4, 3});
}

TEST_CASE("five-region geometry on 64x64") {
  const auto p = build_partition(SchemeKind::five(), 64, 64);
  REQUIRE(p.regions.size() == 5);
  const std::vector<Region> want{{0, 0, 32, 32}, {32, 0, 32, 32}, {0, 32, 32, 32}, {32, 32, 32, 32},
                                 {16, 16, 32, 32}};
  for (const auto& r : want) CHECK(std::find(p.regions.begin(), p.regions.end(), r) != p.regions.end());
  for (const auto& r : p.regions) {
    CHECK(r.w == 32);
    CHECK(r.h == 32);
  }
}

TEST_CASE("partitions reject images that are too small") {
  CHECK_THROWS_AS(build_partition(SchemeKind::grid(4), 8, 64), Error);
  CHECK_THROWS_AS(build_partition(SchemeKind::five(), 1, 1), Error);
}

TEST_CASE("means of simple images") {
  PlanarImage flat(3, 16, 16);
  const std::array<float, 3> c{0.2f, 0.5f, 0.9f};
  for (int ch = 0; ch < 3; ++ch)
    for (int i = 0; i < 256; ++i) flat.planes()[ch * 256 + i] = c[ch];
  for (const auto kind : {SchemeKind::grid(0), SchemeKind::grid(2), SchemeKind::five()}) {
    const auto m = extract_means(flat, build_partition(kind, 16, 16));
    CHECK(m.regions() == static_cast<std::size_t>(region_count(kind)));
    for (std::size_t i = 0; i < m.values.size(); ++i) CHECK(m.values[i] == doctest::Approx(c[i % 3]).epsilon(1e-7));
  }

  const std::array<std::array<float, 3>, 4> q{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.5f, 0.25f, 0.75f}}};
  const auto img = quadrants(32, q);
  const auto g1 = extract_means(img, build_partition(SchemeKind::grid(1), 32, 32));
  for (int r = 0; r < 4; ++r)
    for (int ch = 0; ch < 3; ++ch) CHECK(g1.values[r * 3 + ch] == q[r][ch]);

  const auto part = build_partition(SchemeKind::five(), 32, 32);
  const auto f = extract_means(img, part);
  for (std::size_t r = 0; r < 5; ++r) {
    const auto& reg = part.regions[r];
    const bool center = reg.x0 == 8 && reg.y0 == 8;
    for (int ch = 0; ch < 3; ++ch) {
      float want;
      if (center) {
        want = (q[0][ch] + q[1][ch] + q[2][ch] + q[3][ch]) / 4.0f;
      } else {
        want = q[(reg.y0 >= 16) * 2 + (reg.x0 >= 16)][ch];
      }
      CHECK(f.values[r * 3 + ch] == doctest::Approx(want).epsilon(1e-6));
    }
  }
}

TEST_CASE("area-weighted mean of means is the global mean") {
  Rng rng(1);
  const auto img = oracle::random_image(3, 67, 45, rng);
  std::array<double, 3> global{};
  const std::size_t n = img.plane_size();
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < n; ++i) global[c] += img.planes()[c * n + i];
    global[c] /= n;
  }
  for (int k = 0; k <= 4; ++k) {
    const auto p = build_partition(SchemeKind::grid(k), 67, 45);
    const auto m = extract_means(img, p);
    for (int c = 0; c < 3; ++c) {
      double acc = 0.0;
      for (std::size_t r = 0; r < p.regions.size(); ++r)
        acc += double(m.values[r * 3 + c]) * p.regions[r].w * p.regions[r].h;
      CHECK(std::abs(acc / n - global[c]) < 1e-6);
      if (k == 0) CHECK(std::abs(m.values[c] - global[c]) < 1e-6);
    }
  }
}

TEST_CASE("extract_means argument checks") {
  const auto p = build_partition(SchemeKind::grid(1), 16, 16);
  CHECK_THROWS_AS(extract_means(PlanarImage(1, 16, 16), p), Error);
  CHECK_THROWS_AS(extract_means(PlanarImage(3, 16, 8), p), Error);
}

TEST_CASE("mean vector JSON") {
  Rng rng(2);
  const auto img = oracle::random_image(3, 32, 32, rng);
  const auto m = extract_means(img, build_partition(SchemeKind::five(), 32, 32));
  const auto text = means_to_json(m);
  const auto back = means_from_json(text);
  CHECK(back.scheme == SchemeKind::five());
  REQUIRE(back.values.size() == 15);
  for (std::size_t i = 0; i < 15; ++i) CHECK(back.values[i] == m.values[i]);

  CHECK_THROWS_AS(means_from_json("{"), Error);
  CHECK_THROWS_AS(means_from_json(R"({"scheme":"grid1","means":[[0,0,0]]})"), Error);
  CHECK_THROWS_AS(means_from_json(R"({"scheme":"grid0","means":[[0,0]]})"), Error);
  CHECK_THROWS_AS(means_from_json(R"({"scheme":"grid7","means":[[0,0,0]]})"), Error);

  const auto path = std::filesystem::temp_directory_path() / "bandtint_means.json";
  std::ofstream(path) << text;
  CHECK(read_means_file(path).values == back.values);
  CHECK_THROWS_AS(read_means_file(path.string() + ".missing"), Error);
}
