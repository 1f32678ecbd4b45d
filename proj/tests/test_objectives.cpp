#include <cmath>
#include <sstream>

#include "doctest.h"

#include "bandtint/objectives.hpp"
#include "bandtint/spectral.hpp"
#include "grad_suite.hpp"
#include "oracles.hpp"

using namespace bandtint;

namespace {

std::vector<double> values(const PlanarImage& img) { return {img.planes().begin(), img.planes().end()}; }

PlanarImage smooth_target(int n) {
  PlanarImage img(3, n, n);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        img.at(c, y, x) = 0.5f + 0.08f * std::sin(0.2f * (x + 2 * c)) * std::cos(0.15f * y);
  return img;
}

/// Random noise restricted to one band, scaled to a small amplitude.
PlanarImage band_noise(int n, Band band, double amplitude, Rng& rng) {
  const auto noise = oracle::random_image(3, n, n, rng, -amplitude, amplitude);
  auto out = split_bands(noise, scaled_band_spec(n))[band];
  out.set_band_domain(false);
  return out;
}

PlanarImage add(const PlanarImage& a, const PlanarImage& b) {
  PlanarImage out = a;
  for (std::size_t i = 0; i < out.planes().size(); ++i) out.planes()[i] += b.planes()[i];
  return out;
}

}  // namespace

TEST_CASE("l1 anchors and oracle") {
  const auto a = Tensor<float>::full({3, 4, 4}, 0.3f);
  CHECK(l1_loss<float>(nullptr, a, a).item() == 0.0f);
  CHECK(l1_loss<float>(nullptr, Tensor<float>::zeros({3, 4, 4}), Tensor<float>::full({3, 4, 4}, 0.5f)).item() ==
        0.5f);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto p = oracle::random_image(3, 16, 16, rng), t = oracle::random_image(3, 16, 16, rng);
    const double got = l1_loss<float>(nullptr, to_tensor<float>(p), to_tensor<float>(t)).item();
    CHECK(std::abs(got - oracle::l1(values(p), values(t))) < 1e-6);
  }
}

TEST_CASE("ssim identities and closed form") {
  Rng rng(2);
  const auto x = oracle::random_image(3, 20, 20, rng);
  CHECK(std::abs(ssim(x, x) - 1.0) < 1e-7);
  const PlanarImage zeros(3, 16, 16), ones(3, 16, 16, std::vector<float>(3 * 256, 1.0f));
  const double c1 = 1e-4;
  CHECK(ssim(zeros, ones) == doctest::Approx(c1 / (1.0 + c1)).epsilon(1e-9));
  CHECK(std::abs(ssim(zeros, ones) - 1e-4) < 1e-7);
}

TEST_CASE("ssim matches the sliding-window oracle and is symmetric") {
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    const auto a = oracle::random_image(3, 24, 20, rng);
    auto b = a;
    for (auto& v : b.planes()) v = std::clamp(v + static_cast<float>(rng.uniform(-0.3, 0.3)), 0.0f, 1.0f);
    CHECK(std::abs(ssim(a, b) - oracle::ssim(a, b)) < 1e-5);
    CHECK(std::abs(ssim(a, b) - ssim(b, a)) < 1e-7);
  }
}

TEST_CASE("ssim argument checks") {
  CHECK_THROWS_AS(ssim(PlanarImage(3, 8, 8), PlanarImage(3, 8, 8)), Error);
  CHECK_THROWS_AS(ssim(PlanarImage(3, 16, 16), PlanarImage(3, 16, 12)), Error);
  LossConfig even;
  even.window = 10;
  CHECK_THROWS_AS(ssim(PlanarImage(3, 16, 16), PlanarImage(3, 16, 16), even), Error);
  LossConfig bad_alpha;
  bad_alpha.alpha = 1.5;
  CHECK_THROWS_AS(bad_alpha.validate(), Error);
}

TEST_CASE("hybrid loss") {
  Rng rng(4);
  const auto p = to_tensor<float>(oracle::random_image(3, 16, 16, rng));
  const auto t = to_tensor<float>(oracle::random_image(3, 16, 16, rng));
  CHECK(std::abs(hybrid_loss<float>(nullptr, t, t, {}).item()) <= 1e-7);
  LossConfig l1_only;
  l1_only.alpha = 1.0;
  CHECK(hybrid_loss<float>(nullptr, p, t, l1_only).item() == l1_loss<float>(nullptr, p, t).item());
  for (double alpha : {0.0, 0.25, 0.5, 0.75}) {
    LossConfig cfg;
    cfg.alpha = alpha;
    CHECK(hybrid_loss<float>(nullptr, p, t, cfg).item() > 0.0f);
  }
  const double l1 = l1_loss<double>(nullptr, p.cast<double>(), t.cast<double>()).item();
  const double s = ssim_loss_term<double>(nullptr, p.cast<double>(), t.cast<double>(), {}).item();
  CHECK(hybrid_loss<double>(nullptr, p.cast<double>(), t.cast<double>(), {}).item() ==
        doctest::Approx(0.5 * l1 + 0.5 * (1.0 - s)).epsilon(1e-12));
  CHECK(LossConfig{}.alpha == 0.5);
}

TEST_CASE("loss terms pass the gradient check") {
  for (const auto& c : grad_suite::losses()) {
    INFO(c.name << " rel error " << c.error);
    CHECK(c.ok());
  }
}

TEST_CASE("psnr anchors") {
  Rng rng(5);
  const auto x = oracle::random_image(3, 8, 8, rng);
  CHECK(std::isinf(psnr(x, x)));
  const PlanarImage zeros(3, 8, 8), half(3, 8, 8, std::vector<float>(192, 0.5f));
  CHECK(std::abs(psnr(zeros, half) - 6.0206) < 1e-3);
  CHECK(psnr(zeros, half) == doctest::Approx(10.0 * std::log10(4.0)).epsilon(1e-12));
}

TEST_CASE("psnr matches the oracle per channel and jointly") {
  Rng rng(6);
  for (int i = 0; i < 10; ++i) {
    const auto a = oracle::random_image(3, 12, 12, rng), b = oracle::random_image(3, 12, 12, rng);
    CHECK(std::abs(psnr(a, b) - oracle::psnr(a, b, 0, 3)) < 1e-9);
    CHECK(std::abs(psnr(a, b, ChannelSel::kR) - oracle::psnr(a, b, 0, 1)) < 1e-9);
    CHECK(std::abs(psnr(a, b, ChannelSel::kG) - oracle::psnr(a, b, 1, 2)) < 1e-9);
    CHECK(std::abs(psnr(a, b, ChannelSel::kB) - oracle::psnr(a, b, 2, 3)) < 1e-9);
  }
}

TEST_CASE("psnr is monotone in the error and invariant to pixel permutation") {
  Rng rng(7);
  const auto t = oracle::random_image(3, 16, 16, rng, 0.2, 0.8);
  const auto noise = oracle::random_image(3, 16, 16, rng, -1, 1);
  double prev = INFINITY;
  for (double k : {0.01, 0.02, 0.05, 0.1, 0.2}) {
    auto p = t;
    for (std::size_t i = 0; i < p.planes().size(); ++i) p.planes()[i] += static_cast<float>(k * 0.2 * noise.planes()[i]);
    const double v = psnr(p, t);
    CHECK(v < prev);
    prev = v;
  }
  auto p = t;
  for (std::size_t i = 0; i < p.planes().size(); ++i) p.planes()[i] += 0.05f * noise.planes()[i];
  PlanarImage ps(3, 16, 16), ts(3, 16, 16);
  std::vector<int> perm(256);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = 255; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 256; ++i) {
      ps.planes()[c * 256 + i] = p.planes()[c * 256 + perm[i]];
      ts.planes()[c * 256 + i] = t.planes()[c * 256 + perm[i]];
    }
  CHECK(psnr(ps, ts) == doctest::Approx(psnr(p, t)).epsilon(1e-12));
}

TEST_CASE("band report of identical images is infinite everywhere") {
  const auto t = smooth_target(32);
  const auto r = band_report(t, t, scaled_band_spec(32));
  REQUIRE(r.bands);
  CHECK(std::isinf(r.psnr_avg));
  CHECK(std::isinf(r.bands->low));
  CHECK(std::isinf(r.bands->mid));
  CHECK(std::isinf(r.bands->high));
}

TEST_CASE("band-limited noise only degrades its own band") {
  Rng rng(8);
  const int n = 64;
  const auto t = smooth_target(n);
  for (int b = 0; b < 3; ++b) {
    const auto noise = band_noise(n, static_cast<Band>(b), 0.1, rng);
    const auto r = band_report(add(t, noise), t, scaled_band_spec(n));
    REQUIRE(r.bands);
    const double got[3] = {r.bands->low, r.bands->mid, r.bands->high};
    double mse = 0.0;
    for (float v : noise.planes()) mse += 0.25 * double(v) * v;
    mse /= noise.planes().size();
    const double want = 10.0 * std::log10(1.0 / mse);
    for (int k = 0; k < 3; ++k) {
      INFO("noise band " << b << " report band " << k);
      if (k == b) CHECK(std::abs(got[k] - want) < 0.01);
      else CHECK(std::isinf(got[k]));
    }
    CHECK(std::isfinite(r.psnr_avg));
  }
}

TEST_CASE("noise in all bands matches hand-computed band errors") {
  Rng rng(9);
  const int n = 64;
  const auto t = smooth_target(n);
  std::array<PlanarImage, 3> noise;
  for (int b = 0; b < 3; ++b) noise[b] = band_noise(n, static_cast<Band>(b), 0.03 * (b + 1), rng);
  const auto r = band_report(add(add(add(t, noise[0]), noise[1]), noise[2]), t, scaled_band_spec(n));
  REQUIRE(r.bands);
  const double got[3] = {r.bands->low, r.bands->mid, r.bands->high};
  for (int b = 0; b < 3; ++b) {
    double mse = 0.0;
    for (float v : noise[b].planes()) mse += 0.25 * double(v) * v;
    mse /= noise[b].planes().size();
    CHECK(std::abs(got[b] - 10.0 * std::log10(1.0 / mse)) < 0.01);
  }
}

TEST_CASE("report formatting") {
  CHECK(format_db(INFINITY) == "inf");
  CHECK(format_db(28.784) == "28.78");
  CHECK(db_json(INFINITY) == "inf");
  CHECK(db_json(12.5) == 12.5);

  MetricsReport base{28.0, 29.0, 30.0, 28.78, 0.9, BandPsnr{31.0, 27.5, 26.0}};
  MetricsReport ours{29.0, 30.0, 31.0, 30.08, 0.92, BandPsnr{32.0, 28.5, 27.25}};
  const auto table = band_table({{"baseline", base}, {"ours", ours}});
  std::istringstream lines(table);
  std::string header, row0, row1;
  std::getline(lines, header);
  std::getline(lines, row0);
  std::getline(lines, row1);
  for (const char* col : {"Model", "Avg PSNR", "Low-Freq", "Mid-Freq", "High-Freq", "Δ"})
    CHECK(header.find(col) != std::string::npos);
  CHECK(row0.find("28.78") != std::string::npos);
  CHECK(row1.find("30.08") != std::string::npos);
  CHECK(row1.find("+1.30") != std::string::npos);
  CHECK(row1.find("27.25") != std::string::npos);

  const auto worse = band_table({{"a", ours}, {"b", base}});
  CHECK(worse.find("-1.30") != std::string::npos);

  const auto ch = channel_table({{"x", base}});
  CHECK(ch.find("PSNR_R") != std::string::npos);
  CHECK(ch.find("30.00") != std::string::npos);

  const auto j = report_json(ours);
  CHECK(j["psnr_avg"] == 30.08);
  CHECK(j["bands"]["high"] == 27.25);
  MetricsReport perfect{INFINITY, INFINITY, INFINITY, INFINITY, 1.0, std::nullopt};
  CHECK(report_json(perfect)["psnr_avg"] == "inf");
}
