#include <cmath>
#include <cstring>
#include <string>

#include "doctest.h"

#include "bandtint/gradcheck.hpp"
#include "bandtint/models.hpp"
#include "bandtint/snapshot.hpp"
#include "grad_suite.hpp"
#include "oracles.hpp"

using namespace bandtint;

namespace {

bool bitwise_equal(const Tensor<float>& a, const Tensor<float>& b) {
  return a.numel() == b.numel() &&
         std::memcmp(a.data().data(), b.data().data(), a.numel() * sizeof(float)) == 0;
}

std::string error_text(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void fill_zero_params(ParamList<float>& params, Rng& rng) {
  for (auto& p : params) {
    bool all_zero = true;
    for (float v : p.tensor.data()) all_zero = all_zero && v == 0.0f;
    if (all_zero)
      for (auto& v : p.tensor.mutable_data()) v = static_cast<float>(rng.uniform(-0.1, 0.1));
  }
}

}  // namespace

TEST_CASE("seb gate with zero weights is one half") {
  Rng rng(1);
  const auto x = oracle::random_tensor<float>({8, 5, 5}, rng, -3, 3);
  const SebParams<float> p{Tensor<float>::zeros({2, 8, 1, 1}), Tensor<float>::zeros({8, 2, 1, 1})};
  const auto gate = seb_gate<float>(nullptr, x, p);
  for (float v : gate.data()) CHECK(v == 0.5f);
  const auto block = seb_block<float>(nullptr, x, p);
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(block.data()[i] == 0.5f * x.data()[i]);
}

TEST_CASE("seb gate stays strictly inside (0, 1)") {
  Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = oracle::random_tensor<double>({4, 6, 6}, rng, -10, 10);
    const SebParams<double> p{oracle::random_tensor<double>({1, 4, 1, 1}, rng, -3, 3),
                              oracle::random_tensor<double>({4, 1, 1, 1}, rng, -3, 3)};
    const auto gate = seb_gate<double>(nullptr, x, p);
    for (double v : gate.data()) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("seb gate on a 4-channel pixel matches hand arithmetic") {
  const Tensor<double> x({4, 1, 1}, {0.5, -1.0, 2.0, 0.25});
  const Tensor<double> w1({1, 4, 1, 1}, {0.2, -0.4, 0.3, 1.0});
  const Tensor<double> w2({4, 1, 1, 1}, {1.0, -2.0, 0.5, 0.0});
  // hidden = relu(0.1 + 0.4 + 0.6 + 0.25) = 1.35
  const double want[4] = {sigmoid(1.35), sigmoid(-2.7), sigmoid(0.675), 0.5};
  const auto gate = seb_gate<double>(nullptr, x, {w1, w2});
  for (int c = 0; c < 4; ++c) CHECK(std::abs(gate.data()[c] - want[c]) < 1e-6);
  CHECK(std::abs(gate.data()[0] - 0.794129) < 1e-6);

  // A negative hidden activation is clipped, so every gate is σ(0).
  const Tensor<double> neg({1, 4, 1, 1}, {-1.0, 0.0, 0.0, 0.0});
  const auto clipped = seb_gate<double>(nullptr, x, {neg, w2});
  for (double v : clipped.data()) CHECK(v == 0.5);
}

TEST_CASE("seb block of a zero input is zero") {
  Rng rng(3);
  const SebParams<float> p{oracle::random_tensor<float>({1, 4, 1, 1}, rng),
                           oracle::random_tensor<float>({4, 1, 1, 1}, rng)};
  const auto out = seb_block<float>(nullptr, Tensor<float>::zeros({4, 3, 3}), p);
  for (float v : out.data()) CHECK(v == 0.0f);
}

TEST_CASE("seb rejects mismatched weights") {
  const SebParams<float> p{Tensor<float>::zeros({1, 4, 1, 1}), Tensor<float>::zeros({4, 1, 1, 1})};
  CHECK_THROWS_AS(seb_gate<float>(nullptr, Tensor<float>::zeros({8, 2, 2}), p), Error);
}

TEST_CASE("zero networks are identities") {
  Rng rng(4);
  const auto img = oracle::random_tensor<float>({3, 32, 32}, rng, 0, 1);
  const auto means = oracle::random_tensor<float>({15}, rng, 0, 1);
  CHECK(bitwise_equal(UNet<float>::zeros({}).forward(nullptr, img), img));
  CHECK(bitwise_equal(CastCorrector<float>::zeros({}).forward(nullptr, img, means), img));
  // A freshly initialized residual network starts at zero output scale too.
  CHECK(bitwise_equal(UNet<float>({}, 5).forward(nullptr, img), img));
  CHECK(bitwise_equal(CastCorrector<float>({}, 5).forward(nullptr, img, means), img));
}

TEST_CASE("unet keeps the input shape and checks extents") {
  Rng rng(5);
  UNet<float> net({}, 6);
  fill_zero_params(net.params(), rng);
  const auto img = oracle::random_tensor<float>({3, 64, 64}, rng, 0, 1);
  const auto out = net.forward(nullptr, img);
  CHECK(out.shape() == img.shape());
  CHECK_FALSE(bitwise_equal(out, img));

  const auto msg = error_text([&] { net.forward(nullptr, Tensor<float>::zeros({3, 40, 64})); });
  CHECK(msg.find("40") != std::string::npos);
  CHECK(msg.find("16") != std::string::npos);
  CHECK_THROWS_AS(net.forward(nullptr, Tensor<float>::zeros({1, 64, 64})), Error);
  CHECK_THROWS_AS(UNet<float>(UNetConfig{{16, 32, 64, 126}, 4}, 1), Error);
}

TEST_CASE("stub output shape, range and determinism") {
  Rng rng(7);
  const auto gray = oracle::random_tensor<float>({1, 32, 32}, rng, 0, 1);
  ColorizerStub<float> stub({}, 8);
  const auto a = stub.forward(nullptr, gray);
  const auto b = stub.forward(nullptr, gray);
  CHECK(a.shape() == Shape{3, 32, 32});
  CHECK(bitwise_equal(a, b));
  for (float v : a.data()) {
    CHECK(v > 0.0f);
    CHECK(v < 1.0f);
  }
  CHECK(bitwise_equal(ColorizerStub<float>({}, 8).forward(nullptr, gray), a));
  CHECK_FALSE(bitwise_equal(ColorizerStub<float>({}, 9).forward(nullptr, gray), a));

  StubConfig band_cfg;
  band_cfg.band_domain = true;
  ColorizerStub<float> signed_stub(band_cfg, 8);
  fill_zero_params(signed_stub.params(), rng);
  const auto s = signed_stub.forward(nullptr, gray);
  CHECK(std::any_of(s.data().begin(), s.data().end(), [](float v) { return v < 0.0f; }));

  CHECK_THROWS_AS(stub.forward(nullptr, Tensor<float>::zeros({1, 20, 32})), Error);
  CHECK_THROWS_AS(stub.forward(nullptr, Tensor<float>::zeros({3, 32, 32})), Error);
}

TEST_CASE("cast corrector conditioning") {
  Rng rng(10);
  CastCorrector<float> net({}, 11);
  fill_zero_params(net.params(), rng);
  const auto img = oracle::random_tensor<float>({3, 32, 32}, rng, 0, 1);
  const auto m1 = oracle::random_tensor<float>({net.mean_length()}, rng, 0, 1);
  const auto m2 = oracle::random_tensor<float>({net.mean_length()}, rng, 0, 1);
  CHECK_FALSE(bitwise_equal(net.forward(nullptr, img, m1), net.forward(nullptr, img, m2)));

  auto severed = net;
  for (auto& v : severed.params()[severed.fc_weight_index()].tensor.mutable_data()) v = 0.0f;
  CHECK(bitwise_equal(severed.forward(nullptr, img, m1), severed.forward(nullptr, img, m2)));

  const auto msg = error_text([&] { net.forward(nullptr, img, Tensor<float>::zeros({12})); });
  CHECK(msg.find("15") != std::string::npos);
  CHECK(msg.find("12") != std::string::npos);
  CHECK(CastCorrector<float>({{8, 16, 32}, SchemeKind::grid(2)}, 1).mean_length() == 48);
}

TEST_CASE("cast injection weights receive a live gradient") {
  Rng rng(12);
  auto net = CastCorrector<float>({}, 13).cast<double>();
  grad_suite::randomize(net.params(), rng);
  const auto img = oracle::random_tensor<double>({3, 16, 16}, rng, 0, 1);
  const auto means = oracle::random_tensor<double>({net.mean_length()}, rng, 0, 1);
  const auto target = oracle::random_tensor<double>({3, 16, 16}, rng, 0, 1);
  ParamList<double> fc{net.params()[net.fc_weight_index()]};
  const auto loss = [&](Graph<double>* g, const Tensor<double>&) {
    return ops::mean_abs_diff(g, net.forward(g, img, means), target);
  };
  for (auto& p : fc) p.tensor.set_requires_grad(true);
  {
    Graph<double> g;
    g.backward(loss(&g, img));
  }
  double norm = 0.0;
  for (double v : fc[0].tensor.grad()) norm += v * v;
  CHECK(norm > 0.0);
  const auto r = grad_check(loss, fc, img, 1e-4, {20, 3});
  CHECK(r.entries_checked > 0);
  CHECK(r.max_rel_error < 1e-3);
}

TEST_CASE("full networks pass the gradient check") {
  for (const auto& c : grad_suite::models()) {
    INFO(c.name << " rel error " << c.error << " entries " << c.entries << " kinks " << c.kinks);
    CHECK(c.ok());
  }
}

TEST_CASE("parameter stores copy deeply and snapshot by name") {
  UNet<float> a({}, 1);
  UNet<float> b = a;
  b.params()[0].tensor.mutable_data()[0] += 1.0f;
  CHECK(a.params()[0].tensor.data()[0] != b.params()[0].tensor.data()[0]);
  CHECK_FALSE(a.params()[0].tensor.same_storage(b.params()[0].tensor));

  ColorizerStub<float> src({}, 2), dst({}, 3);
  assign_snapshot(dst.params(), decode_snapshot(encode_snapshot(src.params())));
  for (std::size_t i = 0; i < src.params().size(); ++i)
    CHECK(bitwise_equal(src.params()[i].tensor, dst.params()[i].tensor));
  CHECK_THROWS_AS(assign_snapshot(a.params(), decode_snapshot(encode_snapshot(src.params()))), Error);
}

TEST_CASE("initialization is seeded") {
  CastCorrector<float> a({}, 5), b({}, 5), c({}, 6);
  for (std::size_t i = 0; i < a.params().size(); ++i)
    CHECK(bitwise_equal(a.params()[i].tensor, b.params()[i].tensor));
  CHECK_FALSE(bitwise_equal(a.params()[0].tensor, c.params()[0].tensor));
  for (const auto& p : a.params())
    if (p.name.ends_with(".bias")) {
      for (float v : p.tensor.data()) CHECK(v == 0.0f);
    }
}
