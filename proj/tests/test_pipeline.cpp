#include <cmath>
#include <set>

#include "doctest.h"

#include "bandtint/pipeline.hpp"
#include "oracles.hpp"

using namespace bandtint;

namespace {

std::vector<PlanarImage> corpus_targets(int count, int size, std::uint64_t seed = 42) {
  return targets_of(gen_corpus(CorpusSpec{count, size, seed, 0.0}));
}

TrainConfig quick(int steps, int batch = 4, double lr = 1e-3) {
  TrainConfig cfg;
  cfg.steps = steps;
  cfg.batch = batch;
  cfg.lr = lr;
  return cfg;
}

std::string error_text(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("zero learning rate leaves parameters and loss unchanged") {
  const auto targets = corpus_targets(4, 32);
  ColorizerStub<float> stub({}, 3);
  const auto before = stub;
  const auto r = train_stub(stub, targets, std::nullopt, scaled_band_spec(32), quick(5, 4, 0.0));
  REQUIRE(r.losses.size() == 5);
  CHECK(params_bitwise_equal(before.params(), stub.params()));
  // Each reshuffle reorders the batch sum, so only float rounding may differ.
  for (double l : r.losses) CHECK(std::abs(l - r.losses[0]) <= 1e-6 * r.losses[0]);

  const std::vector<PlanarImage> one{targets[0]};
  const auto single = train_stub(stub, one, std::nullopt, scaled_band_spec(32), quick(5, 1, 0.0));
  for (double l : single.losses) CHECK(l == single.losses[0]);
}

TEST_CASE("training is deterministic") {
  const auto targets = corpus_targets(6, 32);
  ColorizerStub<float> a({}, 3), b({}, 3);
  const auto ra = train_stub(a, targets, std::nullopt, scaled_band_spec(32), quick(12, 3));
  const auto rb = train_stub(b, targets, std::nullopt, scaled_band_spec(32), quick(12, 3));
  CHECK(ra.losses == rb.losses);
  CHECK(params_bitwise_equal(a.params(), b.params()));
}

TEST_CASE("stub training reduces the loss") {
  const auto targets = corpus_targets(32, 32);
  ColorizerStub<float> stub({}, 5);
  const auto r = train_stub(stub, targets, std::nullopt, scaled_band_spec(32), quick(300));
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 10; ++i) {
    first += r.losses[i];
    last += r.losses[r.losses.size() - 1 - i];
  }
  MESSAGE("first-10 mean " << first / 10 << " last-10 mean " << last / 10);
  CHECK(last < 0.9 * first);
}

TEST_CASE("non-finite loss aborts with the step and parameter norms") {
  const auto targets = corpus_targets(2, 32);
  ColorizerStub<float> stub({}, 1);
  int calls = 0;
  std::vector<Example> data = stub_examples(targets, std::nullopt, scaled_band_spec(32));
  const auto msg = error_text([&] {
    fit(stub.params(), [&](Graph<float>* g, const Example& ex) {
      auto out = stub.forward(g, ex.input);
      if (++calls > 3) out = ops::affine(g, out, std::numeric_limits<float>::max(), 0.0f);
      return ops::affine(g, out, std::numeric_limits<float>::max(), 0.0f);
    }, data, quick(4, 1));
  });
  CHECK(msg.find("step") != std::string::npos);
  CHECK(msg.find("norm") != std::string::npos);
}

TEST_CASE("train config validation") {
  CHECK_THROWS_AS(quick(-1).validate(), Error);
  CHECK_THROWS_AS(quick(1, 0).validate(), Error);
  CHECK_THROWS_AS(quick(1, 1, -1e-3).validate(), Error);
  CHECK(parse_validation("kfold5") == Validation::kKfold5);
  CHECK_THROWS_AS(parse_validation("kfold3"), Error);
}

TEST_CASE("fresh frequency pipeline output keeps shape and range") {
  Rng rng(2);
  const auto gray = oracle::random_image(1, 64, 64, rng);
  FreqPipeline fp(scaled_band_spec(64), 7);
  const auto bands = gray_band_tensors(gray, fp.spec);
  const auto combined = freq_combine(nullptr, fp, bands);
  const auto full = freq_forward(nullptr, fp, bands);
  // The artifact remover starts as an identity.
  CHECK(std::equal(combined.data().begin(), combined.data().end(), full.data().begin()));
  const auto out = freq_colorize(gray, fp);
  CHECK(out.channels() == 3);
  CHECK(out.height() == 64);
  for (float v : out.planes()) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("oracle band predictions recombine to the target") {
  Rng rng(3);
  const auto target = oracle::random_image(3, 64, 64, rng);
  const auto b = split_bands(target, scaled_band_spec(64));
  const std::array<Tensor<float>, 3> preds{to_tensor<float>(b.low), to_tensor<float>(b.mid),
                                           to_tensor<float>(b.high)};
  const auto sum = from_tensor(sum_band_predictions(nullptr, preds));
  CHECK(oracle::max_abs_diff(sum.planes(), target.planes()) < 1e-4);
}

TEST_CASE("band stubs match their band domain") {
  const auto targets = corpus_targets(2, 32);
  ColorizerStub<float> low(band_stub_config(Band::kLow), 1), high(band_stub_config(Band::kHigh), 1);
  CHECK_FALSE(low.config().band_domain);
  CHECK(high.config().band_domain);
  CHECK_THROWS_AS(train_stub(high, targets, Band::kLow, scaled_band_spec(32), quick(1)), Error);
  CHECK_THROWS_AS(train_stub(high, targets, std::nullopt, scaled_band_spec(32), quick(1)), Error);
  CHECK_NOTHROW(train_stub(high, targets, Band::kHigh, scaled_band_spec(32), quick(1)));
}

TEST_CASE("validation splits") {
  const auto none = validation_splits(10, Validation::kNone, 1);
  REQUIRE(none.size() == 1);
  CHECK(none[0].train.size() == 10);
  CHECK(none[0].val.empty());

  const auto hold = validation_splits(100, Validation::kHoldout20, 1);
  REQUIRE(hold.size() == 1);
  CHECK(hold[0].train.size() == 80);
  CHECK(hold[0].val.size() == 20);
  std::set<int> all(hold[0].train.begin(), hold[0].train.end());
  all.insert(hold[0].val.begin(), hold[0].val.end());
  CHECK(all.size() == 100);
  CHECK(validation_splits(100, Validation::kHoldout20, 1)[0].val == hold[0].val);
  CHECK(validation_splits(100, Validation::kHoldout20, 2)[0].val != hold[0].val);

  for (int n : {5, 23, 100}) {
    const auto folds = validation_splits(n, Validation::kKfold5, 7);
    REQUIRE(folds.size() == 5);
    std::vector<int> seen(static_cast<std::size_t>(n), 0);
    std::size_t lo = n, hi = 0;
    for (const auto& f : folds) {
      CHECK(f.train.size() + f.val.size() == static_cast<std::size_t>(n));
      std::set<int> tr(f.train.begin(), f.train.end());
      for (int v : f.val) {
        ++seen[v];
        CHECK(tr.count(v) == 0);
      }
      lo = std::min(lo, f.val.size());
      hi = std::max(hi, f.val.size());
    }
    for (int s : seen) CHECK(s == 1);
    CHECK(hi - lo <= 1);
  }
  CHECK_THROWS_AS(validation_splits(4, Validation::kKfold5, 1), Error);
  CHECK_THROWS_AS(validation_splits(3, Validation::kHoldout20, 1), Error);
}

TEST_CASE("kfold cast training keeps the best fold") {
  const auto targets = corpus_targets(5, 32);
  const auto inputs = degraded_of(gen_corpus(CorpusSpec{5, 32, 42, 0.2}));
  auto cfg = quick(3, 2);
  cfg.validation = Validation::kKfold5;
  const auto v = train_cast_validated(SchemeKind::grid(1), inputs, targets, cfg);
  REQUIRE(v.val_losses.size() == 5);
  CHECK(v.runs.size() == 5);
  const auto best = std::min_element(v.val_losses.begin(), v.val_losses.end()) - v.val_losses.begin();
  CHECK(v.selected == best);
  CHECK(v.stage.trained);
}

TEST_CASE("strategy preconditions") {
  CastStage fresh(SchemeKind::five(), 1);
  CHECK_THROWS_AS(require_pretrained(fresh), Error);
  fresh.trained = true;
  CHECK_NOTHROW(require_pretrained(fresh));

  const auto targets = corpus_targets(2, 32);
  FreqPipeline fp(scaled_band_spec(32), 1);
  CastStage stage(SchemeKind::five(), 2);
  const auto before = stage.net;
  const auto r = strategy2(stage, fp, targets, quick(0));
  CHECK(r.losses.empty());
  CHECK(params_bitwise_equal(before.params(), stage.net.params()));
}

TEST_CASE("zero-initialized cast stage is the identity on its input") {
  Rng rng(4);
  const auto img = oracle::random_image(3, 32, 32, rng);
  CastStage stage(SchemeKind::grid(1), 9);
  const auto out = cast_correct(img, extract_means(img, build_partition(SchemeKind::grid(1), 32, 32)), stage);
  CHECK(out.planes() == img.planes());
  const auto wrong = extract_means(img, build_partition(SchemeKind::five(), 32, 32));
  CHECK_THROWS_AS(cast_correct(img, wrong, stage), Error);
}

TEST_CASE("compare strategies on a tiny corpus") {
  const auto train = corpus_targets(4, 32, 1);
  const auto test = corpus_targets(2, 32, 2);
  StrategyOptions opts;
  opts.stub_cfg = quick(3, 2);
  opts.unet_cfg = quick(2, 2);
  opts.unet_cfg.loss = LossKind::kHybrid;
  opts.cast_cfg = quick(3, 2);
  opts.joint_cfg = quick(2, 2);
  opts.spec = scaled_band_spec(32);
  const auto r = compare_strategies(train, test, opts);
  REQUIRE(r.rows.size() == 4);
  CHECK(r.rows[0].label == "stub (baseline)");
  CHECK(r.rows[1].label == "combination1");
  CHECK(r.rows[3].label == "combination3");
  CHECK(r.cast_reused_bitwise);
  CHECK(r.freq_frozen_bitwise);
  const auto table = study_channel_table(r.rows, true);
  CHECK(table.find("combination2") != std::string::npos);
  CHECK(study_json(r.rows).size() == 4);

  opts.strategies = {4};
  CHECK_THROWS_AS(compare_strategies(train, test, opts), Error);
}

TEST_CASE("evaluation") {
  const auto targets = corpus_targets(3, 32);
  const auto ident = evaluate([&](int i) { return targets[i]; }, targets, scaled_band_spec(32));
  CHECK(std::isinf(ident.mean.psnr_avg));
  REQUIRE(ident.mean.bands);
  CHECK(std::isinf(ident.mean.bands->high));
  CHECK(evaluation_json(ident)["mean"]["psnr_avg"] == "inf");

  std::vector<PlanarImage> gray_rgb;
  for (const auto& g : grays_of(targets)) {
    PlanarImage rgb(3, 32, 32);
    for (int c = 0; c < 3; ++c)
      std::copy(g.planes().begin(), g.planes().end(), rgb.planes().begin() + c * 1024);
    gray_rgb.push_back(rgb);
  }
  const auto e = evaluate([&](int i) { return gray_rgb[i]; }, targets);
  REQUIRE(e.per_image.size() == 3);
  double avg = 0.0, r = 0.0, s = 0.0;
  for (int i = 0; i < 3; ++i) {
    avg += oracle::psnr(gray_rgb[i], targets[i], 0, 3);
    r += oracle::psnr(gray_rgb[i], targets[i], 0, 1);
    s += oracle::ssim(gray_rgb[i], targets[i]);
  }
  CHECK(e.mean.psnr_avg == doctest::Approx(avg / 3).epsilon(1e-9));
  CHECK(e.mean.psnr_r == doctest::Approx(r / 3).epsilon(1e-9));
  CHECK(std::abs(e.mean.ssim - s / 3) < 1e-5);
  CHECK_FALSE(e.mean.bands);

  std::vector<MetricsReport> mixed{e.per_image[0], ident.per_image[0]};
  mixed[1].bands.reset();
  CHECK(std::isinf(mean_report(mixed).psnr_avg));
  CHECK_THROWS_AS(mean_report({}), Error);
}

TEST_CASE("test corpus is independent of the training corpus") {
  const CorpusSpec train{16, 32, 42, 0.2};
  const auto test = test_corpus_spec(train, 8);
  CHECK(test.count == 8);
  CHECK(test.size == 32);
  CHECK(test.cast_strength == 0.2);
  CHECK(test.seed != train.seed);
  CHECK(gen_corpus(test)[0].target.planes() != gen_corpus(train)[0].target.planes());
}

TEST_CASE("run_indexed keeps index order") {
  for (int jobs : {1, 3}) {
    std::vector<int> out(10, -1);
    run_indexed(10, jobs, [&](int i) { out[i] = i * i; });
    for (int i = 0; i < 10; ++i) CHECK(out[i] == i * i);
  }
}
