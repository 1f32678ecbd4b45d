#include "bandtint/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "bandtint/ops.hpp"
#include "bandtint/optim.hpp"
#include "bandtint/random.hpp"
#include "log.hpp"

namespace bandtint {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Tensor<float> example_loss(Graph<float>* g, const Tensor<float>& pred,
                           const Tensor<float>& target, const TrainConfig& cfg) {
  if (cfg.loss == LossKind::kHybrid) return hybrid_loss(g, pred, target, cfg.loss_cfg);
  return l1_loss(g, pred, target);
}

std::string param_norms(const ParamList<float>& params) {
  std::string out;
  for (const auto& p : params) {
    double acc = 0.0;
    for (float v : p.tensor.data()) acc += static_cast<double>(v) * v;
    if (!out.empty()) out += ", ";
    out += fmt::format("{}={:.4g}", p.name, std::sqrt(acc));
  }
  return out;
}

template <class Fn>
std::vector<PlanarImage> map_images(const std::vector<PlanarImage>& in, Fn fn) {
  std::vector<PlanarImage> out;
  out.reserve(in.size());
  for (const auto& img : in) out.push_back(fn(img));
  return out;
}

void shuffle(std::vector<int>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

std::vector<PlanarImage> subset(const std::vector<PlanarImage>& v, const std::vector<int>& idx) {
  std::vector<PlanarImage> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(v[static_cast<std::size_t>(i)]);
  return out;
}

double mean_of(const std::vector<MetricsReport>& rs, double MetricsReport::*field) {
  double acc = 0.0;
  for (const auto& r : rs) acc += r.*field;
  return acc / static_cast<double>(rs.size());
}

ParamList<float> all_freq_params(FreqPipeline& fp) {
  auto out = fp.stub_params();
  for (const auto& p : fp.unet.params()) out.push_back(p);
  return out;
}

ParamList<float> snapshot_params(const ParamList<float>& params) {
  ParamList<float> out;
  for (const auto& p : params) out.push_back({p.name, p.tensor.clone()});
  return out;
}

void require_same_count(const std::vector<PlanarImage>& a, const std::vector<PlanarImage>& b,
                        const char* what) {
  if (a.size() != b.size())
    throw invalid_argument(fmt::format("{}: {} inputs but {} targets", what, a.size(), b.size()));
  if (a.empty()) throw invalid_argument(fmt::format("{}: empty image set", what));
}

}  // namespace

Validation parse_validation(const std::string& text) {
  if (text == "none") return Validation::kNone;
  if (text == "holdout20") return Validation::kHoldout20;
  if (text == "kfold5") return Validation::kKfold5;
  throw invalid_argument("unknown validation protocol '" + text +
                         "' (expected none, holdout20 or kfold5)");
}

const char* validation_name(Validation v) {
  switch (v) {
    case Validation::kNone: return "none";
    case Validation::kHoldout20: return "holdout20";
    case Validation::kKfold5: return "kfold5";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (steps < 0) throw invalid_argument("steps must be non-negative");
  if (batch < 1) throw invalid_argument("batch must be positive");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw invalid_argument("learning rate must be >= 0");
  loss_cfg.validate();
}

nlohmann::json TrainConfig::to_json() const {
  return {{"steps", steps},
          {"batch", batch},
          {"lr", lr},
          {"seed", seed},
          {"loss", loss == LossKind::kL1 ? "l1" : "hybrid"},
          {"alpha", loss_cfg.alpha},
          {"validation", validation_name(validation)}};
}

double TrainResult::final_loss() const {
  return losses.empty() ? std::numeric_limits<double>::quiet_NaN() : losses.back();
}

TrainResult fit(ParamList<float>& params, const ForwardFn& forward,
                const std::vector<Example>& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw invalid_argument("fit: empty training set");
  if (params.empty()) throw invalid_argument("fit: no parameters to train");
  const auto start = Clock::now();

  struct GradScope {
    ParamList<float>& params;
    explicit GradScope(ParamList<float>& p) : params(p) {
      for (auto& q : params) {
        q.tensor.clear_grad();
        q.tensor.set_requires_grad(true);
      }
    }
    ~GradScope() {
      for (auto& q : params) {
        q.tensor.clear_grad();
        q.tensor.set_requires_grad(false);
      }
    }
  } scope(params);

  AdamState state(params, cfg.lr);
  Rng rng(mix_seed(cfg.seed, 0xf1));
  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  TrainResult result;
  result.losses.reserve(static_cast<std::size_t>(cfg.steps));
  const float inv_batch = 1.0f / static_cast<float>(cfg.batch);
  for (int step = 0; step < cfg.steps; ++step) {
    Graph<float> g;
    Tensor<float> loss;
    try {
      Tensor<float> total;
      for (int k = 0; k < cfg.batch; ++k) {
        if (cursor == order.size()) {
          shuffle(order, rng);
          cursor = 0;
        }
        const auto& ex = data[static_cast<std::size_t>(order[cursor++])];
        auto l = example_loss(&g, forward(&g, ex), ex.target, cfg);
        total = total.defined() ? ops::add(&g, total, l) : l;
      }
      loss = ops::affine(&g, total, inv_batch, 0.0f);
      g.backward(loss);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNumeric) throw;
      throw numeric_error(fmt::format("training diverged at step {}: {}; parameter norms: {}",
                                      step, e.what(), param_norms(params)));
    }
    const double value = loss.item();
    result.losses.push_back(value);
    optim_step(params, state);
    if (step % 50 == 0 || step + 1 == cfg.steps)
      logger().debug("step {} loss {:.6f}", step, value);
  }
  result.seconds = seconds_since(start);
  logger().info("trained {} steps in {:.1f}s, final loss {:.6f}", cfg.steps, result.seconds,
                result.final_loss());
  return result;
}

double mean_loss(const ForwardFn& forward, const std::vector<Example>& data,
                 const TrainConfig& cfg) {
  if (data.empty()) throw invalid_argument("mean_loss: empty set");
  double acc = 0.0;
  for (const auto& ex : data)
    acc += example_loss(nullptr, forward(nullptr, ex), ex.target, cfg).item();
  return acc / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------

StubConfig band_stub_config(Band band, StubConfig base) {
  base.band_domain = band != Band::kLow;
  return base;
}

FreqPipeline::FreqPipeline(const BandSpec& band_spec, std::uint64_t seed,
                           const StubConfig& stub_cfg, const UNetConfig& unet_cfg)
    : spec(band_spec), unet(unet_cfg, mix_seed(seed, 10)) {
  spec.validate();
  for (int b = 0; b < 3; ++b)
    stubs.emplace_back(band_stub_config(static_cast<Band>(b), stub_cfg),
                       mix_seed(seed, 1 + static_cast<std::uint64_t>(b)));
}

ParamList<float> FreqPipeline::stub_params() {
  ParamList<float> out;
  for (int b = 0; b < 3; ++b)
    for (const auto& p : stubs[b].params())
      out.push_back({std::string(band_name(static_cast<Band>(b))) + "." + p.name, p.tensor});
  return out;
}

std::array<Tensor<float>, 3> gray_band_tensors(const PlanarImage& gray, const BandSpec& spec) {
  if (gray.channels() != 1) throw invalid_argument("gray_band_tensors: expected a gray image");
  const auto bands = split_bands(gray, spec);
  return {to_tensor<float>(bands.low), to_tensor<float>(bands.mid),
          to_tensor<float>(bands.high)};
}

Tensor<float> sum_band_predictions(Graph<float>* g, const std::array<Tensor<float>, 3>& preds) {
  return ops::add(g, ops::add(g, preds[0], preds[1]), preds[2]);
}

Tensor<float> freq_combine(Graph<float>* g, const FreqPipeline& fp,
                           const std::array<Tensor<float>, 3>& gray_bands) {
  if (fp.stubs.size() != 3) throw state_error("frequency pipeline needs three band stubs");
  std::array<Tensor<float>, 3> preds;
  for (int b = 0; b < 3; ++b) preds[b] = fp.stubs[b].forward(g, gray_bands[b]);
  return sum_band_predictions(g, preds);
}

Tensor<float> freq_forward(Graph<float>* g, const FreqPipeline& fp,
                           const std::array<Tensor<float>, 3>& gray_bands) {
  return fp.unet.forward(g, freq_combine(g, fp, gray_bands));
}

PlanarImage freq_colorize(const PlanarImage& gray, const FreqPipeline& fp) {
  return clamp01(from_tensor(freq_forward(nullptr, fp, gray_band_tensors(gray, fp.spec))));
}

PlanarImage stub_colorize(const PlanarImage& gray, const ColorizerStub<float>& stub) {
  if (gray.channels() != 1) throw invalid_argument("stub_colorize: expected a gray image");
  return clamp01(from_tensor(stub.forward(nullptr, to_tensor<float>(gray))));
}

// ---------------------------------------------------------------------------

CastStage::CastStage(SchemeKind kind, std::uint64_t seed, std::array<int, 3> widths)
    : scheme(kind), net(CastConfig{widths, kind}, seed) {}

Tensor<float> means_tensor(const PlanarImage& target, SchemeKind scheme) {
  const auto m = extract_means(target, build_partition(scheme, target.height(), target.width()));
  return Tensor<float>({m.values.size()}, m.values);
}

PlanarImage cast_correct(const PlanarImage& img, const MeanVector& means, const CastStage& stage) {
  if (!(means.scheme == stage.scheme))
    throw invalid_argument("mean vector scheme " + means.scheme.name() +
                           " does not match the cast stage scheme " + stage.scheme.name());
  const Tensor<float> m({means.values.size()}, means.values);
  return clamp01(from_tensor(stage.net.forward(nullptr, to_tensor<float>(img), m)));
}

// ---------------------------------------------------------------------------

std::vector<Example> stub_examples(const std::vector<PlanarImage>& targets,
                                   std::optional<Band> band, const BandSpec& spec) {
  std::vector<Example> out;
  out.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto gray = to_gray(targets[i]);
    Example ex;
    ex.index = static_cast<int>(i);
    if (band) {
      ex.input = to_tensor<float>(split_bands(gray, spec)[*band]);
      ex.target = to_tensor<float>(split_bands(targets[i], spec)[*band]);
    } else {
      ex.input = to_tensor<float>(gray);
      ex.target = to_tensor<float>(targets[i]);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<Example> cast_examples(const std::vector<PlanarImage>& inputs,
                                   const std::vector<PlanarImage>& targets, SchemeKind scheme) {
  require_same_count(inputs, targets, "cast_examples");
  std::vector<Example> out;
  out.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Example ex;
    ex.input = to_tensor<float>(inputs[i]);
    ex.target = to_tensor<float>(targets[i]);
    ex.aux = means_tensor(targets[i], scheme);
    ex.index = static_cast<int>(i);
    out.push_back(std::move(ex));
  }
  return out;
}

TrainResult train_stub(ColorizerStub<float>& stub, const std::vector<PlanarImage>& targets,
                       std::optional<Band> band, const BandSpec& spec, const TrainConfig& cfg) {
  if (targets.empty()) throw invalid_argument("train_stub: empty corpus");
  if (band.has_value() != true && stub.config().band_domain)
    throw invalid_argument("train_stub: a band-domain stub needs a band");
  if (band && stub.config().band_domain != (*band != Band::kLow))
    throw invalid_argument(std::string("train_stub: stub output domain does not suit the ") +
                           band_name(*band) + " band");
  const auto data = stub_examples(targets, band, spec);
  return fit(stub.params(), [&](Graph<float>* g, const Example& ex) {
    return stub.forward(g, ex.input);
  }, data, cfg);
}

TrainResult train_unet(FreqPipeline& fp, const std::vector<PlanarImage>& targets,
                       const TrainConfig& cfg) {
  if (targets.empty()) throw invalid_argument("train_unet: empty corpus");
  std::vector<Example> data;
  data.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    Example ex;
    ex.input = freq_combine(nullptr, fp, gray_band_tensors(to_gray(targets[i]), fp.spec));
    ex.target = to_tensor<float>(targets[i]);
    ex.index = static_cast<int>(i);
    data.push_back(std::move(ex));
  }
  return fit(fp.unet.params(), [&](Graph<float>* g, const Example& ex) {
    return fp.unet.forward(g, ex.input);
  }, data, cfg);
}

FreqTraining train_freq(FreqPipeline& fp, const std::vector<PlanarImage>& targets,
                        const TrainConfig& cfg, std::optional<TrainConfig> unet_cfg) {
  FreqTraining out;
  for (int b = 0; b < 3; ++b) {
    auto c = cfg;
    c.seed = mix_seed(cfg.seed, 1 + static_cast<std::uint64_t>(b));
    out.stubs[b] = train_stub(fp.stubs[b], targets, static_cast<Band>(b), fp.spec, c);
  }
  if (!unet_cfg) {
    unet_cfg = cfg;
    unet_cfg->loss = LossKind::kHybrid;
  }
  unet_cfg->seed = mix_seed(unet_cfg->seed, 10);
  out.unet = train_unet(fp, targets, *unet_cfg);
  return out;
}

TrainResult train_cast(CastStage& stage, const std::vector<PlanarImage>& inputs,
                       const std::vector<PlanarImage>& targets, const TrainConfig& cfg) {
  const auto data = cast_examples(inputs, targets, stage.scheme);
  auto result = fit(stage.net.params(), [&](Graph<float>* g, const Example& ex) {
    return stage.net.forward(g, ex.input, ex.aux);
  }, data, cfg);
  stage.trained = true;
  return result;
}

// ---------------------------------------------------------------------------

std::vector<DataSplit> validation_splits(int n, Validation v, std::uint64_t seed) {
  if (n < 1) throw invalid_argument("validation: empty corpus");
  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  if (v == Validation::kNone) return {DataSplit{all, {}}};
  if (n < 5)
    throw invalid_argument(fmt::format("{} needs at least 5 images, corpus has {}",
                                       validation_name(v), n));
  Rng rng(mix_seed(seed, 0x5a11));
  auto order = all;
  shuffle(order, rng);
  auto sorted = [](std::vector<int> x) {
    std::sort(x.begin(), x.end());
    return x;
  };
  if (v == Validation::kHoldout20) {
    const auto n_val = static_cast<std::ptrdiff_t>(std::lround(n / 5.0));
    return {DataSplit{sorted({order.begin() + n_val, order.end()}),
                      sorted({order.begin(), order.begin() + n_val})}};
  }
  std::vector<DataSplit> folds;
  for (int f = 0; f < 5; ++f) {
    const auto lo = static_cast<std::ptrdiff_t>(f) * n / 5;
    const auto hi = static_cast<std::ptrdiff_t>(f + 1) * n / 5;
    DataSplit s;
    s.val = sorted({order.begin() + lo, order.begin() + hi});
    std::vector<int> rest(order.begin(), order.begin() + lo);
    rest.insert(rest.end(), order.begin() + hi, order.end());
    s.train = sorted(rest);
    folds.push_back(std::move(s));
  }
  return folds;
}

ValidatedCast train_cast_validated(SchemeKind scheme, const std::vector<PlanarImage>& inputs,
                                   const std::vector<PlanarImage>& targets,
                                   const TrainConfig& cfg) {
  require_same_count(inputs, targets, "train_cast_validated");
  const auto splits =
      validation_splits(static_cast<int>(inputs.size()), cfg.validation, cfg.seed);
  std::optional<CastStage> best;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<TrainResult> runs;
  std::vector<double> val_losses;
  int selected = 0;
  for (std::size_t s = 0; s < splits.size(); ++s) {
    CastStage stage(scheme, cfg.seed);
    runs.push_back(train_cast(stage, subset(inputs, splits[s].train),
                              subset(targets, splits[s].train), cfg));
    double val = std::numeric_limits<double>::quiet_NaN();
    if (!splits[s].val.empty()) {
      const auto data = cast_examples(subset(inputs, splits[s].val),
                                      subset(targets, splits[s].val), scheme);
      val = mean_loss([&](Graph<float>* g, const Example& ex) {
        return stage.net.forward(g, ex.input, ex.aux);
      }, data, cfg);
    }
    val_losses.push_back(val);
    if (!best || val < best_loss) {
      best_loss = val;
      selected = static_cast<int>(s);
      best = std::move(stage);
    }
  }
  return ValidatedCast{std::move(*best), std::move(runs), std::move(val_losses), selected};
}

// ---------------------------------------------------------------------------

MetricsReport mean_report(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw invalid_argument("mean_report: no reports");
  MetricsReport m;
  m.psnr_r = mean_of(reports, &MetricsReport::psnr_r);
  m.psnr_g = mean_of(reports, &MetricsReport::psnr_g);
  m.psnr_b = mean_of(reports, &MetricsReport::psnr_b);
  m.psnr_avg = mean_of(reports, &MetricsReport::psnr_avg);
  m.ssim = mean_of(reports, &MetricsReport::ssim);
  const bool all_bands =
      std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.bands.has_value(); });
  if (all_bands) {
    BandPsnr b;
    for (const auto& r : reports) {
      b.low += r.bands->low;
      b.mid += r.bands->mid;
      b.high += r.bands->high;
    }
    const auto n = static_cast<double>(reports.size());
    b.low /= n;
    b.mid /= n;
    b.high /= n;
    m.bands = b;
  }
  return m;
}

Evaluation evaluate(const std::function<PlanarImage(int)>& system,
                    const std::vector<PlanarImage>& targets,
                    const std::optional<BandSpec>& bands) {
  if (targets.empty()) throw invalid_argument("evaluate: empty test set");
  Evaluation e;
  e.per_image.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto pred = system(static_cast<int>(i));
    e.per_image.push_back(bands ? band_report(pred, targets[i], *bands)
                                : channel_report(pred, targets[i]));
  }
  e.mean = mean_report(e.per_image);
  return e;
}

nlohmann::json evaluation_json(const Evaluation& e) {
  auto per = nlohmann::json::array();
  for (const auto& r : e.per_image) per.push_back(report_json(r));
  return {{"mean", report_json(e.mean)}, {"per_image", per}};
}

CorpusSpec test_corpus_spec(const CorpusSpec& train, int count) {
  CorpusSpec s = train;
  s.count = count;
  s.seed = mix_seed(train.seed, 0x7e57);
  return s;
}

std::vector<PlanarImage> targets_of(const std::vector<CorpusPair>& pairs) {
  std::vector<PlanarImage> out;
  for (const auto& p : pairs) out.push_back(p.target);
  return out;
}

std::vector<PlanarImage> degraded_of(const std::vector<CorpusPair>& pairs) {
  std::vector<PlanarImage> out;
  for (const auto& p : pairs) out.push_back(p.degraded);
  return out;
}

std::vector<PlanarImage> grays_of(const std::vector<PlanarImage>& targets) {
  return map_images(targets, [](const PlanarImage& t) { return to_gray(t); });
}

// ---------------------------------------------------------------------------

std::string study_channel_table(const std::vector<StudyRow>& rows, bool with_time) {
  std::string out = fmt::format("{:<22}{:>10}{:>10}{:>10}{:>10}{:>8}", "Model", "PSNR_R",
                                "PSNR_G", "PSNR_B", "Avg PSNR", "SSIM");
  out += with_time ? fmt::format("{:>10}\n", "Time (s)") : "\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    out += fmt::format("{:<22}{:>10}{:>10}{:>10}{:>10}{:>8.4f}", row.label, format_db(r.psnr_r),
                       format_db(r.psnr_g), format_db(r.psnr_b), format_db(r.psnr_avg), r.ssim);
    out += with_time ? fmt::format("{:>10.1f}\n", row.seconds) : "\n";
  }
  return out;
}

nlohmann::json study_json(const std::vector<StudyRow>& rows) {
  auto out = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json j = {{"label", row.label},
                        {"report", report_json(row.report)},
                        {"seconds", row.seconds}};
    if (!row.extra.is_null()) j["extra"] = row.extra;
    out.push_back(std::move(j));
  }
  return out;
}

void run_indexed(int count, int jobs, const std::function<void(int)>& body) {
  if (count <= 0) return;
  if (jobs <= 1 || count == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min(jobs, count); ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

SweepResult sweep_partitions(const std::vector<PlanarImage>& train_targets,
                             const std::vector<PlanarImage>& test_targets,
                             const SweepOptions& opts) {
  if (test_targets.empty()) throw invalid_argument("sweep_partitions: empty test set");
  SweepResult out;
  ColorizerStub<float> stub(StubConfig{}, mix_seed(opts.stub_cfg.seed, 0xba5e));
  const auto stub_curve = train_stub(stub, train_targets, std::nullopt, {}, opts.stub_cfg);
  const auto train_in = map_images(grays_of(train_targets),
                                   [&](const PlanarImage& g) { return stub_colorize(g, stub); });
  const auto test_in = map_images(grays_of(test_targets),
                                  [&](const PlanarImage& g) { return stub_colorize(g, stub); });
  out.baseline.label = "stub";
  out.baseline.report = evaluate([&](int i) { return test_in[i]; }, test_targets).mean;
  out.baseline.seconds = stub_curve.seconds;
  out.curves.push_back(stub_curve);

  const auto n = static_cast<int>(opts.schemes.size());
  out.rows.resize(static_cast<std::size_t>(n));
  std::vector<TrainResult> curves(static_cast<std::size_t>(n));
  run_indexed(n, opts.jobs, [&](int i) {
    const auto scheme = opts.schemes[static_cast<std::size_t>(i)];
    CastStage stage(scheme, mix_seed(opts.cast_cfg.seed, 0xca57));
    curves[i] = train_cast(stage, train_in, train_targets, opts.cast_cfg);
    const auto eval = evaluate([&](int k) {
      const auto& t = test_targets[static_cast<std::size_t>(k)];
      return cast_correct(test_in[k], extract_means(t, build_partition(scheme, t.height(), t.width())),
                          stage);
    }, test_targets);
    auto& row = out.rows[static_cast<std::size_t>(i)];
    row.label = "stub+" + scheme.name();
    row.report = eval.mean;
    row.seconds = curves[i].seconds;
    row.extra = {{"scheme", scheme.name()},
                 {"regions", region_count(scheme)},
                 {"final_loss", curves[i].final_loss()}};
  });
  for (auto& c : curves) out.curves.push_back(std::move(c));
  return out;
}

void require_pretrained(const CastStage& stage) {
  if (!stage.trained)
    throw state_error("strategy 1 needs cast weights trained on colorizer outputs");
}

PlanarImage combined_output(const PlanarImage& gray, const PlanarImage& target,
                            const FreqPipeline& fp, const CastStage& stage) {
  const auto colored = freq_colorize(gray, fp);
  return cast_correct(
      colored, extract_means(target, build_partition(stage.scheme, target.height(), target.width())),
      stage);
}

TrainResult strategy2(CastStage& stage, const FreqPipeline& fp,
                      const std::vector<PlanarImage>& targets, const TrainConfig& cfg) {
  const auto inputs = map_images(grays_of(targets),
                                 [&](const PlanarImage& g) { return freq_colorize(g, fp); });
  if (cfg.steps == 0) return {};
  return train_cast(stage, inputs, targets, cfg);
}

TrainResult strategy3(FreqPipeline& fp, CastStage& stage, const std::vector<PlanarImage>& targets,
                      const TrainConfig& cfg, bool train_stubs) {
  if (targets.empty()) throw invalid_argument("strategy3: empty corpus");
  std::vector<std::array<Tensor<float>, 3>> bands;
  std::vector<Example> data;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    auto gb = gray_band_tensors(to_gray(targets[i]), fp.spec);
    Example ex;
    ex.index = static_cast<int>(i);
    ex.target = to_tensor<float>(targets[i]);
    ex.aux = means_tensor(targets[i], stage.scheme);
    if (!train_stubs) ex.input = freq_combine(nullptr, fp, gb);
    bands.push_back(std::move(gb));
    data.push_back(std::move(ex));
  }
  ParamList<float> params = fp.unet.params();
  for (const auto& p : stage.net.params()) params.push_back(p);
  if (train_stubs)
    for (const auto& p : fp.stub_params()) params.push_back(p);
  auto result = fit(params, [&](Graph<float>* g, const Example& ex) {
    const auto combined = train_stubs ? freq_combine(g, fp, bands[ex.index]) : ex.input;
    const auto colored = ops::clamp01(g, fp.unet.forward(g, combined));
    return stage.net.forward(g, colored, ex.aux);
  }, data, cfg);
  stage.trained = true;
  return result;
}

bool params_bitwise_equal(const ParamList<float>& a, const ParamList<float>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].tensor.shape() != b[i].tensor.shape()) return false;
    const auto x = a[i].tensor.data();
    const auto y = b[i].tensor.data();
    if (std::memcmp(x.data(), y.data(), x.size_bytes()) != 0) return false;
  }
  return true;
}

StrategyResult compare_strategies(const std::vector<PlanarImage>& train_targets,
                                  const std::vector<PlanarImage>& test_targets,
                                  const StrategyOptions& opts) {
  if (test_targets.empty()) throw invalid_argument("compare_strategies: empty test set");
  for (int s : opts.strategies)
    if (s < 1 || s > 3) throw invalid_argument(fmt::format("unknown strategy {}", s));
  const auto train_gray = grays_of(train_targets);
  const auto test_gray = grays_of(test_targets);

  ColorizerStub<float> stub(StubConfig{}, mix_seed(opts.stub_cfg.seed, 0xba5e));
  CastStage pretrained(opts.scheme, mix_seed(opts.cast_cfg.seed, 0xca57));
  FreqPipeline fp(opts.spec, opts.stub_cfg.seed);
  TrainResult stub_curve, cast_curve;
  FreqTraining freq_curves;
  // The baseline chain and the frequency pipeline are independent.
  run_indexed(2, opts.jobs, [&](int job) {
    if (job == 0) {
      stub_curve = train_stub(stub, train_targets, std::nullopt, opts.spec, opts.stub_cfg);
      const auto stub_out = map_images(train_gray,
                                       [&](const PlanarImage& g) { return stub_colorize(g, stub); });
      cast_curve = train_cast(pretrained, stub_out, train_targets, opts.cast_cfg);
    } else {
      freq_curves = train_freq(fp, train_targets, opts.stub_cfg, opts.unet_cfg);
    }
  });

  StrategyResult out;
  out.curves.emplace_back("baseline_stub", stub_curve);
  out.curves.emplace_back("cast_pretrained", cast_curve);
  for (int b = 0; b < 3; ++b)
    out.curves.emplace_back(std::string("stub_") + band_name(static_cast<Band>(b)),
                            freq_curves.stubs[b]);
  out.curves.emplace_back("unet", freq_curves.unet);

  StudyRow base;
  base.label = "stub (baseline)";
  base.report = evaluate([&](int i) { return stub_colorize(test_gray[i], stub); }, test_targets).mean;
  base.seconds = stub_curve.seconds;
  out.rows.push_back(base);

  const auto freq_before = snapshot_params(all_freq_params(fp));
  const auto cast_before = snapshot_params(pretrained.net.params());
  const auto n = static_cast<int>(opts.strategies.size());
  std::vector<StudyRow> rows(static_cast<std::size_t>(n));
  std::vector<TrainResult> curves(static_cast<std::size_t>(n));
  run_indexed(n, opts.jobs, [&](int i) {
    const int s = opts.strategies[static_cast<std::size_t>(i)];
    auto& row = rows[static_cast<std::size_t>(i)];
    row.label = fmt::format("combination{}", s);
    const auto start = Clock::now();
    if (s == 1) {
      require_pretrained(pretrained);
      row.report = evaluate([&](int k) {
        return combined_output(test_gray[k], test_targets[k], fp, pretrained);
      }, test_targets).mean;
      row.seconds = seconds_since(start);
    } else if (s == 2) {
      CastStage fresh(opts.scheme, mix_seed(opts.cast_cfg.seed, 0xca58));
      curves[i] = strategy2(fresh, fp, train_targets, opts.cast_cfg);
      row.seconds = seconds_since(start);
      row.report = evaluate([&](int k) {
        return combined_output(test_gray[k], test_targets[k], fp, fresh);
      }, test_targets).mean;
    } else {
      FreqPipeline joint_fp = fp;
      CastStage joint_cast = pretrained;
      curves[i] = strategy3(joint_fp, joint_cast, train_targets, opts.joint_cfg,
                            opts.joint_train_stubs);
      row.seconds = seconds_since(start);
      row.report = evaluate([&](int k) {
        return combined_output(test_gray[k], test_targets[k], joint_fp, joint_cast);
      }, test_targets).mean;
    }
    row.extra = {{"strategy", s}, {"final_loss", curves[i].final_loss()}};
  });
  for (int i = 0; i < n; ++i) {
    out.rows.push_back(rows[static_cast<std::size_t>(i)]);
    const int s = opts.strategies[static_cast<std::size_t>(i)];
    if (s != 1) out.curves.emplace_back(fmt::format("combination{}", s), curves[i]);
  }
  out.cast_reused_bitwise = params_bitwise_equal(cast_before, pretrained.net.params());
  out.freq_frozen_bitwise = params_bitwise_equal(freq_before, all_freq_params(fp));
  return out;
}

ValidationStudy validation_study(const std::vector<PlanarImage>& train_inputs,
                                 const std::vector<PlanarImage>& train_targets,
                                 const std::vector<PlanarImage>& test_inputs,
                                 const std::vector<PlanarImage>& test_targets, SchemeKind scheme,
                                 const TrainConfig& cfg, const std::vector<Validation>& protocols,
                                 int jobs) {
  require_same_count(test_inputs, test_targets, "validation_study");
  const auto n = static_cast<int>(protocols.size());
  std::vector<std::optional<ValidatedCast>> models(static_cast<std::size_t>(n));
  std::vector<StudyRow> rows(static_cast<std::size_t>(n));
  run_indexed(n, jobs, [&](int i) {
    auto c = cfg;
    c.validation = protocols[static_cast<std::size_t>(i)];
    const auto start = Clock::now();
    auto vc = train_cast_validated(scheme, train_inputs, train_targets, c);
    auto& row = rows[static_cast<std::size_t>(i)];
    row.seconds = seconds_since(start);
    row.label = c.validation == Validation::kNone
                    ? "stub+" + scheme.name()
                    : fmt::format("stub+{} {}", scheme.name(), validation_name(c.validation));
    row.report = evaluate([&](int k) {
      const auto& t = test_targets[static_cast<std::size_t>(k)];
      return cast_correct(test_inputs[k],
                          extract_means(t, build_partition(scheme, t.height(), t.width())),
                          vc.stage);
    }, test_targets).mean;
    auto val = nlohmann::json::array();
    for (double v : vc.val_losses) val.push_back(std::isnan(v) ? nlohmann::json() : nlohmann::json(v));
    row.extra = {{"validation", validation_name(c.validation)},
                 {"val_losses", val},
                 {"selected", vc.selected}};
    models[static_cast<std::size_t>(i)] = std::move(vc);
  });
  ValidationStudy out;
  out.rows = std::move(rows);
  for (auto& m : models) out.models.push_back(std::move(*m));
  return out;
}

}  // namespace bandtint
