#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bandtint/corpus.hpp"
#include "bandtint/models.hpp"
#include "bandtint/objectives.hpp"
#include "bandtint/regions.hpp"
#include "bandtint/spectral.hpp"

namespace bandtint {

enum class LossKind { kL1, kHybrid };
enum class Validation { kNone, kHoldout20, kKfold5 };

Validation parse_validation(const std::string& text);
const char* validation_name(Validation v);

struct TrainConfig {
  int steps = 300;
  int batch = 4;
  double lr = 1e-3;
  std::uint64_t seed = 42;
  LossKind loss = LossKind::kL1;
  LossConfig loss_cfg;
  Validation validation = Validation::kNone;

  void validate() const;
  nlohmann::json to_json() const;
};

/// One training pair. `aux` carries the mean vector for conditioned models
/// and is undefined otherwise.
struct Example {
  Tensor<float> input;
  Tensor<float> target;
  Tensor<float> aux;
  /// Position in the source set, for forwards that need side data.
  int index = -1;
};

struct TrainResult {
  std::vector<double> losses;
  double seconds = 0.0;
  double final_loss() const;
};

/// Prediction for one example, recorded on `g`.
using ForwardFn = std::function<Tensor<float>(Graph<float>* g, const Example& ex)>;

/// Minibatch Adam descent on `params` for cfg.steps steps. Batches are drawn
/// from a seeded per-epoch shuffle; the batch loss is the mean of the
/// per-example losses. A non-finite loss aborts with the step index and the
/// parameter norms. Parameters outside `params` are never updated.
TrainResult fit(ParamList<float>& params, const ForwardFn& forward,
                const std::vector<Example>& data, const TrainConfig& cfg);

/// Mean loss of the model over `data`, without recording.
double mean_loss(const ForwardFn& forward, const std::vector<Example>& data,
                 const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Frequency pipeline

struct FreqPipeline {
  BandSpec spec;
  /// Indexed by Band.
  std::vector<ColorizerStub<float>> stubs;
  UNet<float> unet;

  FreqPipeline(const BandSpec& spec, std::uint64_t seed,
               const StubConfig& stub_cfg = {}, const UNetConfig& unet_cfg = {});

  ParamList<float> stub_params();
};

StubConfig band_stub_config(Band band, StubConfig base = {});

/// Gray bands as tensors, indexed by Band.
std::array<Tensor<float>, 3> gray_band_tensors(const PlanarImage& gray, const BandSpec& spec);

/// The per-band predictions summed into one RGB estimate.
Tensor<float> sum_band_predictions(Graph<float>* g, const std::array<Tensor<float>, 3>& preds);

/// Band stubs then summation, before the artifact remover.
Tensor<float> freq_combine(Graph<float>* g, const FreqPipeline& fp,
                           const std::array<Tensor<float>, 3>& gray_bands);
/// Full pipeline output before clamping.
Tensor<float> freq_forward(Graph<float>* g, const FreqPipeline& fp,
                           const std::array<Tensor<float>, 3>& gray_bands);

PlanarImage freq_colorize(const PlanarImage& gray, const FreqPipeline& fp);
PlanarImage stub_colorize(const PlanarImage& gray, const ColorizerStub<float>& stub);

// ---------------------------------------------------------------------------
// Cast stage

struct CastStage {
  SchemeKind scheme;
  CastCorrector<float> net;
  bool trained = false;

  CastStage(SchemeKind scheme, std::uint64_t seed, std::array<int, 3> widths = {8, 16, 32});
};

Tensor<float> means_tensor(const PlanarImage& target, SchemeKind scheme);
PlanarImage cast_correct(const PlanarImage& img, const MeanVector& means, const CastStage& stage);

// ---------------------------------------------------------------------------
// Training units

std::vector<Example> stub_examples(const std::vector<PlanarImage>& targets,
                                   std::optional<Band> band, const BandSpec& spec);
/// (input image, target means) -> target.
std::vector<Example> cast_examples(const std::vector<PlanarImage>& inputs,
                                   const std::vector<PlanarImage>& targets, SchemeKind scheme);

TrainResult train_stub(ColorizerStub<float>& stub, const std::vector<PlanarImage>& targets,
                       std::optional<Band> band, const BandSpec& spec, const TrainConfig& cfg);

/// Trains the artifact remover on the recombined band predictions with the
/// band stubs held fixed.
TrainResult train_unet(FreqPipeline& fp, const std::vector<PlanarImage>& targets,
                       const TrainConfig& cfg);

struct FreqTraining {
  std::array<TrainResult, 3> stubs;
  TrainResult unet;
};

/// Band stubs first, then the artifact remover. `unet_cfg` defaults to `cfg`
/// with the hybrid loss.
FreqTraining train_freq(FreqPipeline& fp, const std::vector<PlanarImage>& targets,
                        const TrainConfig& cfg, std::optional<TrainConfig> unet_cfg = {});

TrainResult train_cast(CastStage& stage, const std::vector<PlanarImage>& inputs,
                       const std::vector<PlanarImage>& targets, const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Validation

struct DataSplit {
  std::vector<int> train;
  std::vector<int> val;
};

/// none: one split with everything in train. holdout20: a seeded shuffle with
/// round(n/5) images held out. kfold5: five disjoint folds covering the set,
/// sizes differing by at most one.
std::vector<DataSplit> validation_splits(int n, Validation v, std::uint64_t seed);

struct ValidatedCast {
  CastStage stage;
  std::vector<TrainResult> runs;
  std::vector<double> val_losses;
  int selected = 0;
};

/// Trains one cast stage per split; kfold5 keeps the fold with the lowest
/// validation loss.
ValidatedCast train_cast_validated(SchemeKind scheme, const std::vector<PlanarImage>& inputs,
                                   const std::vector<PlanarImage>& targets,
                                   const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Evaluation

struct Evaluation {
  std::vector<MetricsReport> per_image;
  MetricsReport mean;
};

/// Per-image reports of system(i) against targets[i] plus their mean. With
/// `bands` set every report carries per-band PSNR.
Evaluation evaluate(const std::function<PlanarImage(int)>& system,
                    const std::vector<PlanarImage>& targets,
                    const std::optional<BandSpec>& bands = std::nullopt);

/// Field-wise arithmetic mean; any +inf entry makes the mean +inf.
MetricsReport mean_report(const std::vector<MetricsReport>& reports);

nlohmann::json evaluation_json(const Evaluation& e);

/// Test corpus derived from a training corpus spec: same size and cast,
/// independent seed.
CorpusSpec test_corpus_spec(const CorpusSpec& train, int count);

std::vector<PlanarImage> targets_of(const std::vector<CorpusPair>& pairs);
std::vector<PlanarImage> degraded_of(const std::vector<CorpusPair>& pairs);
std::vector<PlanarImage> grays_of(const std::vector<PlanarImage>& targets);

// ---------------------------------------------------------------------------
// Studies

struct StudyRow {
  std::string label;
  MetricsReport report;
  double seconds = 0.0;
  nlohmann::json extra;
};

std::string study_channel_table(const std::vector<StudyRow>& rows, bool with_time);
nlohmann::json study_json(const std::vector<StudyRow>& rows);

/// Runs `count` independent jobs on up to `jobs` threads; results keep index
/// order.
void run_indexed(int count, int jobs, const std::function<void(int)>& body);

struct SweepOptions {
  TrainConfig stub_cfg;
  TrainConfig cast_cfg;
  int jobs = 1;
  std::vector<SchemeKind> schemes = {SchemeKind::grid(0), SchemeKind::grid(1),
                                     SchemeKind::grid(2), SchemeKind::grid(3),
                                     SchemeKind::grid(4), SchemeKind::five()};
};

struct SweepResult {
  StudyRow baseline;
  std::vector<StudyRow> rows;
  std::vector<TrainResult> curves;
};

/// Baseline stub, then one cast stage per scheme trained on the stub's
/// outputs and evaluated on the test images.
SweepResult sweep_partitions(const std::vector<PlanarImage>& train_targets,
                             const std::vector<PlanarImage>& test_targets,
                             const SweepOptions& opts);

struct StrategyOptions {
  TrainConfig stub_cfg;
  TrainConfig unet_cfg;
  TrainConfig cast_cfg;
  TrainConfig joint_cfg;
  BandSpec spec;
  SchemeKind scheme = SchemeKind::five();
  /// Strategy 3 also updates the band stubs.
  bool joint_train_stubs = false;
  std::vector<int> strategies = {1, 2, 3};
  int jobs = 1;
};

struct StrategyResult {
  std::vector<StudyRow> rows;  // baseline first
  bool cast_reused_bitwise = true;
  bool freq_frozen_bitwise = true;
  std::vector<std::pair<std::string, TrainResult>> curves;
};

/// Strategy 1 reuses cast weights on frequency-pipeline outputs without
/// retraining; rejects a stage that was never trained.
void require_pretrained(const CastStage& stage);
/// A fresh cast stage trained on frozen pipeline outputs.
TrainResult strategy2(CastStage& stage, const FreqPipeline& fp,
                      const std::vector<PlanarImage>& targets, const TrainConfig& cfg);
/// Joint training of the artifact remover and cast stage (and optionally the
/// band stubs) through the composed system with an L1 loss.
TrainResult strategy3(FreqPipeline& fp, CastStage& stage, const std::vector<PlanarImage>& targets,
                      const TrainConfig& cfg, bool train_stubs);

PlanarImage combined_output(const PlanarImage& gray, const PlanarImage& target,
                            const FreqPipeline& fp, const CastStage& stage);

StrategyResult compare_strategies(const std::vector<PlanarImage>& train_targets,
                                  const std::vector<PlanarImage>& test_targets,
                                  const StrategyOptions& opts);

bool params_bitwise_equal(const ParamList<float>& a, const ParamList<float>& b);

struct ValidationStudy {
  std::vector<StudyRow> rows;
  std::vector<ValidatedCast> models;
};

/// One cast-stage row per protocol, each trained on the baseline stub's
/// outputs and evaluated on the test images.
ValidationStudy validation_study(const std::vector<PlanarImage>& train_inputs,
                                 const std::vector<PlanarImage>& train_targets,
                                 const std::vector<PlanarImage>& test_inputs,
                                 const std::vector<PlanarImage>& test_targets, SchemeKind scheme,
                                 const TrainConfig& cfg, const std::vector<Validation>& protocols,
                                 int jobs = 1);

}  // namespace bandtint
