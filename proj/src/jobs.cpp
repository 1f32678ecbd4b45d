#include "bandtint/jobs.hpp"

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "bandtint/random.hpp"
#include "bandtint/snapshot.hpp"
#include "log.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace bandtint {
namespace {

using Clock = std::chrono::steady_clock;

constexpr const char* kBandMapping = "v*0.5+0.5";

/// Typed access to a job's options with unknown-key rejection.
class Options {
 public:
  Options(std::string command, const json& raw, std::set<std::string> allowed)
      : command_(std::move(command)), raw_(raw.is_null() ? json::object() : raw) {
    if (!raw_.is_object()) throw invalid_argument(command_ + ": options must be a JSON object");
    for (const auto& [key, _] : raw_.items())
      if (!allowed.count(key))
        throw invalid_argument(fmt::format("{}: unknown option '{}'", command_, key));
  }

  bool has(const std::string& key) const { return raw_.contains(key) && !raw_[key].is_null(); }

  template <class T>
  T get(const std::string& key, T fallback) const {
    return has(key) ? as<T>(key) : fallback;
  }

  template <class T>
  T require(const std::string& key) const {
    if (!has(key)) throw invalid_argument(fmt::format("{}: missing required option '{}'", command_, key));
    return as<T>(key);
  }

  template <class T>
  std::optional<T> optional(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return as<T>(key);
  }

 private:
  template <class T>
  T as(const std::string& key) const {
    try {
      return raw_.at(key).get<T>();
    } catch (const json::exception&) {
      throw invalid_argument(fmt::format("{}: option '{}' has the wrong type", command_, key));
    }
  }

  std::string command_;
  json raw_;
};

const std::set<std::string> kTrainKeys = {"corpus", "out_dir", "seed", "steps", "lr", "batch",
                                          "alpha", "r_low", "r_mid", "scheme", "validation",
                                          "jobs", "test_corpus", "test_count", "unet_steps",
                                          "unet_batch"};

std::set<std::string> with(std::set<std::string> base, std::initializer_list<const char*> extra) {
  for (const char* e : extra) base.insert(e);
  return base;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw io_error("cannot write " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw format_error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_curve(const fs::path& path, const TrainResult& r) {
  std::string text = "step,loss\n";
  for (std::size_t i = 0; i < r.losses.size(); ++i) text += fmt::format("{},{:.9g}\n", i, r.losses[i]);
  write_text(path, text);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create directory " + dir.string() + ": " + ec.message());
}

json spec_json(const CorpusSpec& s) {
  return {{"count", s.count}, {"size", s.size}, {"seed", s.seed}, {"cast_strength", s.cast_strength}};
}

json radii_json(const BandSpec& s) { return {{"r_low", s.r_low}, {"r_mid", s.r_mid}}; }

BandSpec band_spec_from(const Options& o, int size) {
  auto spec = scaled_band_spec(size);
  spec.r_low = o.get<double>("r_low", spec.r_low);
  spec.r_mid = o.get<double>("r_mid", spec.r_mid);
  spec.validate();
  return spec;
}

TrainConfig train_config_from(const Options& o) {
  TrainConfig c;
  c.steps = o.get<int>("steps", c.steps);
  c.batch = o.get<int>("batch", c.batch);
  c.lr = o.get<double>("lr", c.lr);
  c.seed = o.get<std::uint64_t>("seed", c.seed);
  c.loss_cfg.alpha = o.get<double>("alpha", c.loss_cfg.alpha);
  c.validation = parse_validation(o.get<std::string>("validation", "none"));
  c.validate();
  return c;
}

TrainConfig unet_config_from(const Options& o, const TrainConfig& base) {
  TrainConfig c = base;
  c.loss = LossKind::kHybrid;
  c.steps = o.get<int>("unet_steps", std::min(base.steps, 150));
  c.batch = o.get<int>("unet_batch", 2);
  c.validate();
  return c;
}

struct Data {
  fs::path dir;
  LoadedCorpus train;
  CorpusSpec test_spec;
  std::optional<fs::path> test_dir;
  std::vector<CorpusPair> test;
};

Data load_data(const Options& o) {
  Data d;
  d.dir = o.require<std::string>("corpus");
  d.train = read_corpus(d.dir);
  if (auto t = o.optional<std::string>("test_corpus")) {
    d.test_dir = *t;
    auto loaded = read_corpus(*d.test_dir);
    d.test_spec = loaded.spec;
    d.test = std::move(loaded.pairs);
  } else {
    const int count = o.get<int>("test_count", 16);
    if (count < 1) throw invalid_argument("test_count must be positive");
    d.test_spec = test_corpus_spec(d.train.spec, count);
    d.test = gen_corpus(d.test_spec);
  }
  if (d.train.pairs.front().target.height() != d.test.front().target.height() ||
      d.train.pairs.front().target.width() != d.test.front().target.width())
    throw invalid_argument("training and test corpora have different image sizes");
  return d;
}

json data_json(const Data& d) {
  json j = {{"corpus_dir", d.dir.string()}, {"corpus", spec_json(d.train.spec)},
            {"test_corpus", spec_json(d.test_spec)}};
  j["test_corpus_dir"] = d.test_dir ? json(d.test_dir->string()) : json();
  return j;
}

fs::path out_dir_from(const Options& o, const std::string& command) {
  return o.get<std::string>("out_dir", "runs/" + command);
}

json stub_arch(const StubConfig& c) {
  return {{"widths", c.widths}, {"band_domain", c.band_domain}};
}

json rows_with_curves(const std::vector<std::pair<std::string, TrainResult>>& curves) {
  json j = json::object();
  for (const auto& [name, r] : curves)
    j[name] = {{"final_loss", r.losses.empty() ? json() : json(r.final_loss())},
               {"steps", r.losses.size()},
               {"seconds", r.seconds}};
  return j;
}

void save_curves(const fs::path& dir, const std::vector<std::pair<std::string, TrainResult>>& curves) {
  for (const auto& [name, r] : curves) write_curve(dir / ("loss_" + name + ".csv"), r);
}

// ---------------------------------------------------------------------------

JobOutput job_gen_corpus(const json& raw) {
  const Options o("gen-corpus", raw, {"out_dir", "count", "size", "seed", "cast"});
  CorpusSpec spec;
  spec.count = o.get<int>("count", spec.count);
  spec.size = o.get<int>("size", spec.size);
  spec.seed = o.get<std::uint64_t>("seed", spec.seed);
  spec.cast_strength = o.get<double>("cast", spec.cast_strength);
  const fs::path dir = o.require<std::string>("out_dir");
  auto pairs = gen_corpus(spec);
  ensure_dir(dir);
  write_corpus(dir, spec, pairs);
  JobOutput out;
  out.report = {{"command", "gen-corpus"}, {"out_dir", dir.string()}, {"corpus", spec_json(spec)}};
  out.text = fmt::format("wrote {} image pairs ({}x{}) to {}\n", spec.count, spec.size, spec.size,
                         dir.string());
  return out;
}

JobOutput job_split(const json& raw) {
  const Options o("split", raw, {"in", "out_dir", "r_low", "r_mid"});
  const fs::path in = o.require<std::string>("in");
  const fs::path dir = o.require<std::string>("out_dir");
  const auto img = load_image(in);
  const auto spec = band_spec_from(o, std::min(img.height(), img.width()));
  const auto bands = split_bands(img, spec);
  ensure_dir(dir);
  json files = json::object();
  for (int b = 0; b < 3; ++b) {
    const auto band = static_cast<Band>(b);
    const auto& image = bands[band];
    const std::string name = std::string(band_name(band)) + ".png";
    save_image(image.band_domain() ? display_map(image) : image, dir / name);
    files[band_name(band)] = {{"file", name},
                              {"mapping", image.band_domain() ? kBandMapping : "identity"}};
  }
  JobOutput out;
  out.report = {{"command", "split"}, {"input", in.string()}, {"radii", radii_json(spec)},
                {"files", files},
                {"note", "band_domain images are stored after the display mapping"}};
  write_json(dir / "manifest.json", out.report);
  out.text = fmt::format("split {} into low/mid/high (r_low={}, r_mid={}) in {}\n", in.string(),
                         spec.r_low, spec.r_mid, dir.string());
  return out;
}

JobOutput job_train(const json& raw) {
  const auto start = Clock::now();
  const Options o("train", raw, with(kTrainKeys, {"model"}));
  const std::string model = o.require<std::string>("model");
  static const std::set<std::string> models = {"stub", "band-low", "band-mid", "band-high",
                                               "freq", "cast"};
  if (!models.count(model))
    throw invalid_argument("train: unknown model '" + model +
                           "' (expected stub, band-low, band-mid, band-high, freq or cast)");
  const auto cfg = train_config_from(o);
  const auto unet_cfg = unet_config_from(o, cfg);
  const auto scheme = SchemeKind::parse(o.get<std::string>("scheme", "five"));
  const int jobs = o.get<int>("jobs", 1);
  const auto dir = out_dir_from(o, "train");
  auto data = load_data(o);
  const int size = data.train.pairs.front().target.height();
  const auto spec = band_spec_from(o, size);
  const auto train_t = targets_of(data.train.pairs);
  const auto test_t = targets_of(data.test);
  const auto test_gray = grays_of(test_t);
  ensure_dir(dir);

  JobOutput out;
  json arch = {{"model", model}, {"radii", radii_json(spec)}};
  std::vector<std::pair<std::string, TrainResult>> curves;
  json reports;

  if (model == "stub") {
    ColorizerStub<float> stub(StubConfig{}, mix_seed(cfg.seed, 0xba5e));
    curves.emplace_back("stub", train_stub(stub, train_t, std::nullopt, spec, cfg));
    save_snapshot(dir / "stub.btw", stub.params());
    arch["stub"] = stub_arch(stub.config());
    const auto e = evaluate([&](int i) { return stub_colorize(test_gray[i], stub); }, test_t, spec);
    reports = {{"stub", evaluation_json(e)}};
    out.text = band_table({{"stub", e.mean}});
  } else if (model == "freq") {
    ColorizerStub<float> stub(StubConfig{}, mix_seed(cfg.seed, 0xba5e));
    FreqPipeline fp(spec, cfg.seed);
    TrainResult stub_curve;
    FreqTraining fc;
    run_indexed(2, jobs, [&](int j) {
      if (j == 0)
        stub_curve = train_stub(stub, train_t, std::nullopt, spec, cfg);
      else
        fc = train_freq(fp, train_t, cfg, unet_cfg);
    });
    curves.emplace_back("stub", stub_curve);
    for (int b = 0; b < 3; ++b)
      curves.emplace_back(std::string("stub_") + band_name(static_cast<Band>(b)), fc.stubs[b]);
    curves.emplace_back("unet", fc.unet);
    save_snapshot(dir / "stub.btw", stub.params());
    for (int b = 0; b < 3; ++b)
      save_snapshot(dir / (std::string("stub_") + band_name(static_cast<Band>(b)) + ".btw"),
                    fp.stubs[b].params());
    save_snapshot(dir / "unet.btw", fp.unet.params());
    arch["stub"] = stub_arch(stub.config());
    arch["band_stub"] = stub_arch(fp.stubs[0].config());
    arch["unet"] = {{"widths", fp.unet.config().widths},
                    {"seb_reduction", fp.unet.config().seb_reduction}};
    const auto base =
        evaluate([&](int i) { return stub_colorize(test_gray[i], stub); }, test_t, spec);
    const auto ours =
        evaluate([&](int i) { return freq_colorize(test_gray[i], fp); }, test_t, spec);
    reports = {{"stub", evaluation_json(base)}, {"freq", evaluation_json(ours)}};
    out.text = band_table({{"stub", base.mean}, {"freq", ours.mean}});
  } else if (model == "cast") {
    const auto train_in = degraded_of(data.train.pairs);
    const auto test_in = degraded_of(data.test);
    std::vector<Validation> protocols = {Validation::kNone};
    if (cfg.validation != Validation::kNone) protocols.push_back(cfg.validation);
    auto study = validation_study(train_in, train_t, test_in, test_t, scheme, cfg, protocols, jobs);
    const auto identity = evaluate([&](int i) { return test_in[i]; }, test_t).mean;
    std::vector<StudyRow> rows = {{"identity", identity, 0.0, {}}};
    for (auto& r : study.rows) {
      r.label = r.label.replace(0, 4, "cast");
      rows.push_back(r);
    }
    for (std::size_t p = 0; p < study.models.size(); ++p)
      for (std::size_t k = 0; k < study.models[p].runs.size(); ++k)
        curves.emplace_back(fmt::format("cast_{}_{}", validation_name(protocols[p]), k),
                            study.models[p].runs[k]);
    auto& chosen = study.models.back().stage;
    save_snapshot(dir / "cast.btw", chosen.net.params());
    arch["cast"] = {{"widths", chosen.net.config().widths}, {"scheme", scheme.name()}};
    reports = {{"rows", study_json(rows)}};
    out.text = study_channel_table(rows, false);
  } else {
    const auto band = model == "band-low" ? Band::kLow : model == "band-mid" ? Band::kMid : Band::kHigh;
    ColorizerStub<float> stub(band_stub_config(band), mix_seed(cfg.seed, 1 + static_cast<int>(band)));
    curves.emplace_back(std::string("stub_") + band_name(band),
                        train_stub(stub, train_t, band, spec, cfg));
    save_snapshot(dir / (std::string("stub_") + band_name(band) + ".btw"), stub.params());
    arch["band_stub"] = stub_arch(stub.config());
    arch["band"] = band_name(band);
    const auto test_data = stub_examples(test_t, band, spec);
    const double test_l1 = mean_loss(
        [&](Graph<float>* g, const Example& ex) { return stub.forward(g, ex.input); }, test_data, cfg);
    reports = {{"test_l1", test_l1}};
    out.text = fmt::format("{:<12}{:>12}{:>12}\n{:<12}{:>12.6f}{:>12.6f}\n", "model", "train L1",
                           "test L1", model, curves.back().second.final_loss(), test_l1);
  }

  save_curves(dir, curves);
  write_json(dir / "arch.json", arch);
  write_text(dir / "report.txt", out.text);
  out.report = {{"command", "train"},
                {"model", model},
                {"config", cfg.to_json()},
                {"unet_config", unet_cfg.to_json()},
                {"scheme", scheme.name()},
                {"radii", radii_json(spec)},
                {"final_losses", rows_with_curves(curves)},
                {"reports", reports},
                {"band_psnr_mapping", kBandMapping}};
  out.report.update(data_json(data));
  write_json(dir / "report.json", reports);
  auto manifest = out.report;
  manifest["wall_time_s"] =
      std::chrono::duration<double>(Clock::now() - start).count();
  write_json(dir / "manifest.json", manifest);
  return out;
}

JobOutput job_eval(const json& raw) {
  const Options o("eval", raw, {"corpus", "from", "out_dir", "r_low", "r_mid"});
  const fs::path corpus_dir = o.require<std::string>("corpus");
  const auto from = o.optional<std::string>("from");
  const auto out_dir = o.optional<std::string>("out_dir");
  std::optional<System> system;
  if (from) system = System::open(*from);
  const auto corpus = read_corpus(corpus_dir);
  const auto targets = targets_of(corpus.pairs);
  const auto spec = band_spec_from(o, targets.front().height());
  std::string label = "identity";
  std::function<PlanarImage(int)> fn = [&](int i) { return corpus.pairs[i].degraded; };
  if (system) {
    label = system->kind();
    if (system->can_correct()) {
      const auto scheme = *system->cast_scheme();
      fn = [&, scheme](int i) {
        const auto& t = targets[i];
        return system->correct(corpus.pairs[i].degraded,
                               extract_means(t, build_partition(scheme, t.height(), t.width())));
      };
    } else if (system->can_colorize()) {
      fn = [&](int i) { return system->colorize(targets[i]); };
    } else {
      throw invalid_argument("eval: " + system->kind() +
                             " runs emit band images; evaluate a stub, freq or cast run");
    }
  }
  const auto e = evaluate(fn, targets, spec);
  JobOutput out;
  out.text = band_table({{label, e.mean}}) + "\n" + channel_table({{label, e.mean}});
  out.report = {{"command", "eval"},
                {"corpus_dir", corpus_dir.string()},
                {"corpus", spec_json(corpus.spec)},
                {"system", label},
                {"radii", radii_json(spec)},
                {"evaluation", evaluation_json(e)},
                {"band_psnr_mapping", kBandMapping}};
  if (from) out.report["from"] = *from;
  if (out_dir) {
    ensure_dir(*out_dir);
    write_json(fs::path(*out_dir) / "manifest.json", out.report);
    write_text(fs::path(*out_dir) / "report.txt", out.text);
  }
  return out;
}

JobOutput job_sweep(const json& raw) {
  const auto start = Clock::now();
  const Options o("sweep-partitions", raw, with(kTrainKeys, {"cast_steps"}));
  const auto cfg = train_config_from(o);
  const int jobs = o.get<int>("jobs", 1);
  const auto dir = out_dir_from(o, "sweep-partitions");
  auto data = load_data(o);
  SweepOptions opts;
  opts.stub_cfg = cfg;
  opts.cast_cfg = cfg;
  opts.cast_cfg.steps = o.get<int>("cast_steps", cfg.steps);
  opts.jobs = jobs;
  ensure_dir(dir);
  const auto result = sweep_partitions(targets_of(data.train.pairs), targets_of(data.test), opts);

  JobOutput out;
  out.text = fmt::format("# baseline stub: PSNR_R {} PSNR_G {} PSNR_B {} Avg {}\n",
                         format_db(result.baseline.report.psnr_r),
                         format_db(result.baseline.report.psnr_g),
                         format_db(result.baseline.report.psnr_b),
                         format_db(result.baseline.report.psnr_avg)) +
             study_channel_table(result.rows, false);
  std::vector<std::pair<std::string, TrainResult>> curves = {{"stub", result.curves[0]}};
  for (std::size_t i = 0; i < opts.schemes.size(); ++i)
    curves.emplace_back("cast_" + opts.schemes[i].name(), result.curves[i + 1]);
  save_curves(dir, curves);
  write_text(dir / "report.txt", out.text);
  out.report = {{"command", "sweep-partitions"},
                {"config", cfg.to_json()},
                {"cast_config", opts.cast_cfg.to_json()},
                {"baseline", study_json({result.baseline})[0]},
                {"rows", study_json(result.rows)},
                {"final_losses", rows_with_curves(curves)}};
  out.report.update(data_json(data));
  write_json(dir / "report.json", out.report["rows"]);
  auto manifest = out.report;
  manifest["wall_time_s"] = std::chrono::duration<double>(Clock::now() - start).count();
  write_json(dir / "manifest.json", manifest);
  return out;
}

JobOutput job_compare(const json& raw) {
  const auto start = Clock::now();
  const Options o("compare-strategies", raw,
                  with(kTrainKeys, {"strategy", "train_stubs", "cast_steps", "joint_steps"}));
  const auto cfg = train_config_from(o);
  const auto dir = out_dir_from(o, "compare-strategies");
  auto data = load_data(o);
  StrategyOptions opts;
  opts.stub_cfg = cfg;
  opts.unet_cfg = unet_config_from(o, cfg);
  opts.cast_cfg = cfg;
  opts.cast_cfg.steps = o.get<int>("cast_steps", cfg.steps);
  opts.joint_cfg = opts.cast_cfg;
  opts.joint_cfg.steps = o.get<int>("joint_steps", opts.cast_cfg.steps);
  opts.spec = band_spec_from(o, data.train.pairs.front().target.height());
  opts.scheme = SchemeKind::parse(o.get<std::string>("scheme", "five"));
  opts.joint_train_stubs = o.get<bool>("train_stubs", false);
  opts.jobs = o.get<int>("jobs", 1);
  if (auto s = o.optional<int>("strategy")) {
    if (*s < 1 || *s > 3) throw invalid_argument("strategy must be 1, 2 or 3");
    opts.strategies = {*s};
  }
  ensure_dir(dir);
  const auto result = compare_strategies(targets_of(data.train.pairs), targets_of(data.test), opts);
  if (!result.cast_reused_bitwise)
    throw state_error("strategy 1 modified the reused cast weights");
  if (!result.freq_frozen_bitwise)
    throw state_error("strategy 2 modified the frozen frequency pipeline");

  JobOutput out;
  out.text = study_channel_table(result.rows, true) +
             "# strategy 1 cast weights bitwise unchanged: yes\n"
             "# frequency pipeline bitwise unchanged by strategies 1-2: yes\n";
  save_curves(dir, result.curves);
  write_text(dir / "report.txt", out.text);
  out.report = {{"command", "compare-strategies"},
                {"config", cfg.to_json()},
                {"unet_config", opts.unet_cfg.to_json()},
                {"cast_config", opts.cast_cfg.to_json()},
                {"joint_config", opts.joint_cfg.to_json()},
                {"joint_train_stubs", opts.joint_train_stubs},
                {"scheme", opts.scheme.name()},
                {"radii", radii_json(opts.spec)},
                {"rows", study_json(result.rows)},
                {"cast_reused_bitwise", result.cast_reused_bitwise},
                {"freq_frozen_bitwise", result.freq_frozen_bitwise},
                {"final_losses", rows_with_curves(result.curves)}};
  out.report.update(data_json(data));
  write_json(dir / "report.json", out.report["rows"]);
  auto manifest = out.report;
  manifest["wall_time_s"] = std::chrono::duration<double>(Clock::now() - start).count();
  write_json(dir / "manifest.json", manifest);
  return out;
}

template <class Model>
void load_into(Model& model, const fs::path& path) {
  try {
    assign_snapshot(model.params(), read_snapshot(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

StubConfig stub_config_from(const json& j) {
  StubConfig c;
  c.widths = j.at("widths").get<std::array<int, 3>>();
  c.band_domain = j.at("band_domain").get<bool>();
  return c;
}

}  // namespace

JobOutput run_job(const std::string& command, const json& options) {
  logger().info("running {}", command);
  if (command == "gen-corpus") return job_gen_corpus(options);
  if (command == "split") return job_split(options);
  if (command == "train") return job_train(options);
  if (command == "eval") return job_eval(options);
  if (command == "sweep-partitions") return job_sweep(options);
  if (command == "compare-strategies") return job_compare(options);
  throw invalid_argument("unknown command '" + command + "'");
}

System System::open(const fs::path& run_dir) {
  const auto arch_path = run_dir / "arch.json";
  const auto arch = read_json(arch_path);
  System s;
  try {
    s.kind_ = arch.at("model").get<std::string>();
    s.spec_.r_low = arch.at("radii").at("r_low").get<double>();
    s.spec_.r_mid = arch.at("radii").at("r_mid").get<double>();
    if (s.kind_ == "stub") {
      s.stub_.emplace(ColorizerStub<float>::zeros(stub_config_from(arch.at("stub"))));
      load_into(*s.stub_, run_dir / "stub.btw");
    } else if (s.kind_ == "freq") {
      UNetConfig uc;
      uc.widths = arch.at("unet").at("widths").get<std::array<int, 4>>();
      uc.seb_reduction = arch.at("unet").at("seb_reduction").get<int>();
      s.freq_.emplace(s.spec_, 0, stub_config_from(arch.at("band_stub")), uc);
      for (int b = 0; b < 3; ++b)
        load_into(s.freq_->stubs[b],
                  run_dir / (std::string("stub_") + band_name(static_cast<Band>(b)) + ".btw"));
      load_into(s.freq_->unet, run_dir / "unet.btw");
    } else if (s.kind_ == "cast") {
      const auto scheme = SchemeKind::parse(arch.at("cast").at("scheme").get<std::string>());
      s.cast_.emplace(scheme, 0, arch.at("cast").at("widths").get<std::array<int, 3>>());
      load_into(s.cast_->net, run_dir / "cast.btw");
      s.cast_->trained = true;
    } else if (s.kind_ == "band-low" || s.kind_ == "band-mid" || s.kind_ == "band-high") {
      const auto name = arch.at("band").get<std::string>();
      s.band_ = name == "low" ? Band::kLow : name == "mid" ? Band::kMid : Band::kHigh;
      s.stub_.emplace(ColorizerStub<float>::zeros(stub_config_from(arch.at("band_stub"))));
      load_into(*s.stub_, run_dir / ("stub_" + name + ".btw"));
    } else {
      throw format_error("unknown model kind '" + s.kind_ + "'");
    }
  } catch (const json::exception& e) {
    throw format_error("malformed " + arch_path.string() + ": " + e.what());
  }
  return s;
}

bool System::can_colorize() const { return freq_.has_value() || (stub_ && !band_); }

PlanarImage System::colorize(const PlanarImage& img) const {
  const auto gray = img.channels() == 3 ? to_gray(img) : img;
  if (freq_) return freq_colorize(gray, *freq_);
  if (stub_ && !band_) return stub_colorize(gray, *stub_);
  if (stub_ && band_) {
    const auto band = split_bands(gray, spec_)[*band_];
    return from_tensor(stub_->forward(nullptr, to_tensor<float>(band)), *band_ != Band::kLow);
  }
  throw state_error("a " + kind_ + " run cannot colorize");
}

PlanarImage System::correct(const PlanarImage& img, const MeanVector& means) const {
  if (!cast_) throw state_error("a " + kind_ + " run cannot correct casts");
  if (img.channels() != 3) throw invalid_argument("correct: input must be RGB");
  return cast_correct(img, means, *cast_);
}

}  // namespace bandtint
