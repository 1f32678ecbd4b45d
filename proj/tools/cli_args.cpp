#include "cli_args.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <sstream>
#include <vector>

#include "CLI11.hpp"

#include "bandtint/bandtint.h"

namespace bandtint::cli {
namespace {

/// Options of one subcommand, collected into JSON after parsing.
class Flags {
 public:
  explicit Flags(CLI::App* app) : app_(app) {}

  CLI::Option* text(const std::string& flag, const std::string& help, bool required = false) {
    return bind(flag, strings_.emplace_back(), help, required);
  }
  CLI::Option* integer(const std::string& flag, const std::string& help) {
    return bind(flag, ints_.emplace_back(), help, false);
  }
  CLI::Option* seed(const std::string& flag, const std::string& help) {
    return bind(flag, seeds_.emplace_back(), help, false);
  }
  CLI::Option* real(const std::string& flag, const std::string& help) {
    return bind(flag, reals_.emplace_back(), help, false);
  }
  CLI::Option* boolean(const std::string& flag, const std::string& help) {
    auto* opt = app_->add_flag(flag, help);
    fillers_.push_back([opt, key = key_of(flag)](nlohmann::json& j) {
      if (opt->count() > 0) j[key] = true;
    });
    return opt;
  }

  void defaults(nlohmann::json values) { defaults_ = std::move(values); }

  nlohmann::json collect() const {
    nlohmann::json j = defaults_.is_null() ? nlohmann::json::object() : defaults_;
    for (const auto& f : fillers_) f(j);
    return j;
  }

  CLI::App* app() const { return app_; }

 private:
  static std::string key_of(const std::string& flag) {
    std::string key = flag.substr(flag.find_first_not_of('-'));
    for (auto& c : key)
      if (c == '-') c = '_';
    return key;
  }

  template <class T>
  CLI::Option* bind(const std::string& flag, T& storage, const std::string& help, bool required) {
    auto* opt = app_->add_option(flag, storage, help);
    if (required) opt->required();
    fillers_.push_back([opt, &storage, key = key_of(flag)](nlohmann::json& j) {
      if (opt->count() > 0) j[key] = storage;
    });
    return opt;
  }

  CLI::App* app_;
  std::deque<std::string> strings_;
  std::deque<int> ints_;
  std::deque<std::uint64_t> seeds_;
  std::deque<double> reals_;
  std::vector<std::function<void(nlohmann::json&)>> fillers_;
  nlohmann::json defaults_;
};

const CLI::Validator kScheme(
    [](std::string& value) -> std::string {
      int count = 0;
      if (bt_region_count(value.c_str(), &count) != BT_OK) return bt_last_error();
      return {};
    },
    "grid0..grid4|five", "scheme");

const CLI::Validator kStrictlyPositive = CLI::PositiveNumber;

void add_radii(Flags& f) {
  f.real("--r-low", "Low-band radius in frequency bins (default 30, scaled by size/256)")
      ->check(kStrictlyPositive);
  f.real("--r-mid", "Mid/high boundary radius in frequency bins (default 90, scaled by size/256)")
      ->check(kStrictlyPositive);
}

void add_training(Flags& f) {
  f.text("--corpus", "Training corpus directory", true);
  f.text("--out-dir", "Run output directory (default runs/<command>)");
  f.seed("--seed", "Seed for every random choice (default 42)");
  f.integer("--steps", "Optimizer steps per trained unit (default 300)")
      ->check(CLI::NonNegativeNumber);
  f.real("--lr", "Learning rate (default 1e-3)")->check(CLI::NonNegativeNumber);
  f.integer("--batch", "Images per step (default 4)")->check(CLI::PositiveNumber);
  f.real("--alpha", "L1 weight of the hybrid loss (default 0.5)")->check(CLI::Range(0.0, 1.0));
  add_radii(f);
  f.text("--scheme", "Mean partition scheme: grid0..grid4 or five (default five)")->check(kScheme);
  f.text("--validation", "Validation protocol: none, holdout20 or kfold5 (default none)")
      ->check(CLI::IsMember({"none", "holdout20", "kfold5"}));
  f.integer("--jobs", "Independent training runs to execute concurrently (default 1)")
      ->check(CLI::PositiveNumber);
  f.text("--test-corpus", "Test corpus directory (default: generated with a derived seed)");
  f.integer("--test-count", "Images in the generated test corpus (default 16)")
      ->check(CLI::PositiveNumber);
  f.integer("--unet-steps", "Artifact-remover steps (default min(steps, 150))")
      ->check(CLI::NonNegativeNumber);
  f.integer("--unet-batch", "Artifact-remover batch (default 2)")->check(CLI::PositiveNumber);
  f.defaults({{"alpha", 0.5}, {"scheme", "five"}, {"seed", 42}});
}

void check_radii(const nlohmann::json& j) {
  if (j.contains("r_low") && j.contains("r_mid") &&
      !(j["r_low"].get<double>() < j["r_mid"].get<double>()))
    throw CLI::ValidationError("--r-low/--r-mid", "--r-low must be smaller than --r-mid");
}

}  // namespace

ParseResult parse_args(int argc, const char* const* argv) {
  CLI::App app{"Frequency-band colorization refinement and color-cast correction", "bandtint"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every command");

  std::vector<std::unique_ptr<Flags>> all;
  auto make = [&](const std::string& name, const std::string& desc) -> Flags& {
    all.push_back(std::make_unique<Flags>(app.add_subcommand(name, desc)));
    return *all.back();
  };

  auto& gen = make("gen-corpus", "Write a synthetic target/cast image corpus");
  gen.text("--out-dir", "Corpus directory", true);
  gen.integer("--count", "Number of image pairs (default 32)")->check(CLI::PositiveNumber);
  gen.integer("--size", "Square image side in pixels (default 64)")->check(CLI::Range(8, 4096));
  gen.seed("--seed", "Corpus seed (default 42)");
  gen.real("--cast", "Cast strength in [0, 0.5] (default 0)")->check(CLI::Range(0.0, 0.5));
  gen.defaults({{"seed", 42}});

  auto& split = make("split", "Split an image into low/mid/high frequency bands");
  split.text("--in", "Input PNG", true);
  split.text("--out-dir", "Output directory for low.png, mid.png, high.png", true);
  add_radii(split);

  auto& train = make("train", "Train a model on a corpus and evaluate it");
  train.text("--model", "stub, band-low, band-mid, band-high, freq or cast", true)
      ->check(CLI::IsMember({"stub", "band-low", "band-mid", "band-high", "freq", "cast"}));
  add_training(train);

  auto& colorize = make("colorize", "Colorize an image with a trained stub or freq run");
  colorize.text("--from", "Run directory holding arch.json and snapshots", true);
  colorize.text("--in", "Input PNG (RGB input is converted to gray)", true);
  colorize.text("--out", "Output PNG", true);

  auto& correct = make("correct", "Correct a color cast with a trained cast run");
  correct.text("--from", "Run directory of a cast model", true);
  correct.text("--in", "Input RGB PNG", true);
  correct.text("--means", "Mean vector JSON file", true);
  correct.text("--out", "Output PNG", true);

  auto& eval = make("eval", "Evaluate a run (or the identity system) on a corpus");
  eval.text("--corpus", "Corpus directory", true);
  eval.text("--from", "Run directory; omitted means degraded images are scored as-is");
  eval.text("--out-dir", "Write manifest.json and report.txt here");
  add_radii(eval);

  auto& sweep = make("sweep-partitions", "Cast correction for every partition scheme");
  add_training(sweep);
  sweep.integer("--cast-steps", "Cast-stage steps (default --steps)")->check(CLI::NonNegativeNumber);

  auto& compare = make("compare-strategies", "Train and compare the three combination strategies");
  add_training(compare);
  compare.integer("--strategy", "Run only this strategy (1, 2 or 3)")->check(CLI::Range(1, 3));
  compare.boolean("--train-stubs", "Strategy 3 also updates the band stubs");
  compare.integer("--cast-steps", "Cast-stage steps (default --steps)")
      ->check(CLI::NonNegativeNumber);
  compare.integer("--joint-steps", "Strategy 3 steps (default --cast-steps)")
      ->check(CLI::NonNegativeNumber);

  ParseResult result;
  std::ostringstream out, err;
  try {
    app.parse(argc, argv);
    for (const auto& f : all) {
      if (!f->app()->parsed()) continue;
      Command cmd{f->app()->get_name(), f->collect()};
      check_radii(cmd.options);
      result.command = std::move(cmd);
    }
  } catch (const CLI::ParseError& e) {
    result.exit_code = app.exit(e, out, err);
    result.is_error = result.exit_code != 0;
    result.message = result.is_error ? err.str() : out.str();
  }
  return result;
}

}  // namespace bandtint::cli
