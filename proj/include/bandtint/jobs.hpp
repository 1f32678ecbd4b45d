#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include "json.hpp"

#include "bandtint/pipeline.hpp"

namespace bandtint {

/// Result of a batch command: a human-readable table and the JSON report
/// that was also written to disk.
struct JobOutput {
  std::string text;
  nlohmann::json report;
};

/// Runs one of gen-corpus, split, train, eval, sweep-partitions or
/// compare-strategies. Option keys follow the command-line flag names with
/// dashes replaced by underscores ("out_dir", "r_low", ...). Every option is
/// validated before anything touches the filesystem.
JobOutput run_job(const std::string& command, const nlohmann::json& options);

/// A trained system restored from a run directory (arch.json + snapshots).
class System {
 public:
  static System open(const std::filesystem::path& run_dir);

  /// "stub", "freq", "cast" or "band-low" / "band-mid" / "band-high".
  const std::string& kind() const { return kind_; }
  bool can_colorize() const;
  bool can_correct() const { return cast_.has_value(); }
  std::optional<SchemeKind> cast_scheme() const {
    return cast_ ? std::optional<SchemeKind>(cast_->scheme) : std::nullopt;
  }

  PlanarImage colorize(const PlanarImage& img) const;
  PlanarImage correct(const PlanarImage& img, const MeanVector& means) const;

 private:
  System() = default;

  std::string kind_;
  std::optional<ColorizerStub<float>> stub_;
  std::optional<FreqPipeline> freq_;
  std::optional<CastStage> cast_;
  std::optional<Band> band_;
  BandSpec spec_;
};

}  // namespace bandtint
