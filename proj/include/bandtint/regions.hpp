#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bandtint/image.hpp"

namespace bandtint {

struct Region {
  int x0 = 0;
  int y0 = 0;
  int w = 0;
  int h = 0;

  bool operator==(const Region&) const = default;
};

/// Grid(k) tiles the plane into 2^k × 2^k cells; FiveRegion places four
/// half-extent patches at the corners plus one centered patch of equal size.
struct SchemeKind {
  enum class Type { kGrid, kFive };
  Type type = Type::kFive;
  int grid_exponent = 0;

  static SchemeKind grid(int k) { return {Type::kGrid, k}; }
  static SchemeKind five() { return {Type::kFive, 0}; }

  /// "grid0".."grid4" or "five".
  static SchemeKind parse(const std::string& text);
  std::string name() const;
  bool operator==(const SchemeKind&) const = default;
};

struct PartitionScheme {
  SchemeKind kind;
  int height = 0;
  int width = 0;
  std::vector<Region> regions;
};

PartitionScheme build_partition(SchemeKind kind, int height, int width);

/// Region count a scheme yields (independent of image size).
int region_count(SchemeKind kind);

/// Per-region mean colors, region-major then R, G, B.
struct MeanVector {
  std::vector<float> values;
  SchemeKind scheme;

  std::size_t regions() const { return values.size() / 3; }
};

MeanVector extract_means(const PlanarImage& img, const PartitionScheme& scheme);

/// `{"scheme": "grid2" | "five", "means": [[r,g,b], ...]}`
std::string means_to_json(const MeanVector& means);
MeanVector means_from_json(const std::string& text);
MeanVector read_means_file(const std::filesystem::path& path);

}  // namespace bandtint
