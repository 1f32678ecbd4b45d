#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "bandtint/image.hpp"

namespace bandtint {

struct CorpusSpec {
  int count = 32;
  int size = 64;
  std::uint64_t seed = 42;
  /// Per-channel cast offsets are drawn from [-cast_strength, +cast_strength].
  double cast_strength = 0.0;
};

struct CorpusPair {
  PlanarImage target;
  PlanarImage degraded;
  std::array<float, 3> offset{};
};

/// Seed of the generator that draws image `index`. Its first three uniform
/// draws are the R, G, B cast offsets; the image content follows.
std::uint64_t corpus_image_seed(std::uint64_t corpus_seed, int index);

std::vector<CorpusPair> gen_corpus(const CorpusSpec& spec);

/// Writes `<i>_target.png`, `<i>_cast.png` and manifest.json into `dir`.
void write_corpus(const std::filesystem::path& dir, const CorpusSpec& spec,
                  const std::vector<CorpusPair>& pairs);

struct LoadedCorpus {
  CorpusSpec spec;
  std::vector<CorpusPair> pairs;
};

LoadedCorpus read_corpus(const std::filesystem::path& dir);

}  // namespace bandtint
