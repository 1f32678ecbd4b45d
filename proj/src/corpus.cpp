#include "bandtint/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "json.hpp"

#include "bandtint/random.hpp"

namespace bandtint {
namespace {

using Color = std::array<float, 3>;

Color random_color(Rng& rng) {
  return {static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform()),
          static_cast<float>(rng.uniform())};
}

void paint_gradient(PlanarImage& img, Rng& rng) {
  const Color a = random_color(rng), b = random_color(rng);
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double s = img.width();
  const double ca = std::cos(angle), sa = std::sin(angle);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double t = std::clamp(0.5 + ((x - s / 2) * ca + (y - s / 2) * sa) / s, 0.0, 1.0);
      for (int c = 0; c < 3; ++c)
        img.at(c, y, x) = static_cast<float>((1.0 - t) * a[c] + t * b[c]);
    }
}

void paint_shape(PlanarImage& img, Rng& rng) {
  const double s = img.width();
  const bool ellipse = rng.uniform() < 0.5;
  const double cx = rng.uniform(0.0, s), cy = rng.uniform(0.0, s);
  const double rx = rng.uniform(s / 10, s / 3), ry = rng.uniform(s / 10, s / 3);
  const Color color = random_color(rng);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
      const bool inside = ellipse ? dx * dx + dy * dy <= 1.0
                                  : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
      if (!inside) continue;
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = color[c];
    }
}

// Adds a colored plane wave whose spatial frequency (cycles per image) is
// drawn from [lo, hi] × size.
void add_texture(PlanarImage& img, Rng& rng, double lo, double hi) {
  const double s = img.width();
  const double freq = rng.uniform(lo, hi) * s;
  const double angle = rng.uniform(0.0, std::numbers::pi);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  Color amp{};
  for (auto& a : amp) a = static_cast<float>(rng.uniform(0.03, 0.12));
  const double fx = freq * std::cos(angle) / s, fy = freq * std::sin(angle) / s;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double v = std::sin(2.0 * std::numbers::pi * (fx * x + fy * y) + phase);
      for (int c = 0; c < 3; ++c) img.at(c, y, x) += static_cast<float>(amp[c] * v);
    }
}

}  // namespace

std::uint64_t corpus_image_seed(std::uint64_t corpus_seed, int index) {
  return mix_seed(corpus_seed, static_cast<std::uint64_t>(index));
}

std::vector<CorpusPair> gen_corpus(const CorpusSpec& spec) {
  if (spec.count <= 0) throw invalid_argument("corpus count must be positive");
  if (spec.size < 8) throw invalid_argument("corpus image size must be at least 8");
  if (!(spec.cast_strength >= 0.0 && spec.cast_strength <= 0.5))
    throw invalid_argument("cast strength must lie in [0, 0.5]");
  std::vector<CorpusPair> pairs;
  pairs.reserve(static_cast<std::size_t>(spec.count));
  for (int i = 0; i < spec.count; ++i) {
    Rng rng(corpus_image_seed(spec.seed, i));
    CorpusPair pair;
    for (auto& o : pair.offset)
      o = static_cast<float>(rng.uniform(-spec.cast_strength, spec.cast_strength));

    PlanarImage img(3, spec.size, spec.size);
    paint_gradient(img, rng);
    const int shapes = 3 + static_cast<int>(rng.index(4));
    for (int k = 0; k < shapes; ++k) paint_shape(img, rng);
    add_texture(img, rng, 0.15, 0.30);
    add_texture(img, rng, 0.38, 0.47);
    pair.target = clamp01(img);

    pair.degraded = pair.target;
    const std::size_t n = pair.degraded.plane_size();
    for (int c = 0; c < 3; ++c)
      for (std::size_t k = 0; k < n; ++k) {
        float& v = pair.degraded.planes()[c * n + k];
        v = std::clamp(v + pair.offset[c], 0.0f, 1.0f);
      }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

void write_corpus(const std::filesystem::path& dir, const CorpusSpec& spec,
                  const std::vector<CorpusPair>& pairs) {
  std::filesystem::create_directories(dir);
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto stem = std::to_string(i);
    save_image(pairs[i].target, dir / (stem + "_target.png"));
    save_image(pairs[i].degraded, dir / (stem + "_cast.png"));
    files.push_back({{"target", stem + "_target.png"},
                     {"cast", stem + "_cast.png"},
                     {"offset", pairs[i].offset}});
  }
  nlohmann::json manifest = {
      {"format", "bandtint-corpus-1"},
      {"spec",
       {{"count", spec.count},
        {"size", spec.size},
        {"seed", spec.seed},
        {"cast_strength", spec.cast_strength}}},
      {"files", files},
  };
  const auto path = dir / "manifest.json";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot write " + path.string());
  out << manifest.dump(2) << '\n';
}

LoadedCorpus read_corpus(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw io_error("cannot open corpus manifest " + path.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
    LoadedCorpus corpus;
    const auto& s = manifest.at("spec");
    corpus.spec.count = s.at("count").get<int>();
    corpus.spec.size = s.at("size").get<int>();
    corpus.spec.seed = s.at("seed").get<std::uint64_t>();
    corpus.spec.cast_strength = s.at("cast_strength").get<double>();
    for (const auto& f : manifest.at("files")) {
      CorpusPair pair;
      pair.target = load_image(dir / f.at("target").get<std::string>());
      pair.degraded = load_image(dir / f.at("cast").get<std::string>());
      pair.offset = f.at("offset").get<std::array<float, 3>>();
      if (pair.target.channels() != 3 || pair.degraded.channels() != 3)
        throw format_error("corpus images must be RGB in " + dir.string());
      corpus.pairs.push_back(std::move(pair));
    }
    if (corpus.pairs.empty()) throw format_error("corpus " + dir.string() + " is empty");
    return corpus;
  } catch (const nlohmann::json::exception& e) {
    throw format_error("malformed corpus manifest " + path.string() + ": " + e.what());
  }
}

}  // namespace bandtint
