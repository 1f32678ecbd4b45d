#include "bandtint/regions.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace bandtint {
namespace {

// Splits `extent` into `parts` cells; the remainder goes to the trailing cells.
std::vector<std::pair<int, int>> split_extent(int extent, int parts) {
  std::vector<std::pair<int, int>> cells;
  const int base = extent / parts, extra = extent % parts;
  int start = 0;
  for (int i = 0; i < parts; ++i) {
    const int len = base + (i >= parts - extra ? 1 : 0);
    cells.emplace_back(start, len);
    start += len;
  }
  return cells;
}

}  // namespace

SchemeKind SchemeKind::parse(const std::string& text) {
  if (text == "five") return five();
  if (text.size() > 4 && text.compare(0, 4, "grid") == 0) {
    const auto digits = text.substr(4);
    if (digits.find_first_not_of("0123456789") == std::string::npos && digits.size() <= 3) {
      const int k = std::stoi(digits);
      if (k >= 0 && k <= 4) return grid(k);
      throw invalid_argument("partition scheme '" + text + "': grid exponent out of range 0..4");
    }
  }
  throw invalid_argument("unknown partition scheme '" + text +
                         "' (expected grid0..grid4 or five)");
}

std::string SchemeKind::name() const {
  return type == Type::kFive ? "five" : "grid" + std::to_string(grid_exponent);
}

int region_count(SchemeKind kind) {
  if (kind.type == SchemeKind::Type::kFive) return 5;
  if (kind.grid_exponent < 0 || kind.grid_exponent > 4)
    throw invalid_argument("grid exponent out of range 0..4");
  return 1 << (2 * kind.grid_exponent);
}

PartitionScheme build_partition(SchemeKind kind, int height, int width) {
  PartitionScheme scheme{kind, height, width, {}};
  if (kind.type == SchemeKind::Type::kGrid) {
    const int k = kind.grid_exponent;
    if (k < 0 || k > 4) throw invalid_argument("grid exponent out of range 0..4");
    const int cells = 1 << k;
    if (height < cells || width < cells)
      throw invalid_argument("image " + std::to_string(height) + "x" + std::to_string(width) +
                             " too small for " + kind.name());
    const auto rows = split_extent(height, cells);
    const auto cols = split_extent(width, cells);
    for (const auto& [y0, h] : rows)
      for (const auto& [x0, w] : cols) scheme.regions.push_back({x0, y0, w, h});
    return scheme;
  }
  if (height < 2 || width < 2)
    throw invalid_argument("image " + std::to_string(height) + "x" + std::to_string(width) +
                           " too small for five-region scheme");
  const int ph = height / 2, pw = width / 2;
  scheme.regions = {
      {0, 0, pw, ph},
      {width - pw, 0, pw, ph},
      {0, height - ph, pw, ph},
      {width - pw, height - ph, pw, ph},
      {(width - pw) / 2, (height - ph) / 2, pw, ph},
  };
  return scheme;
}

MeanVector extract_means(const PlanarImage& img, const PartitionScheme& scheme) {
  if (img.channels() != 3) throw invalid_argument("extract_means needs an RGB image");
  if (img.band_domain()) throw invalid_argument("extract_means on a band-domain image");
  if (img.height() != scheme.height || img.width() != scheme.width)
    throw shape_error("partition built for " + std::to_string(scheme.height) + "x" +
                      std::to_string(scheme.width) + ", image is " +
                      std::to_string(img.height()) + "x" + std::to_string(img.width()));
  MeanVector out{{}, scheme.kind};
  out.values.reserve(scheme.regions.size() * 3);
  for (const auto& r : scheme.regions) {
    const double area = static_cast<double>(r.w) * r.h;
    for (int c = 0; c < 3; ++c) {
      double acc = 0.0;
      for (int y = r.y0; y < r.y0 + r.h; ++y)
        for (int x = r.x0; x < r.x0 + r.w; ++x) acc += img.at(c, y, x);
      out.values.push_back(static_cast<float>(acc / area));
    }
  }
  return out;
}

std::string means_to_json(const MeanVector& means) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < means.regions(); ++r)
    rows.push_back({means.values[3 * r], means.values[3 * r + 1], means.values[3 * r + 2]});
  return nlohmann::json{{"scheme", means.scheme.name()}, {"means", rows}}.dump();
}

MeanVector means_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    MeanVector out;
    out.scheme = SchemeKind::parse(doc.at("scheme").get<std::string>());
    for (const auto& row : doc.at("means")) {
      const auto rgb = row.get<std::vector<float>>();
      if (rgb.size() != 3) throw format_error("each mean entry must be [r,g,b]");
      out.values.insert(out.values.end(), rgb.begin(), rgb.end());
    }
    const auto expected = static_cast<std::size_t>(region_count(out.scheme));
    if (out.regions() != expected)
      throw format_error("scheme " + out.scheme.name() + " needs " + std::to_string(expected) +
                         " mean entries, got " + std::to_string(out.regions()));
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw format_error(std::string("malformed means JSON: ") + e.what());
  }
}

MeanVector read_means_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open means file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return means_from_json(ss.str());
  } catch (const Error& e) {
    throw format_error(path.string() + ": " + e.what());
  }
}

}  // namespace bandtint
