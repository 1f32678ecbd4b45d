#include "bandtint/bandtint.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "bandtint/jobs.hpp"
#include "bandtint/objectives.hpp"
#include "bandtint/regions.hpp"
#include "bandtint/spectral.hpp"

struct bt_image {
  bandtint::PlanarImage img;
};

struct bt_system {
  bandtint::System sys;
};

namespace {

thread_local std::string g_last_error;

bt_status to_status(bandtint::ErrorCode code) {
  switch (code) {
    case bandtint::ErrorCode::kInvalidArgument: return BT_ERR_INVALID_ARGUMENT;
    case bandtint::ErrorCode::kShape: return BT_ERR_SHAPE;
    case bandtint::ErrorCode::kIo: return BT_ERR_IO;
    case bandtint::ErrorCode::kFormat: return BT_ERR_FORMAT;
    case bandtint::ErrorCode::kNumeric: return BT_ERR_NUMERIC;
    case bandtint::ErrorCode::kState: return BT_ERR_STATE;
  }
  return BT_ERR_INTERNAL;
}

template <class Fn>
bt_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return BT_OK;
  } catch (const bandtint::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return BT_ERR_INTERNAL;
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw bandtint::invalid_argument(std::string(what) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

bt_image* wrap(bandtint::PlanarImage img) { return new bt_image{std::move(img)}; }

bandtint::BandSpec spec_for(const bandtint::PlanarImage& img, double r_low, double r_mid) {
  auto spec = bandtint::scaled_band_spec(std::min(img.height(), img.width()));
  if (r_low > 0) spec.r_low = r_low;
  if (r_mid > 0) spec.r_mid = r_mid;
  spec.validate();
  return spec;
}

}  // namespace

extern "C" {

int bt_api_version(void) { return BT_API_VERSION; }

const char* bt_status_string(bt_status status) {
  switch (status) {
    case BT_OK: return "ok";
    case BT_ERR_INVALID_ARGUMENT: return "invalid argument";
    case BT_ERR_SHAPE: return "shape mismatch";
    case BT_ERR_IO: return "i/o error";
    case BT_ERR_FORMAT: return "format error";
    case BT_ERR_NUMERIC: return "numeric error";
    case BT_ERR_STATE: return "invalid state";
    case BT_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* bt_last_error(void) { return g_last_error.c_str(); }

void bt_string_free(char* s) { std::free(s); }

bt_status bt_image_create(int channels, int height, int width, const float* planes,
                          bt_image** out) {
  return guarded([&] {
    require(out, "out");
    bandtint::PlanarImage img(channels, height, width);
    if (planes) std::memcpy(img.planes().data(), planes, img.planes().size() * sizeof(float));
    *out = wrap(std::move(img));
  });
}

bt_status bt_image_load(const char* path, bt_image** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = wrap(bandtint::load_image(path));
  });
}

bt_status bt_image_save(const bt_image* img, const char* path) {
  return guarded([&] {
    require(img, "img");
    require(path, "path");
    bandtint::save_image(img->img, path);
  });
}

void bt_image_free(bt_image* img) { delete img; }

int bt_image_channels(const bt_image* img) { return img ? img->img.channels() : 0; }
int bt_image_height(const bt_image* img) { return img ? img->img.height() : 0; }
int bt_image_width(const bt_image* img) { return img ? img->img.width() : 0; }
int bt_image_band_domain(const bt_image* img) { return img && img->img.band_domain() ? 1 : 0; }
const float* bt_image_data(const bt_image* img) { return img ? img->img.planes().data() : nullptr; }

bt_status bt_image_to_gray(const bt_image* img, bt_image** out) {
  return guarded([&] {
    require(img, "img");
    require(out, "out");
    *out = wrap(bandtint::to_gray(img->img));
  });
}

bt_status bt_image_display_map(const bt_image* img, bt_image** out) {
  return guarded([&] {
    require(img, "img");
    require(out, "out");
    *out = wrap(bandtint::display_map(img->img));
  });
}

bt_status bt_image_display_unmap(const bt_image* img, bt_image** out) {
  return guarded([&] {
    require(img, "img");
    require(out, "out");
    *out = wrap(bandtint::display_unmap(img->img));
  });
}

bt_status bt_scaled_radii(int size, double* r_low, double* r_mid) {
  return guarded([&] {
    require(r_low, "r_low");
    require(r_mid, "r_mid");
    if (size < 2) throw bandtint::invalid_argument("size must be at least 2");
    const auto spec = bandtint::scaled_band_spec(size);
    *r_low = spec.r_low;
    *r_mid = spec.r_mid;
  });
}

bt_status bt_split_bands(const bt_image* img, double r_low, double r_mid, bt_image** low,
                         bt_image** mid, bt_image** high) {
  return guarded([&] {
    require(img, "img");
    require(low, "low");
    require(mid, "mid");
    require(high, "high");
    auto bands = bandtint::split_bands(img->img, spec_for(img->img, r_low, r_mid));
    *low = wrap(std::move(bands.low));
    *mid = wrap(std::move(bands.mid));
    *high = wrap(std::move(bands.high));
  });
}

bt_status bt_recombine(const bt_image* low, const bt_image* mid, const bt_image* high, int clamp,
                       bt_image** out) {
  return guarded([&] {
    require(low, "low");
    require(mid, "mid");
    require(high, "high");
    require(out, "out");
    *out = wrap(bandtint::recombine(low->img, mid->img, high->img, clamp != 0));
  });
}

bt_status bt_region_count(const char* scheme, int* count) {
  return guarded([&] {
    require(scheme, "scheme");
    require(count, "count");
    *count = bandtint::region_count(bandtint::SchemeKind::parse(scheme));
  });
}

bt_status bt_extract_means(const bt_image* img, const char* scheme, char** json_out) {
  return guarded([&] {
    require(img, "img");
    require(scheme, "scheme");
    require(json_out, "json_out");
    const auto kind = bandtint::SchemeKind::parse(scheme);
    const auto means = bandtint::extract_means(
        img->img, bandtint::build_partition(kind, img->img.height(), img->img.width()));
    *json_out = dup_string(bandtint::means_to_json(means));
  });
}

bt_status bt_psnr(const bt_image* pred, const bt_image* target, double* out) {
  return guarded([&] {
    require(pred, "pred");
    require(target, "target");
    require(out, "out");
    *out = bandtint::psnr(pred->img, target->img);
  });
}

bt_status bt_metrics_json(const bt_image* pred, const bt_image* target, double r_low,
                          double r_mid, char** json_out) {
  return guarded([&] {
    require(pred, "pred");
    require(target, "target");
    require(json_out, "json_out");
    const bool bands = r_low > 0 && r_mid > r_low;
    const auto report =
        bands ? bandtint::band_report(pred->img, target->img, bandtint::BandSpec{r_low, r_mid})
              : bandtint::channel_report(pred->img, target->img);
    *json_out = dup_string(bandtint::report_json(report).dump());
  });
}

bt_status bt_corpus_generate(const char* dir, int count, int size, uint64_t seed,
                             double cast_strength) {
  return guarded([&] {
    require(dir, "dir");
    bandtint::CorpusSpec spec{count, size, seed, cast_strength};
    const auto pairs = bandtint::gen_corpus(spec);
    std::filesystem::create_directories(dir);
    bandtint::write_corpus(dir, spec, pairs);
  });
}

bt_status bt_run_job(const char* command, const char* options_json, char** text_out,
                     char** report_out) {
  return guarded([&] {
    require(command, "command");
    nlohmann::json options = nlohmann::json::object();
    if (options_json) {
      try {
        options = nlohmann::json::parse(options_json);
      } catch (const nlohmann::json::exception& e) {
        throw bandtint::format_error(std::string("malformed options JSON: ") + e.what());
      }
    }
    const auto result = bandtint::run_job(command, options);
    char* text = text_out ? dup_string(result.text) : nullptr;
    char* report = nullptr;
    if (report_out) {
      try {
        report = dup_string(result.report.dump(2));
      } catch (...) {
        std::free(text);
        throw;
      }
    }
    if (text_out) *text_out = text;
    if (report_out) *report_out = report;
  });
}

bt_status bt_system_open(const char* run_dir, bt_system** out) {
  return guarded([&] {
    require(run_dir, "run_dir");
    require(out, "out");
    *out = new bt_system{bandtint::System::open(run_dir)};
  });
}

void bt_system_free(bt_system* sys) { delete sys; }

const char* bt_system_kind(const bt_system* sys) { return sys ? sys->sys.kind().c_str() : ""; }

bt_status bt_system_colorize(const bt_system* sys, const bt_image* img, bt_image** out) {
  return guarded([&] {
    require(sys, "sys");
    require(img, "img");
    require(out, "out");
    *out = wrap(sys->sys.colorize(img->img));
  });
}

bt_status bt_system_correct(const bt_system* sys, const bt_image* img, const char* means_json,
                            bt_image** out) {
  return guarded([&] {
    require(sys, "sys");
    require(img, "img");
    require(means_json, "means_json");
    require(out, "out");
    *out = wrap(sys->sys.correct(img->img, bandtint::means_from_json(means_json)));
  });
}

}  // extern "C"
