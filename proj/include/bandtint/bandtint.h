#ifndef BANDTINT_BANDTINT_H
#define BANDTINT_BANDTINT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(BANDTINT_BUILDING)
#    define BT_API __declspec(dllexport)
#  else
#    define BT_API __declspec(dllimport)
#  endif
#else
#  define BT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define BT_API_VERSION 1

typedef enum bt_status {
  BT_OK = 0,
  BT_ERR_INVALID_ARGUMENT = 1,
  BT_ERR_SHAPE = 2,
  BT_ERR_IO = 3,
  BT_ERR_FORMAT = 4,
  BT_ERR_NUMERIC = 5,
  BT_ERR_STATE = 6,
  BT_ERR_INTERNAL = 7
} bt_status;

typedef struct bt_image bt_image;
typedef struct bt_system bt_system;

BT_API int bt_api_version(void);
BT_API const char* bt_status_string(bt_status status);
/* Message of the last failed call on this thread; empty after a success. */
BT_API const char* bt_last_error(void);
/* Frees strings returned through char** out-parameters. */
BT_API void bt_string_free(char* s);

/* Images: channel-planar floats, channels 1 or 3. NULL planes gives a zero image. */
BT_API bt_status bt_image_create(int channels, int height, int width, const float* planes,
                                 bt_image** out);
BT_API bt_status bt_image_load(const char* path, bt_image** out);
BT_API bt_status bt_image_save(const bt_image* img, const char* path);
BT_API void bt_image_free(bt_image* img);
BT_API int bt_image_channels(const bt_image* img);
BT_API int bt_image_height(const bt_image* img);
BT_API int bt_image_width(const bt_image* img);
BT_API int bt_image_band_domain(const bt_image* img);
/* channels*height*width values, valid until the image is freed. */
BT_API const float* bt_image_data(const bt_image* img);
BT_API bt_status bt_image_to_gray(const bt_image* img, bt_image** out);
/* v*0.5+0.5 and its inverse (the inverse marks the result band_domain). */
BT_API bt_status bt_image_display_map(const bt_image* img, bt_image** out);
BT_API bt_status bt_image_display_unmap(const bt_image* img, bt_image** out);

/* Frequency bands. Radii <= 0 select the defaults scaled to the image size. */
BT_API bt_status bt_scaled_radii(int size, double* r_low, double* r_mid);
BT_API bt_status bt_split_bands(const bt_image* img, double r_low, double r_mid, bt_image** low,
                                bt_image** mid, bt_image** high);
BT_API bt_status bt_recombine(const bt_image* low, const bt_image* mid, const bt_image* high,
                              int clamp, bt_image** out);

/* Region means. scheme is "grid0".."grid4" or "five". */
BT_API bt_status bt_region_count(const char* scheme, int* count);
BT_API bt_status bt_extract_means(const bt_image* img, const char* scheme, char** json_out);

/* Metrics. Band PSNR fields are present when r_mid > r_low > 0. */
BT_API bt_status bt_psnr(const bt_image* pred, const bt_image* target, double* out);
BT_API bt_status bt_metrics_json(const bt_image* pred, const bt_image* target, double r_low,
                                 double r_mid, char** json_out);

BT_API bt_status bt_corpus_generate(const char* dir, int count, int size, uint64_t seed,
                                    double cast_strength);

/* Batch commands: gen-corpus, split, train, eval, sweep-partitions,
   compare-strategies. options_json is an object keyed by flag names with
   underscores. text_out and report_out may be NULL. */
BT_API bt_status bt_run_job(const char* command, const char* options_json, char** text_out,
                            char** report_out);

/* Trained systems restored from a run directory. */
BT_API bt_status bt_system_open(const char* run_dir, bt_system** out);
BT_API void bt_system_free(bt_system* sys);
BT_API const char* bt_system_kind(const bt_system* sys);
BT_API bt_status bt_system_colorize(const bt_system* sys, const bt_image* img, bt_image** out);
/* means_json: {"scheme": ..., "means": [[r,g,b], ...]} */
BT_API bt_status bt_system_correct(const bt_system* sys, const bt_image* img,
                                   const char* means_json, bt_image** out);

#ifdef __cplusplus
}
#endif

#endif
