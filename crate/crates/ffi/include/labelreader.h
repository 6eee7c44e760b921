#ifndef LABELREADER_H
#define LABELREADER_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum LrStatus {
  LR_STATUS_OK = 0,
  LR_STATUS_NULL_ARGUMENT = 1,
  LR_STATUS_INVALID_UTF8 = 2,
  LR_STATUS_IO = 3,
  LR_STATUS_PARSE = 4,
  LR_STATUS_PARAMETER = 5,
  LR_STATUS_DIMENSION = 6,
  LR_STATUS_NO_OBJECT = 7,
  LR_STATUS_DEGENERATE = 8,
  LR_STATUS_OCR = 9,
  LR_STATUS_TTS = 10,
  LR_STATUS_UNKNOWN_IMAGE = 11,
  LR_STATUS_PANIC = 12,
} LrStatus;

/**
 * Pipeline settings.
 */
typedef struct LrConfig LrConfig;

/**
 * Trained cascade classifier.
 */
typedef struct LrModel LrModel;

/**
 * Axis-aligned box in pixels.
 */
typedef struct LrRect {
  uint32_t x;
  uint32_t y;
  uint32_t w;
  uint32_t h;
} LrRect;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *lr_version(void);

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call into the library on the same thread.
 */
const char *lr_last_error_message(void);

/**
 * Default settings.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum LrStatus lr_config_default(struct LrConfig **out);

/**
 * Settings read from a `key = value` file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid for one write.
 */
enum LrStatus lr_config_load(const char *path, struct LrConfig **out);

/**
 * # Safety
 * `cfg` must come from this library and not be freed twice. Null is ignored.
 */
void lr_config_free(struct LrConfig *cfg);

/**
 * Loads a cascade model file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid for one write.
 */
enum LrStatus lr_model_load(const char *path, struct LrModel **out);

/**
 * Feature vector length the model expects, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle from [`lr_model_load`].
 */
size_t lr_model_feature_len(const struct LrModel *model);

/**
 * # Safety
 * `model` must come from this library and not be freed twice. Null is ignored.
 */
void lr_model_free(struct LrModel *model);

/**
 * Text regions in an RGB image. On success `*out_rects` holds `*out_len`
 * boxes in reading order (null when there are none); release them with
 * [`lr_rects_free`].
 *
 * # Safety
 * `rgb` must point to `width*height*3` bytes; handles must be live;
 * `out_rects` and `out_len` must be valid for one write each.
 */
enum LrStatus lr_localize(const struct LrConfig *cfg,
                          const struct LrModel *model,
                          const uint8_t *rgb,
                          uint32_t width,
                          uint32_t height,
                          struct LrRect **out_rects,
                          size_t *out_len);

/**
 * # Safety
 * `rects`/`len` must be exactly what [`lr_localize`] returned. Null is ignored.
 */
void lr_rects_free(struct LrRect *rects, size_t len);

/**
 * Region of interest of a shaken object. `frames` holds `count` RGB frames
 * of `width*height*3` bytes each, back to back. Returns
 * [`LrStatus::NoObject`] when nothing moved persistently.
 *
 * # Safety
 * `frames` must point to `count*width*height*3` bytes; `out` valid for one write.
 */
enum LrStatus lr_roi(const struct LrConfig *cfg,
                     const uint8_t *frames,
                     size_t count,
                     uint32_t width,
                     uint32_t height,
                     struct LrRect *out);

/**
 * Otsu threshold of a 256-bin histogram. Fails with
 * [`LrStatus::Degenerate`] when all mass sits in one bin.
 *
 * # Safety
 * `histogram` must point to 256 values; `out` valid for one write.
 */
enum LrStatus lr_otsu_threshold(const uint64_t *histogram, uint8_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LABELREADER_H */
