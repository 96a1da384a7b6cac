#ifndef LABSEG_H
#define LABSEG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define LABSEG_DISTANCE_COSINE 0

#define LABSEG_DISTANCE_SQEUCLIDEAN 1

#define LABSEG_FEATURES_AB 0

#define LABSEG_FEATURES_LAB 1

#define LABSEG_MAGNITUDE_EXACT 0

#define LABSEG_MAGNITUDE_MANHATTAN 1

#define LABSEG_TARGET_FINAL_RENDER 0

#define LABSEG_TARGET_RIDGE_OVERLAY 1

typedef enum LabsegStatus {
  LABSEG_STATUS_OK = 0,
  LABSEG_STATUS_NULL_POINTER = 1,
  LABSEG_STATUS_INVALID_ARGUMENT = 2,
  LABSEG_STATUS_IO = 3,
  LABSEG_STATUS_PROCESSING = 4,
  LABSEG_STATUS_BUFFER_TOO_SMALL = 5,
  LABSEG_STATUS_PANIC = 6,
} LabsegStatus;

/**
 * Opaque pipeline configuration.
 */
typedef struct LabsegConfig LabsegConfig;

/**
 * Opaque 8-bit sRGB image.
 */
typedef struct LabsegImage LabsegImage;

/**
 * Opaque pipeline output.
 */
typedef struct LabsegResult LabsegResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread, or null. The pointer stays valid until
 * the next labseg call on the same thread.
 */
const char *labseg_last_error_message(void);

/**
 * Copies `len` bytes of packed RGB (`3 * width * height`) into a new image.
 *
 * # Safety
 * `rgb` must point to `len` readable bytes; `out` must be writable.
 */
enum LabsegStatus labseg_image_new(uintptr_t width,
                                   uintptr_t height,
                                   const uint8_t *rgb,
                                   uintptr_t len,
                                   struct LabsegImage **out);

/**
 * Reads a PNG or binary PPM file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum LabsegStatus labseg_image_read(const char *path, struct LabsegImage **out);

/**
 * # Safety
 * `image` must be null or a live handle.
 */
uintptr_t labseg_image_width(const struct LabsegImage *image);

/**
 * # Safety
 * `image` must be null or a live handle.
 */
uintptr_t labseg_image_height(const struct LabsegImage *image);

/**
 * # Safety
 * `image` must be null or a handle not yet freed.
 */
void labseg_image_free(struct LabsegImage *image);

/**
 * A configuration holding the defaults.
 */
struct LabsegConfig *labseg_config_new(void);

/**
 * # Safety
 * `config` must be null or a handle not yet freed.
 */
void labseg_config_free(struct LabsegConfig *config);

/**
 * # Safety
 * `config` must be a live handle.
 */
enum LabsegStatus labseg_config_set_k(struct LabsegConfig *config, uintptr_t k);

/**
 * # Safety
 * `config` must be a live handle.
 */
enum LabsegStatus labseg_config_set_seed(struct LabsegConfig *config, uint64_t seed);

/**
 * # Safety
 * `config` must be a live handle.
 */
enum LabsegStatus labseg_config_set_max_iter(struct LabsegConfig *config,
                                             uintptr_t max_iter,
                                             double tol);

/**
 * One of `LABSEG_DISTANCE_*`.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum LabsegStatus labseg_config_set_distance(struct LabsegConfig *config, uint32_t distance);

/**
 * One of `LABSEG_FEATURES_*`.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum LabsegStatus labseg_config_set_features(struct LabsegConfig *config, uint32_t features);

/**
 * One of `LABSEG_MAGNITUDE_*`.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum LabsegStatus labseg_config_set_magnitude(struct LabsegConfig *config, uint32_t magnitude);

/**
 * 4 or 8.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum LabsegStatus labseg_config_set_connectivity(struct LabsegConfig *config,
                                                 uint32_t connectivity);

/**
 * # Safety
 * `config` must be a live handle.
 */
enum LabsegStatus labseg_config_set_markers(struct LabsegConfig *config,
                                            uintptr_t fg_se_radius,
                                            uintptr_t min_marker_area);

/**
 * Peak value and comparison image (`LABSEG_TARGET_*`) for the metrics.
 *
 * # Safety
 * `config` must be a live handle.
 */
enum LabsegStatus labseg_config_set_metrics(struct LabsegConfig *config,
                                            double max_i,
                                            uint32_t target);

/**
 * Runs the full pipeline. A null `config` means defaults.
 *
 * # Safety
 * `image` must be a live handle, `config` null or live, `out` writable.
 */
enum LabsegStatus labseg_run(const struct LabsegImage *image,
                             const struct LabsegConfig *config,
                             struct LabsegResult **out);

/**
 * # Safety
 * `result` must be null or a handle not yet freed.
 */
void labseg_result_free(struct LabsegResult *result);

/**
 * Number of pixels; the length `labseg_result_labels` needs.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
uintptr_t labseg_result_pixel_count(const struct LabsegResult *result);

/**
 * Largest region label; 0 marks watershed lines.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
uint32_t labseg_result_region_count(const struct LabsegResult *result);

/**
 * Copies the row-major region labels into `out` (`len` >= pixel count).
 *
 * # Safety
 * `result` must be live; `out` must have room for `len` values.
 */
enum LabsegStatus labseg_result_labels(const struct LabsegResult *result,
                                       uint32_t *out,
                                       uintptr_t len);

/**
 * Copies the final region-mean render as packed RGB (`len` >= 3 * pixels).
 *
 * # Safety
 * `result` must be live; `out` must have room for `len` bytes.
 */
enum LabsegStatus labseg_result_final_rgb(const struct LabsegResult *result,
                                          uint8_t *out,
                                          uintptr_t len);

/**
 * Per-channel MSE and PSNR (dB; +inf for identical channels).
 *
 * # Safety
 * `result` must be live; `mse` and `psnr_db` must each hold 3 doubles.
 */
enum LabsegStatus labseg_result_metrics(const struct LabsegResult *result,
                                        double *mse,
                                        double *psnr_db);

/**
 * Writes the standard output files into `dir`, creating it if needed.
 *
 * # Safety
 * `result` must be live; `dir` must be a NUL-terminated string.
 */
enum LabsegStatus labseg_result_write(const struct LabsegResult *result, const char *dir);

/**
 * PSNR in dB for a single MSE value.
 *
 * # Safety
 * `out` must be writable.
 */
enum LabsegStatus labseg_psnr(double mse, double max_i, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LABSEG_H */
