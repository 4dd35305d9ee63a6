#ifndef NAMF_H
#define NAMF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NamfStatus {
  NAMF_STATUS_OK = 0,
  NAMF_STATUS_NULL_POINTER = 1,
  NAMF_STATUS_INVALID_ARGUMENT = 2,
  NAMF_STATUS_IO = 3,
  NAMF_STATUS_FORMAT = 4,
  NAMF_STATUS_DIMENSION_MISMATCH = 5,
  NAMF_STATUS_PANIC = 6,
} NamfStatus;

/**
 * Opaque 8-bit grayscale image.
 */
typedef struct NamfImage NamfImage;

/**
 * Tunables of the two-stage filter. Obtain defaults from
 * `namf_params_default`.
 */
typedef struct NamfParams {
  double threshold;
  uint32_t w_max;
  uint32_t w_step;
  uint32_t patch_radius;
  uint32_t search_radius;
  double beta0;
  double beta1;
  double beta2;
  double kernel_a;
} NamfParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *namf_version(void);

/**
 * Message for the most recent failure on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *namf_last_error_message(void);

struct NamfParams namf_params_default(void);

/**
 * Copies `width * height` bytes from `data` into a new image.
 */
enum NamfStatus namf_image_new(uint32_t width,
                               uint32_t height,
                               const uint8_t *data,
                               struct NamfImage **out);

/**
 * Releases an image. NULL is ignored.
 */
void namf_image_free(struct NamfImage *img);

/**
 * Width in pixels, or 0 for NULL.
 */
uint32_t namf_image_width(const struct NamfImage *img);

uint32_t namf_image_height(const struct NamfImage *img);

/**
 * Row-major pixel buffer of `width * height` bytes, owned by the image.
 */
const uint8_t *namf_image_data(const struct NamfImage *img);

/**
 * Reads a binary PGM (P5, maxval 255) or 8-bit grayscale PNG.
 */
enum NamfStatus namf_image_load(const char *path, struct NamfImage **out);

/**
 * Writes PNG for a `.png` path, binary PGM otherwise.
 */
enum NamfStatus namf_image_save(const struct NamfImage *img, const char *path);

/**
 * Salt-and-pepper corruption. `truth_out`, when not NULL, receives
 * `width * height` bytes: 1 for each overwritten pixel, else 0.
 */
enum NamfStatus namf_inject(const struct NamfImage *img,
                            double density,
                            double salt_fraction,
                            uint64_t seed,
                            struct NamfImage **out,
                            uint8_t *truth_out);

/**
 * Two-stage restoration. `params` may be NULL for defaults; `mask_out`,
 * when not NULL, receives the detected-noise mask (1 = noisy).
 */
enum NamfStatus namf_denoise(const struct NamfImage *img,
                             const struct NamfParams *params,
                             struct NamfImage **out,
                             uint8_t *mask_out);

/**
 * 3x3 median filter over every pixel.
 */
enum NamfStatus namf_median_filter(const struct NamfImage *img, struct NamfImage **out);

/**
 * PSNR in dB; writes +infinity for identical images.
 */
enum NamfStatus namf_psnr(const struct NamfImage *a, const struct NamfImage *b, double *out);

/**
 * Mean SSIM over 11x11 Gaussian windows.
 */
enum NamfStatus namf_ssim(const struct NamfImage *a, const struct NamfImage *b, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NAMF_H */
