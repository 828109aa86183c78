#ifndef NASEVAL_H
#define NASEVAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum NseStatus {
  NSE_STATUS_OK = 0,
  NSE_STATUS_NULL_POINTER = 1,
  NSE_STATUS_INVALID_ARGUMENT = 2,
  NSE_STATUS_SHAPE_MISMATCH = 3,
  NSE_STATUS_INSUFFICIENT_DATA = 4,
  NSE_STATUS_FORMAT = 5,
  NSE_STATUS_IO = 6,
  NSE_STATUS_PANIC = 7,
} NseStatus;

/**
 * Opaque mono audio clip.
 */
typedef struct NseClip NseClip;

/**
 * Opaque N×D embedding matrix.
 */
typedef struct NseEmbeddings NseEmbeddings;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *nse_last_error_message(void);

/**
 * Copies a row-major `rows × cols` matrix into a new handle.
 */
enum NseStatus nse_embeddings_new(const double *data,
                                  size_t rows,
                                  size_t cols,
                                  struct NseEmbeddings **out);

/**
 * Loads an AEMB or CSV embedding file.
 */
enum NseStatus nse_embeddings_read(const char *file, struct NseEmbeddings **out);

size_t nse_embeddings_rows(const struct NseEmbeddings *set);

size_t nse_embeddings_cols(const struct NseEmbeddings *set);

void nse_embeddings_free(struct NseEmbeddings *set);

/**
 * Fréchet audio distance between two embedding sets.
 */
enum NseStatus nse_fad(const struct NseEmbeddings *reference,
                       const struct NseEmbeddings *generated,
                       double *out);

/**
 * Unbiased kernel inception distance (whole-set).
 */
enum NseStatus nse_kid(const struct NseEmbeddings *reference,
                       const struct NseEmbeddings *generated,
                       double *out);

/**
 * Inception score of a row-major `rows × classes` probability matrix.
 */
enum NseStatus nse_inception_score(const double *probs, size_t rows, size_t classes, double *out);

/**
 * Two-sided Wilcoxon signed-rank test on `n` paired scores.
 */
enum NseStatus nse_wilcoxon(const double *x,
                            const double *y,
                            size_t n,
                            double *statistic,
                            double *p_value);

/**
 * Interval Krippendorff's α over a row-major `raters × units` matrix; NaN marks a missing score.
 */
enum NseStatus nse_krippendorff_alpha(const double *values,
                                      size_t raters,
                                      size_t units,
                                      double *out);

/**
 * Copies samples in [-1, 1] into a new clip.
 */
enum NseStatus nse_clip_new(const double *samples,
                            size_t len,
                            uint32_t sample_rate,
                            struct NseClip **out);

enum NseStatus nse_clip_read_wav(const char *file, struct NseClip **out);

/**
 * Writes the clip as 16-bit PCM.
 */
enum NseStatus nse_clip_write_wav16(const struct NseClip *clip, const char *file);

/**
 * Renders the listening-test anchor (1 kHz low-pass, 8-bit) of `clip`.
 */
enum NseStatus nse_clip_anchor(const struct NseClip *clip, struct NseClip **out);

size_t nse_clip_len(const struct NseClip *clip);

uint32_t nse_clip_sample_rate(const struct NseClip *clip);

/**
 * Borrowed view of the samples, valid until the clip is freed.
 */
const double *nse_clip_samples(const struct NseClip *clip);

void nse_clip_free(struct NseClip *clip);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NASEVAL_H */
