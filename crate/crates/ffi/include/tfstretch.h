#ifndef TFSTRETCH_H
#define TFSTRETCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. `Ok` is zero; everything else is a failure.
 */
typedef enum TfsStatus {
  TFS_STATUS_OK = 0,
  TFS_STATUS_NULL_POINTER = 1,
  TFS_STATUS_INVALID_UTF8 = 2,
  TFS_STATUS_UNSUPPORTED_FORMAT = 3,
  TFS_STATUS_CORRUPT_FILE = 4,
  TFS_STATUS_IO = 5,
  TFS_STATUS_INVALID_SIGNAL = 6,
  TFS_STATUS_INVALID_LENGTH = 7,
  TFS_STATUS_SHAPE_MISMATCH = 8,
  TFS_STATUS_NOT_A_FRAME = 9,
  TFS_STATUS_INVALID_RATE = 10,
  TFS_STATUS_INFEASIBLE_RATE = 11,
  TFS_STATUS_INVALID_CONFIG = 12,
  TFS_STATUS_INTERNAL = 13,
  TFS_STATUS_PANIC = 14,
} TfsStatus;

/**
 * Opaque mono signal handle.
 */
typedef struct TfsSignal TfsSignal;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies `len` samples into a new signal.
 *
 * # Safety
 * `samples` must point to `len` readable doubles; `out` must be writable.
 */
enum TfsStatus tfs_signal_new(const double *samples,
                              size_t len,
                              uint32_t sample_rate,
                              struct TfsSignal **out);

/**
 * Reads a mono WAV file.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
enum TfsStatus tfs_signal_read_wav(const char *path, struct TfsSignal **out);

/**
 * Writes `signal` as a 32-bit float WAV file.
 *
 * # Safety
 * `signal` must be a live handle and `path` a nul-terminated string.
 */
enum TfsStatus tfs_signal_write_wav(const struct TfsSignal *signal, const char *path);

/**
 * Number of samples, or 0 for a null handle.
 *
 * # Safety
 * `signal` must be null or a live handle.
 */
size_t tfs_signal_len(const struct TfsSignal *signal);

/**
 * Sample rate in Hz, or 0 for a null handle.
 *
 * # Safety
 * `signal` must be null or a live handle.
 */
uint32_t tfs_signal_sample_rate(const struct TfsSignal *signal);

/**
 * Borrowed pointer to the samples, valid until the handle is freed. Null for
 * a null handle.
 *
 * # Safety
 * `signal` must be null or a live handle.
 */
const double *tfs_signal_data(const struct TfsSignal *signal);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `signal` must be null or a handle not yet freed.
 */
void tfs_signal_free(struct TfsSignal *signal);

/**
 * Stretches with the uniform phase vocoder. `hop` and `channels` of zero
 * select the defaults for the signal's sample rate.
 *
 * # Safety
 * `signal` must be a live handle; `out` must be writable.
 */
enum TfsStatus tfs_stretch_pv(const struct TfsSignal *signal,
                              double rate,
                              size_t hop,
                              size_t channels,
                              struct TfsSignal **out);

/**
 * Stretches with the adaptive vocoder using the defaults for the signal's
 * sample rate.
 *
 * # Safety
 * `signal` must be a live handle; `out` must be writable.
 */
enum TfsStatus tfs_stretch_nspv(const struct TfsSignal *signal,
                                double rate,
                                struct TfsSignal **out);

/**
 * Message for the last failure on this thread, or null if the last fallible call
 * succeeded. Valid until the next `tfs_` call on the same thread.
 */
const char *tfs_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *tfs_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TFSTRETCH_H */
