#ifndef MARKOV_PRODUCT_H
#define MARKOV_PRODUCT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of a library call.
typedef enum MpkStatus {
  MPK_STATUS_OK = 0,
  MPK_STATUS_NULL_POINTER = 1,
  MPK_STATUS_INVALID_UTF8 = 2,
  MPK_STATUS_PARSE_ERROR = 3,
  MPK_STATUS_PANIC = 4,
  MPK_STATUS_DUPLICATE_LABEL = 10,
  MPK_STATUS_DIMENSION_MISMATCH = 11,
  MPK_STATUS_NOT_HERMITIAN = 12,
  MPK_STATUS_INTERSECTION_NOT_SINGLETON = 13,
  MPK_STATUS_GLUE_LABEL_NOT_SHARED = 14,
  MPK_STATUS_BASEPOINT_NOT_UNIT = 15,
  MPK_STATUS_BASEPOINT_NOT_POSITIVE = 16,
  MPK_STATUS_LABEL_NOT_FOUND = 17,
  MPK_STATUS_BASEPOINT_MISMATCH = 18,
  MPK_STATUS_LABEL_COLLISION = 19,
  MPK_STATUS_EMPTY_BATCH = 20,
  MPK_STATUS_INVALID_SAMPLE_COUNT = 21,
  MPK_STATUS_REAL_MODE_REQUIRES_REAL_KERNEL = 22,
  MPK_STATUS_NOT_A_TREE = 23,
  MPK_STATUS_INVALID_TOLERANCE = 24,
  MPK_STATUS_NUMERICAL_FAILURE = 30,
  MPK_STATUS_NOT_PSD = 31,
  MPK_STATUS_FACTORIZATION_FAILURE = 32,
  MPK_STATUS_INDEX_OUT_OF_RANGE = 40,
} MpkStatus;

// Outcome of a positive semidefiniteness check.
typedef struct MpkCertificate MpkCertificate;

// Kernel on a finite labeled set.
typedef struct MpkKernel MpkKernel;

// Summary of an empirical second-moment verification.
typedef struct MpkVerifySummary {
  bool passed;
  bool certified;
  double min_eigenvalue;
  double max_deviation;
  double max_variance;
  double mc_tol;
  uint64_t samples;
  uint64_t seed;
} MpkVerifySummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread, or null if none.
// The pointer stays valid until the next failing call on the same thread.
const char *mpk_last_error(void);

// Stable name of a status code, e.g. `"BasepointNotUnit"`. Never null.
const char *mpk_status_name(enum MpkStatus status);

// Builds a kernel from `dim` labels and row-major real and imaginary parts.
//
// # Safety
// `labels` must point to `dim` NUL-terminated strings; `re` and `im` must
// each point to `dim * dim` doubles. `out` must be writable. On success the
// caller owns `*out` and releases it with [`mpk_kernel_free`].
enum MpkStatus mpk_kernel_new(const char *const *labels,
                              const double *re,
                              const double *im,
                              size_t dim,
                              struct MpkKernel **out);

// Parses a kernel JSON document.
//
// # Safety
// `json` must be a NUL-terminated string and `out` writable. The caller
// owns `*out` on success.
enum MpkStatus mpk_kernel_from_json(const char *json, struct MpkKernel **out);

// Serializes a kernel to its JSON document.
//
// # Safety
// `kernel` must be a live handle and `out` writable. The caller releases
// `*out` with [`mpk_string_free`].
enum MpkStatus mpk_kernel_to_json(const struct MpkKernel *kernel, char **out);

// Releases a kernel. Null is ignored.
//
// # Safety
// `kernel` must be null or a handle from this library not yet freed.
void mpk_kernel_free(struct MpkKernel *kernel);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void mpk_string_free(char *s);

// Number of labels, or 0 for a null handle.
//
// # Safety
// `kernel` must be null or a live handle.
size_t mpk_kernel_dim(const struct MpkKernel *kernel);

// Label at position `index`, or null when out of range. The string is
// owned by the kernel.
//
// # Safety
// `kernel` must be null or a live handle.
const char *mpk_kernel_label(const struct MpkKernel *kernel, size_t index);

// Copies the row-major entries into `re` and `im`, each `dim * dim` long.
//
// # Safety
// `kernel` must be a live handle; `re` and `im` must each have room for
// `len` doubles.
enum MpkStatus mpk_kernel_entries(const struct MpkKernel *kernel,
                                  double *re,
                                  double *im,
                                  size_t len);

// Entry at `(row, col)` by label.
//
// # Safety
// `kernel` must be a live handle, `row` and `col` NUL-terminated strings,
// `re` and `im` writable.
enum MpkStatus mpk_kernel_get(const struct MpkKernel *kernel,
                              const char *row,
                              const char *col,
                              double *re,
                              double *im);

// Markov product of two kernels sharing exactly the label `glue`.
//
// # Safety
// `k1` and `k2` must be live handles, `glue` a NUL-terminated string and
// `out` writable. The caller owns `*out` on success.
enum MpkStatus mpk_markov_product(const struct MpkKernel *k1,
                                  const struct MpkKernel *k2,
                                  const char *glue,
                                  double basepoint_tol,
                                  struct MpkKernel **out);

// Folds a gluing tree given as a JSON document.
//
// # Safety
// `json` must be a NUL-terminated string and `out` writable. The caller
// owns `*out` on success.
enum MpkStatus mpk_glue_tree_json(const char *json, double basepoint_tol, struct MpkKernel **out);

// Certifies positive semidefiniteness through the full spectrum.
//
// # Safety
// `kernel` must be a live handle and `out` writable. The caller releases
// `*out` with [`mpk_certificate_free`].
enum MpkStatus mpk_psd_check_eigen(const struct MpkKernel *kernel,
                                   double tol,
                                   struct MpkCertificate **out);

// Certifies positive semidefiniteness through the Schur complement at
// `basepoint`, whose diagonal entry must be 1.
//
// # Safety
// `kernel` must be a live handle, `basepoint` a NUL-terminated string and
// `out` writable. The caller releases `*out` with [`mpk_certificate_free`].
enum MpkStatus mpk_psd_check_schur(const struct MpkKernel *kernel,
                                   const char *basepoint,
                                   double tol,
                                   double basepoint_tol,
                                   struct MpkCertificate **out);

// Releases a certificate. Null is ignored.
//
// # Safety
// `cert` must be null or a handle from this library not yet freed.
void mpk_certificate_free(struct MpkCertificate *cert);

// Verdict of the certificate; false for a null handle.
//
// # Safety
// `cert` must be null or a live handle.
bool mpk_certificate_verdict(const struct MpkCertificate *cert);

// Smallest eigenvalue found; NaN for a null handle.
//
// # Safety
// `cert` must be null or a live handle.
double mpk_certificate_min_eigenvalue(const struct MpkCertificate *cert);

// Scale the tolerance is measured against; NaN for a null handle.
//
// # Safety
// `cert` must be null or a live handle.
double mpk_certificate_scale(const struct MpkCertificate *cert);

// Relative tolerance used; NaN for a null handle.
//
// # Safety
// `cert` must be null or a live handle.
double mpk_certificate_tolerance(const struct MpkCertificate *cert);

// Length of the witness vector, 0 when the verdict is true.
//
// # Safety
// `cert` must be null or a live handle.
size_t mpk_certificate_witness_len(const struct MpkCertificate *cert);

// Copies the witness into `re` and `im`, each of length `len`.
//
// # Safety
// `cert` must be a live handle; `re` and `im` must each have room for
// `len` doubles.
enum MpkStatus mpk_certificate_witness(const struct MpkCertificate *cert,
                                       double *re,
                                       double *im,
                                       size_t len);

// Glues Gaussian realizations of `k1` and `k2` at `glue`, draws `samples`
// rows from `seed` and compares the second moments with the product.
// A non-positive or NaN `mc_tol` selects the default five-sigma threshold.
//
// # Safety
// `k1` and `k2` must be live handles, `glue` a NUL-terminated string and
// `out` writable.
enum MpkStatus mpk_verify(const struct MpkKernel *k1,
                          const struct MpkKernel *k2,
                          const char *glue,
                          uint64_t samples,
                          uint64_t seed,
                          double mc_tol,
                          struct MpkVerifySummary *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MARKOV_PRODUCT_H */
