#ifndef MATNORM_H
#define MATNORM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every `mn_*` call.
 */
typedef enum MnStatus {
  MN_STATUS_OK = 0,
  MN_STATUS_NULL_POINTER = 1,
  MN_STATUS_INVALID_ARGUMENT = 2,
  MN_STATUS_DOMAIN = 3,
  MN_STATUS_POLE = 4,
  MN_STATUS_INDEFINITE = 5,
  MN_STATUS_INTERNAL = 6,
  MN_STATUS_PANIC = 7,
} MnStatus;

/**
 * Opaque zonal coefficient table.
 */
typedef struct MnZonalTable MnZonalTable;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (always
 * NUL-terminated when `len > 0`) and returns the full message length
 * excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t mn_last_error_message(char *buf, size_t len);

/**
 * Builds the exact table of `C_kappa` for all `kappa |- k` in `m`
 * variables. Release with [`mn_zonal_table_free`].
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MnStatus mn_zonal_table_build(size_t k, size_t m, struct MnZonalTable **out);

/**
 * # Safety
 * `table` must be null or come from [`mn_zonal_table_build`], and must not
 * be used afterwards.
 */
void mn_zonal_table_free(struct MnZonalTable *table);

/**
 * Number of partitions (rows) in the table.
 *
 * # Safety
 * `table` must be a live table; `out` a valid pointer.
 */
enum MnStatus mn_zonal_table_rows(const struct MnZonalTable *table, size_t *out);

/**
 * `C_kappa` at a matrix with eigenvalues `eig[0..n_eig]`.
 *
 * # Safety
 * `parts` and `eig` must point to `n_parts` and `n_eig` readable values;
 * `out` must be a valid pointer.
 */
enum MnStatus mn_zonal_table_eval(const struct MnZonalTable *table,
                                  const size_t *parts,
                                  size_t n_parts,
                                  const double *eig,
                                  size_t n_eig,
                                  double *out);

/**
 * `C_kappa(I_m)`.
 *
 * # Safety
 * `parts` must point to `n_parts` readable values; `out` a valid pointer.
 */
enum MnStatus mn_zonal_unit(const size_t *parts, size_t n_parts, size_t m, double *out);

/**
 * One-argument `pFq(a; b; X)` for a symmetric `m x m` matrix `x`,
 * truncated at degree `trunc`. `tail` receives the absolute size of the
 * last degree layer.
 *
 * # Safety
 * Array arguments must point to the stated number of readable values;
 * `value` and `tail` must be valid pointers.
 */
enum MnStatus mn_pfq(const double *a,
                     size_t p,
                     const double *b,
                     size_t q,
                     const double *x,
                     size_t m,
                     size_t trunc,
                     double *value,
                     double *tail);

/**
 * Two-argument `pFq(a; b; X, Y)` for symmetric `m x m` matrices.
 *
 * # Safety
 * As [`mn_pfq`], with `y` an `m x m` array.
 */
enum MnStatus mn_pfq_two(const double *a,
                         size_t p,
                         const double *b,
                         size_t q,
                         const double *x,
                         const double *y,
                         size_t m,
                         size_t trunc,
                         double *value,
                         double *tail);

/**
 * Log density of `W_m(dof, sigma)` at `w`.
 *
 * # Safety
 * `w` and `sigma` must point to `m * m` readable values; `out` a valid
 * pointer.
 */
enum MnStatus mn_wishart_logpdf(const double *w,
                                size_t m,
                                double dof,
                                const double *sigma,
                                double *out);

/**
 * Log density at the `m x n` matrix `x` of the matrix normal law with
 * row-major `Cov(x_ij, x_kl) = a_ik b_jl`.
 *
 * # Safety
 * `x`, `a` and `b` must point to `m * n`, `m * m` and `n * n` readable
 * values; `out` a valid pointer.
 */
enum MnStatus mn_matnorm_logpdf_t3(const double *x,
                                   size_t m,
                                   size_t n,
                                   const double *a,
                                   const double *b,
                                   double *out);

/**
 * Haar-distributed orthogonal `m x m` matrix written row-major to `out`.
 * Identical `(seed, stream)` give identical matrices.
 *
 * # Safety
 * `out` must point to `m * m` writable values.
 */
enum MnStatus mn_sample_haar(size_t m, uint64_t seed, uint64_t stream, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MATNORM_H */
