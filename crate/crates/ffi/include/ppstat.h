#ifndef PPSTAT_H
#define PPSTAT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum PpsStatus {
  PPS_STATUS_OK = 0,
  PPS_STATUS_NULL_POINTER = 1,
  PPS_STATUS_INVALID_INPUT = 2,
  PPS_STATUS_UNDEFINED = 3,
  PPS_STATUS_INFEASIBLE = 4,
  PPS_STATUS_MISMATCH = 5,
  PPS_STATUS_NOT_CONVERGED = 6,
  PPS_STATUS_PANIC = 7,
} PpsStatus;

/**
 * Opaque collection of count records.
 */
typedef struct PpsCounts PpsCounts;

/**
 * Opaque fit result.
 */
typedef struct PpsEstimate PpsEstimate;

/**
 * Opaque filter transmittance sampled on one axis of a JSD.
 */
typedef struct PpsFilter PpsFilter;

/**
 * Opaque joint spectral amplitude.
 */
typedef struct PpsJsd PpsJsd;

/**
 * Opaque set of detection setups keyed by setting id.
 */
typedef struct PpsModel PpsModel;

/**
 * Characteristics of a two-mode PND; NaN where undefined.
 */
typedef struct PpsCharacteristics {
  double p_g;
  double eta_h_s;
  double eta_h_i;
  double g2_s;
  double g2_i;
  double gh2_s;
  double gh2_i;
} PpsCharacteristics;

/**
 * One detection arm: beam splitter transmittance `t`, the efficiencies and
 * noise probabilities of its transmitted and reflected detectors, and the
 * attenuator transmittance `gamma`.
 */
typedef struct PpsDetectorPair {
  double t;
  double eta_t;
  double eta_r;
  double d_t;
  double d_r;
  double gamma;
} PpsDetectorPair;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (always
 * NUL-terminated when `len > 0`) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t pps_last_error(char *buf, size_t len);

/**
 * Correlated Gaussian JSD on an `n_s × n_i` grid spanning six marginal
 * standard deviations.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum PpsStatus pps_jsd_gaussian(double sigma_plus,
                                double sigma_minus,
                                double theta,
                                size_t n_s,
                                size_t n_i,
                                struct PpsJsd **out);

/**
 * JSD from uniform axes and a row-major (signal index major) amplitude
 * grid of `n_s * n_i` complex values split into real and imaginary parts.
 * The grid is normalized on construction.
 *
 * # Safety
 * Array pointers must reference the stated number of values.
 */
enum PpsStatus pps_jsd_from_values(const double *axis_s,
                                   size_t n_s,
                                   const double *axis_i,
                                   size_t n_i,
                                   const double *re,
                                   const double *im,
                                   struct PpsJsd **out);

/**
 * # Safety
 * `jsd` must be null or a handle from this library, freed at most once.
 */
void pps_jsd_free(struct PpsJsd *jsd);

/**
 * Mode number from the singular values of the grid.
 *
 * # Safety
 * `jsd` must be a live handle and `out` writable.
 */
enum PpsStatus pps_schmidt_number_svd(const struct PpsJsd *jsd, double *out);

/**
 * Mode number from the fourfold overlap integral.
 *
 * # Safety
 * `jsd` must be a live handle and `out` writable.
 */
enum PpsStatus pps_schmidt_number_analytic(const struct PpsJsd *jsd, double *out);

/**
 * Ideal rectangular filter on the signal (`idler = false`) or idler axis.
 *
 * # Safety
 * `jsd` must be a live handle and `out` a valid handle slot.
 */
enum PpsStatus pps_filter_rect(const struct PpsJsd *jsd,
                               bool idler,
                               double center,
                               double width,
                               struct PpsFilter **out);

/**
 * Filter from amplitude transmittance samples, one per axis point.
 *
 * # Safety
 * `jsd` must be a live handle, `t` must hold `n` values and `out` must be
 * a valid handle slot.
 */
enum PpsStatus pps_filter_from_amplitude(const struct PpsJsd *jsd,
                                         bool idler,
                                         const double *t,
                                         size_t n,
                                         struct PpsFilter **out);

/**
 * # Safety
 * `filter` must be null or a handle from this library, freed at most once.
 */
void pps_filter_free(struct PpsFilter *filter);

/**
 * Filtered PND up to two pairs, written row-major into `out[9]`
 * (`out[3*j + k] = P_jk`).
 *
 * # Safety
 * Handles must be live and `out` must hold `len` values.
 */
enum PpsStatus pps_synthesize_pnd(const struct PpsJsd *jsd,
                                  const struct PpsFilter *filter_s,
                                  const struct PpsFilter *filter_i,
                                  double xi_sq,
                                  double *out,
                                  size_t len);

/**
 * Characteristics of a row-major square PND.
 *
 * # Safety
 * `cells` must hold `n_cells` values and `out` must be writable.
 */
enum PpsStatus pps_characteristics(const double *cells,
                                   size_t n_cells,
                                   struct PpsCharacteristics *out);

/**
 * Probabilities of the 16 click statuses, signal outcome major, written to
 * `out[16]`.
 *
 * # Safety
 * `cells` must hold `n_cells` values, the arms must be readable and `out`
 * must hold 16 values.
 */
enum PpsStatus pps_bipartite_probs(const double *cells,
                                   size_t n_cells,
                                   const struct PpsDetectorPair *det_s,
                                   const struct PpsDetectorPair *det_i,
                                   double *out);

/**
 * RMSLE between two distributions of `n` cells.
 *
 * # Safety
 * `p` and `o` must hold `n` values and `out` must be writable.
 */
enum PpsStatus pps_rmsle(const double *p, const double *o, size_t n, double alpha, double *out);

/**
 * Fidelity `Σ sqrt(P O)` between two distributions of `n` cells.
 *
 * # Safety
 * `p` and `o` must hold `n` values and `out` must be writable.
 */
enum PpsStatus pps_fidelity(const double *p, const double *o, size_t n, double *out);

/**
 * Empty detection model.
 */
struct PpsModel *pps_model_new(void);

/**
 * Adds two-mode setting `nu`.
 *
 * # Safety
 * `model` must be a live handle and the arms readable.
 */
enum PpsStatus pps_model_add_bipartite(struct PpsModel *model,
                                       size_t nu,
                                       const struct PpsDetectorPair *det_s,
                                       const struct PpsDetectorPair *det_i);

/**
 * Adds single-mode setting `nu`.
 *
 * # Safety
 * `model` must be a live handle and `det` readable.
 */
enum PpsStatus pps_model_add_single(struct PpsModel *model,
                                    size_t nu,
                                    const struct PpsDetectorPair *det);

/**
 * # Safety
 * `model` must be null or a handle from this library, freed at most once.
 */
void pps_model_free(struct PpsModel *model);

/**
 * Empty collection of count records.
 */
struct PpsCounts *pps_counts_new(void);

/**
 * Adds the record of setting `nu`: 16 two-mode or 4 single-mode outcome
 * counts summing to `n_m`.
 *
 * # Safety
 * `counts` must be a live handle and `f` must hold `n_f` values.
 */
enum PpsStatus pps_counts_add(struct PpsCounts *counts,
                              size_t nu,
                              double n_m,
                              const double *f,
                              size_t n_f);

/**
 * # Safety
 * `counts` must be null or a handle from this library, freed at most once.
 */
void pps_counts_free(struct PpsCounts *counts);

/**
 * Maximum-likelihood fit (`renormalized = false`) or the renormalized
 * fit over attenuator settings that ignores all-click events.
 *
 * # Safety
 * Handles must be live and `out` a valid handle slot.
 */
enum PpsStatus pps_estimate(const struct PpsModel *model,
                            const struct PpsCounts *counts,
                            bool renormalized,
                            uint64_t seed,
                            struct PpsEstimate **out);

/**
 * Number of fitted cells: 9 for two modes, 3 for one.
 *
 * # Safety
 * `est` must be null or a live handle.
 */
size_t pps_estimate_len(const struct PpsEstimate *est);

/**
 * Copies the fitted cells, row-major for two modes.
 *
 * # Safety
 * `est` must be a live handle and `out` must hold `len` values.
 */
enum PpsStatus pps_estimate_cells(const struct PpsEstimate *est, double *out, size_t len);

/**
 * Maximized log-likelihood, iterations of the best start and whether it
 * converged. Any output pointer may be null.
 *
 * # Safety
 * `est` must be a live handle; non-null outputs must be writable.
 */
enum PpsStatus pps_estimate_summary(const struct PpsEstimate *est,
                                    double *loglik,
                                    size_t *iterations,
                                    bool *converged);

/**
 * # Safety
 * `est` must be null or a handle from this library, freed at most once.
 */
void pps_estimate_free(struct PpsEstimate *est);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PPSTAT_H */
