#ifndef NHLAB_H
#define NHLAB_H

/* Generated by cbindgen. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum NhlabModelKind {
  NHLAB_MODEL_KIND_JORDAN_BOUND = 0,
  NHLAB_MODEL_KIND_TWO_LEVEL = 1,
  NHLAB_MODEL_KIND_THRESHOLD = 2,
  NHLAB_MODEL_KIND_CONTINUUM_BS = 3,
} NhlabModelKind;

typedef enum NhlabObservable {
  NHLAB_OBSERVABLE_BINORM = 0,
  NHLAB_OBSERVABLE_TOTAL = 1,
  NHLAB_OBSERVABLE_POTENTIAL = 2,
  NHLAB_OBSERVABLE_KINETIC = 3,
} NhlabObservable;

/**
 * Result code of every fallible call.
 */
typedef enum NhlabStatus {
  NHLAB_STATUS_OK = 0,
  NHLAB_STATUS_NULL_POINTER = 1,
  NHLAB_STATUS_INVALID_PARAMETER = 2,
  NHLAB_STATUS_DOMAIN = 3,
  NHLAB_STATUS_EXCLUDED_MOMENTUM = 4,
  NHLAB_STATUS_CONVERGENCE = 5,
  NHLAB_STATUS_TOLERANCE_NOT_MET = 6,
  NHLAB_STATUS_ON_CUT = 7,
  NHLAB_STATUS_AT_POLE = 8,
  NHLAB_STATUS_ZERO_DENOMINATOR = 9,
  NHLAB_STATUS_UNSUPPORTED = 10,
  NHLAB_STATUS_INDEX_OUT_OF_RANGE = 11,
  NHLAB_STATUS_INVALID_UTF8 = 12,
  NHLAB_STATUS_INTERNAL = 13,
} NhlabStatus;

/**
 * Opaque validated model parameters.
 */
typedef struct NhlabModel NhlabModel;

/**
 * Opaque verification report.
 */
typedef struct NhlabReport NhlabReport;

typedef struct NhlabComplex {
  double re;
  double im;
} NhlabComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *nhlab_version(void);

/**
 * Static name of a status code.
 */
const char *nhlab_status_name(enum NhlabStatus status);

/**
 * Message of the last failed call on this thread, empty after a success.
 * Valid until the next call on the same thread.
 */
const char *nhlab_last_error_message(void);

/**
 * Creates a model. `alpha` is complex only for the two-level model; `beta`
 * is used by the two-level model and `n` by the threshold model.
 *
 * # Safety
 * `out` must be valid for writing a pointer.
 */
enum NhlabStatus nhlab_model_new(enum NhlabModelKind kind,
                                 struct NhlabComplex alpha,
                                 double beta,
                                 struct NhlabComplex z,
                                 uint32_t n,
                                 struct NhlabModel **out);

/**
 * # Safety
 * `model` must come from [`nhlab_model_new`] and not be used afterwards.
 */
void nhlab_model_free(struct NhlabModel *model);

/**
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum NhlabStatus nhlab_model_potential(const struct NhlabModel *model,
                                       double x,
                                       struct NhlabComplex *out);

/**
 * Number of closed-form discrete states (bound or chain).
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum NhlabStatus nhlab_model_state_count(const struct NhlabModel *model, size_t *out);

/**
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum NhlabStatus nhlab_model_state_eval(const struct NhlabModel *model,
                                        size_t index,
                                        double x,
                                        struct NhlabComplex *out);

/**
 * Eigenvalue of the cell the state belongs to.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum NhlabStatus nhlab_model_state_lambda(const struct NhlabModel *model,
                                          size_t index,
                                          struct NhlabComplex *out);

/**
 * `∫ψ_i ψ_j dx` without conjugation.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum NhlabStatus nhlab_model_binorm(const struct NhlabModel *model,
                                    size_t i,
                                    size_t j,
                                    double tol,
                                    struct NhlabComplex *out);

/**
 * Continuum solution `ψ(x; k)`.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum NhlabStatus nhlab_model_continuum_eval(const struct NhlabModel *model,
                                            double x,
                                            double k,
                                            struct NhlabComplex *out);

/**
 * Transmission and reflection amplitudes at real momentum `k > 0`.
 *
 * # Safety
 * `model` must be a live handle; `t` and `r` writable.
 */
enum NhlabStatus nhlab_model_transmission(const struct NhlabModel *model,
                                          double k,
                                          struct NhlabComplex *t,
                                          struct NhlabComplex *r);

/**
 * Green function `G(x, x'; λ)` off the cut and the poles.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum NhlabStatus nhlab_model_green(const struct NhlabModel *model,
                                   struct NhlabComplex lambda,
                                   double x,
                                   double xp,
                                   struct NhlabComplex *out);

/**
 * Gaussian-packet quantity of the threshold model at width `eps`.
 *
 * # Safety
 * `out` must be writable.
 */
enum NhlabStatus nhlab_packet_value(double eps,
                                    struct NhlabComplex z,
                                    enum NhlabObservable which,
                                    struct NhlabComplex *out);

/**
 * Runs one suite by name (`chains`, `binorms`, `packet`, `coalescence`,
 * `identity`, `scattering`, `finite`) or every suite when `name` is `all`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` writable.
 */
enum NhlabStatus nhlab_verify(const char *name, uint64_t seed, struct NhlabReport **out);

/**
 * # Safety
 * `report` must be a live handle and `pass` writable.
 */
enum NhlabStatus nhlab_report_pass(const struct NhlabReport *report, bool *pass);

/**
 * # Safety
 * `report` must be a live handle; `records` and `failures` writable.
 */
enum NhlabStatus nhlab_report_counts(const struct NhlabReport *report,
                                     size_t *records,
                                     size_t *failures);

/**
 * JSON serialization of the report; release it with [`nhlab_string_free`].
 *
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
enum NhlabStatus nhlab_report_json(const struct NhlabReport *report, char **out);

/**
 * # Safety
 * `report` must come from [`nhlab_verify`] and not be used afterwards.
 */
void nhlab_report_free(struct NhlabReport *report);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void nhlab_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NHLAB_H */
