#ifndef QUASIWORK_H
#define QUASIWORK_H

/* Generated by cbindgen from the quasiwork-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum {
  QW_STATUS_OK = 0,
  QW_STATUS_NULL_POINTER = 1,
  QW_STATUS_INVALID_ARGUMENT = 2,
  QW_STATUS_NUMERICAL_ERROR = 3,
} QwStatus;

/**
 * Opaque: a fixed drive and protocol time with its spectral data.
 */
typedef struct QwProtocol QwProtocol;

/**
 * Opaque: an initial density matrix.
 */
typedef struct QwState QwState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *qw_version(void);

/**
 * Description of the most recent failure on this thread.
 */
const char *qw_last_error_message(void);

/**
 * Builds a protocol from drive amplitude, detuning, and time.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
QwStatus qw_protocol_new(double omega_rabi, double delta, double t, QwProtocol **out);

/**
 * Releases a protocol handle; null is a no-op.
 *
 * # Safety
 * `p` must be null or a pointer from `qw_protocol_new` not yet freed.
 */
void qw_protocol_free(QwProtocol *p);

/**
 * Equal superposition of the two initial eigenstates.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
QwStatus qw_state_new_plus(double omega_rabi, double delta, QwState **out);

/**
 * Orthogonal superposition of the two initial eigenstates.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
QwStatus qw_state_new_minus(double omega_rabi, double delta, QwState **out);

/**
 * Mixture p |plus><plus| + (1-p) |minus><minus| with p in [0, 1].
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
QwStatus qw_state_new_mixture(double omega_rabi, double delta, double p, QwState **out);

/**
 * Releases a state handle; null is a no-op.
 *
 * # Safety
 * `s` must be null or a pointer from a `qw_state_new_*` call not yet freed.
 */
void qw_state_free(QwState *s);

/**
 * Fills the 2x2 quasiprobability table in row-major layout, index
 * `2 * initial + final`: real parts, imaginary parts, and the transition
 * energies.
 *
 * # Safety
 * `re`, `im`, `w` must each point to at least four writable doubles.
 */
QwStatus qw_kdq_table(const QwProtocol *p, const QwState *s, double *re, double *im, double *w);

/**
 * Characteristic function at conjugate parameter `u`.
 *
 * # Safety
 * `out_re` and `out_im` must be valid writable doubles.
 */
QwStatus qw_char_function(const QwProtocol *p,
                          const QwState *s,
                          double u,
                          double *out_re,
                          double *out_im);

/**
 * First moment and complex variance of the work variable.
 *
 * # Safety
 * All four out pointers must be valid writable doubles.
 */
QwStatus qw_work_moments(const QwProtocol *p,
                         const QwState *s,
                         double *mean_re,
                         double *mean_im,
                         double *var_re,
                         double *var_im);

/**
 * Both sides of the two-observable uncertainty bound for this state and
 * protocol.
 *
 * # Safety
 * `lhs` and `rhs` must be valid writable doubles.
 */
QwStatus qw_rsur(const QwProtocol *p, const QwState *s, double *lhs, double *rhs);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUASIWORK_H */
