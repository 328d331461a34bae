#ifndef STEERCERT_H
#define STEERCERT_H

/* Generated by cbindgen; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum SteercertStatus {
  STEERCERT_STATUS_OK = 0,
  STEERCERT_STATUS_NULL_POINTER = 1,
  STEERCERT_STATUS_INVALID_ARGUMENT = 2,
  STEERCERT_STATUS_VALIDATION = 3,
  STEERCERT_STATUS_NOT_ENTANGLED = 4,
  STEERCERT_STATUS_PANIC = 5,
} SteercertStatus;

// Three three-outcome POVMs on a common space.
typedef struct SteercertMeasurementSet SteercertMeasurementSet;

// Result of a certification run.
typedef struct SteercertReport SteercertReport;

// Normalized pure state on `ℂ² ⊗ ℂ^d`.
typedef struct SteercertState SteercertState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null if none. The pointer stays valid until
// the next failing call on the same thread.
const char *steercert_last_error(void);

// Library version as a static NUL-terminated string.
const char *steercert_version(void);

// Trusted trines `M_x^a = (2/3)|e_{a,x}⟩⟨e_{a,x}|`.
//
// # Safety
// `out` must be valid for writing one pointer.
enum SteercertStatus steercert_measurement_set_alice_ideal(struct SteercertMeasurementSet **out);

// Ideal untrusted measurements `N_x^a = (2/3)|e*⊥_{a,x}⟩⟨e*⊥_{a,x}|`.
//
// # Safety
// `out` must be valid for writing one pointer.
enum SteercertStatus steercert_measurement_set_bob_ideal(struct SteercertMeasurementSet **out);

// Ideal untrusted measurements mixed with white noise of weight `epsilon ∈ [0, 1]`.
//
// # Safety
// `out` must be valid for writing one pointer.
enum SteercertStatus steercert_measurement_set_noisy_bob(double epsilon,
                                                         struct SteercertMeasurementSet **out);

// Builds and validates a measurement set of dimension `dim` from `9·dim²` entries per array,
// ordered `[x][a][row][col]`.
//
// # Safety
// `re` and `im` must each point to `9·dim²` readable doubles; `out` must be writable.
enum SteercertStatus steercert_measurement_set_new(size_t dim,
                                                   const double *re,
                                                   const double *im,
                                                   struct SteercertMeasurementSet **out);

// Dimension the measurements act on, or 0 for a null handle.
//
// # Safety
// `set` must be null or a live handle.
size_t steercert_measurement_set_dim(const struct SteercertMeasurementSet *set);

// Copies element `(x, a)` into `dim²` entries of `re_out` and `im_out`.
//
// # Safety
// `set` must be a live handle; the output arrays must hold `dim²` doubles.
enum SteercertStatus steercert_measurement_set_element(const struct SteercertMeasurementSet *set,
                                                       size_t x,
                                                       size_t a,
                                                       double *re_out,
                                                       double *im_out);

// Releases a measurement set; null is ignored.
//
// # Safety
// `set` must be null or a handle not yet freed.
void steercert_measurement_set_free(struct SteercertMeasurementSet *set);

// Rank-one extremality of setting `x`: writes 1 (extremal), 0 (not extremal) or -1 (criterion
// not applicable).
//
// # Safety
// `set` must be a live handle; `out` must be writable.
enum SteercertStatus steercert_measurement_set_extremal(const struct SteercertMeasurementSet *set,
                                                        size_t x,
                                                        int32_t *out);

// Pure state on `ℂ² ⊗ ℂ^{dim_b}` from `2·dim_b` amplitudes; the norm must be 1 within 1e-12.
//
// # Safety
// `re` and `im` must each point to `2·dim_b` readable doubles; `out` must be writable.
enum SteercertStatus steercert_state_new(size_t dim_b,
                                         const double *re,
                                         const double *im,
                                         struct SteercertState **out);

// `(|00⟩ + |11⟩)/√2` embedded in `ℂ² ⊗ ℂ^{dim_b}`, `dim_b ≥ 2`.
//
// # Safety
// `out` must be writable.
enum SteercertStatus steercert_state_phi_plus(size_t dim_b, struct SteercertState **out);

// `(|00⟩ + (1−δ)|11⟩) / √(1 + (1−δ)²)`.
//
// # Safety
// `out` must be writable.
enum SteercertStatus steercert_state_imbalanced(double delta, struct SteercertState **out);

// Releases a state; null is ignored.
//
// # Safety
// `state` must be null or a handle not yet freed.
void steercert_state_free(struct SteercertState *state);

// `W = 3 − Σ p(a,a|x,x)` for the given state and measurement sets (`alice` on the qubit).
//
// # Safety
// All handles must be live; `out` must be writable.
enum SteercertStatus steercert_steering_functional(const struct SteercertState *state,
                                                   const struct SteercertMeasurementSet *alice,
                                                   const struct SteercertMeasurementSet *bob,
                                                   double *out);

// Local-hidden-state bound of the trusted trines by grid search (`grid` points per angle,
// at least 2) and simplex refinement.
//
// # Safety
// `out` must be writable.
enum SteercertStatus steercert_lhs_bound(size_t grid, uint64_t seed, double *out);

// Exact local-hidden-state bound from the 27 deterministic responses.
//
// # Safety
// `out` must be writable.
enum SteercertStatus steercert_lhs_bound_exact(double *out);

// Certifies `state` with untrusted measurements `bob` at tolerance `tolerance > 0`. A report
// is produced for passing and failing inputs alike; non-entangled states return
// `NOT_ENTANGLED` without a report.
//
// # Safety
// Handles must be live; `out` must be writable.
enum SteercertStatus steercert_certify(const struct SteercertState *state,
                                       const struct SteercertMeasurementSet *bob,
                                       double tolerance,
                                       struct SteercertReport **out);

// Whether the report passed; false for a null handle.
//
// # Safety
// `report` must be null or a live handle.
bool steercert_report_passed(const struct SteercertReport *report);

// Largest `p(a,a|x,x)`; NaN for a null handle.
//
// # Safety
// `report` must be null or a live handle.
double steercert_report_max_diagonal_probability(const struct SteercertReport *report);

// `|⟨φ⁺|(𝟙 ⊗ U_B)|ψ⟩|²`; NaN for a null handle.
//
// # Safety
// `report` must be null or a live handle.
double steercert_report_state_fidelity(const struct SteercertReport *report);

// Largest operator-norm deviation of the transformed measurements; NaN for a null handle.
//
// # Safety
// `report` must be null or a live handle.
double steercert_report_measurement_deviation(const struct SteercertReport *report);

// Largest residual of the identity chain; NaN for a null handle.
//
// # Safety
// `report` must be null or a live handle.
double steercert_report_identity_chain_max_residual(const struct SteercertReport *report);

// Dimension of the extracted unitary; 0 for a null handle.
//
// # Safety
// `report` must be null or a live handle.
size_t steercert_report_dim_b(const struct SteercertReport *report);

// Copies the extracted unitary into `dim_b²` entries of each output array.
//
// # Safety
// `report` must be live; the outputs must hold `dim_b²` doubles.
enum SteercertStatus steercert_report_unitary(const struct SteercertReport *report,
                                              double *re_out,
                                              double *im_out);

// Releases a report; null is ignored.
//
// # Safety
// `report` must be null or a handle not yet freed.
void steercert_report_free(struct SteercertReport *report);

// `3 − 3ε + 2ε²`
double steercert_w_closed_form_epsilon(double epsilon);

// Published closed form of `3 − W` for the imbalanced noisy family.
//
// # Safety
// `out` must be writable.
enum SteercertStatus steercert_f_closed_form(double delta, double epsilon, double *out);

// `3 − W` of the imbalanced noisy family evaluated exactly.
//
// # Safety
// `out` must be writable.
enum SteercertStatus steercert_f_exact(double delta, double epsilon, double *out);

// `W` of the noisy configuration by direct simulation.
//
// # Safety
// `out` must be writable.
enum SteercertStatus steercert_w_simulated(double epsilon_s,
                                           double epsilon_b,
                                           double delta,
                                           double *out);

// Noise at which `3 − 3ε + 2ε²` equals `beta_l`.
//
// # Safety
// `out` must be writable.
enum SteercertStatus steercert_critical_epsilon(double beta_l, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STEERCERT_H */
