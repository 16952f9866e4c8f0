#ifndef DEPHASING_H
#define DEPHASING_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DphBranch {
  DPH_BRANCH_PLUS = 0,
  DPH_BRANCH_MINUS = 1,
} DphBranch;

typedef enum DphRegime {
  DPH_REGIME_QUIET = 0,
  DPH_REGIME_QUANTUM = 1,
  DPH_REGIME_THERMAL = 2,
} DphRegime;

// Result code of every fallible call.
typedef enum DphStatus {
  DPH_STATUS_OK = 0,
  DPH_STATUS_INVALID_ARGUMENT = 1,
  DPH_STATUS_NULL_POINTER = 2,
  DPH_STATUS_QUADRATURE_FAILURE = 3,
  DPH_STATUS_DOMAIN = 4,
  DPH_STATUS_IMAGINARY_RESIDUE = 5,
  DPH_STATUS_INVALID_STATE = 6,
  DPH_STATUS_DECODE_LEAKAGE = 7,
  DPH_STATUS_UNACHIEVABLE_TARGET = 8,
  DPH_STATUS_RUN_COUNT_OVERFLOW = 9,
  DPH_STATUS_BUFFER_TOO_SMALL = 10,
  DPH_STATUS_PANIC = 11,
} DphStatus;

typedef enum DphTopology {
  DPH_TOPOLOGY_SHARED = 0,
  DPH_TOPOLOGY_INDEPENDENT = 1,
} DphTopology;

// Opaque register handle.
typedef struct DphRegister DphRegister;

// Opaque reservoir handle.
typedef struct DphReservoir DphReservoir;

// Parameters of the stochastic field; see [`dph_field_params_default`].
typedef struct DphFieldParams {
  double b0;
  double bstep;
  double p_up;
  double p_down;
  double dt;
  double g;
} DphFieldParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length excluding the NUL.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t dph_last_error_message(char *buf, size_t len);

// Creates a reservoir with spectral exponent `dimension` (1 or 3).
//
// # Safety
// `out_handle` must be valid for writes.
enum DphStatus dph_reservoir_new(uint8_t dimension,
                                 double cutoff,
                                 double temperature,
                                 double prefactor,
                                 struct DphReservoir **out_handle);

// # Safety
// `handle` must be null or come from [`dph_reservoir_new`] and not be freed twice.
void dph_reservoir_free(struct DphReservoir *handle);

// Γ(t) by adaptive quadrature.
//
// # Safety
// Pointers must be valid.
enum DphStatus dph_gamma_quadrature(const struct DphReservoir *res, double t, double *out_value);

// Γ(t) from the closed form of the reservoir's dimension.
//
// # Safety
// Pointers must be valid.
enum DphStatus dph_gamma_closed_form(const struct DphReservoir *res, double t, double *out_value);

// Collective exponent Γ± of two qubits a transit time `ts` apart.
//
// # Safety
// Pointers must be valid.
enum DphStatus dph_gamma_pm(const struct DphReservoir *res,
                            double ts,
                            enum DphBranch branch,
                            double t,
                            double *out_value);

// # Safety
// Pointers must be valid.
enum DphStatus dph_classify_regime(const struct DphReservoir *res,
                                   double t,
                                   enum DphRegime *out_regime);

// ζ(2, q) for complex `q = re + i·im` with `re > 0`.
//
// # Safety
// Pointers must be valid.
enum DphStatus dph_hurwitz_zeta2(double re, double im, double *out_re, double *out_im);

// `1 − eps^k`.
//
// # Safety
// Pointers must be valid.
enum DphStatus dph_success_probability(uint64_t k, double eps, double *out_value);

// Smallest run count reaching `target_p`.
//
// # Safety
// Pointers must be valid.
enum DphStatus dph_required_runs(double eps, double target_p, uint64_t *out_runs);

// Largest `L` with `L³ < t_ratio`.
//
// # Safety
// Pointers must be valid.
enum DphStatus dph_max_register_size(double t_ratio, uint64_t *out_size);

// Creates a register from a row-major `2^n × 2^n` density matrix given as
// separate real and imaginary arrays, plus one position per qubit.
//
// # Safety
// `rho_re`/`rho_im` must hold `4^n_qubits` values, `positions` `n_qubits` values.
enum DphStatus dph_register_new(size_t n_qubits,
                                const double *rho_re,
                                const double *rho_im,
                                const double *positions,
                                enum DphTopology topo,
                                struct DphRegister **out_handle);

// # Safety
// `handle` must be null or come from this library and not be freed twice.
void dph_register_free(struct DphRegister *handle);

// Matrix dimension `2^L`, or 0 for a null handle.
//
// # Safety
// `reg` must be null or a live handle.
size_t dph_register_dim(const struct DphRegister *reg);

// Element `ρ_ij`.
//
// # Safety
// Pointers must be valid.
enum DphStatus dph_register_element(const struct DphRegister *reg,
                                    size_t i,
                                    size_t j,
                                    double *out_re,
                                    double *out_im);

// New register holding the state after dephasing for time `t`.
//
// # Safety
// Pointers must be valid.
enum DphStatus dph_register_evolve(const struct DphRegister *reg,
                                   const struct DphReservoir *res,
                                   double t,
                                   struct DphRegister **out_handle);

// Largest decay exponent over all elements of an `n_qubits` register.
//
// # Safety
// `positions` must hold `n_qubits` values; `out_value` must be valid.
enum DphStatus dph_worst_case_exponent(const struct DphReservoir *res,
                                       size_t n_qubits,
                                       const double *positions,
                                       enum DphTopology topo,
                                       double t,
                                       double *out_value);

struct DphFieldParams dph_field_params_default(void);

// Ensemble-mean Bloch trajectory, written into caller buffers of `capacity`
// samples each. `*out_len` receives the sample count; if it exceeds
// `capacity`, nothing is written and `DPH_STATUS_BUFFER_TOO_SMALL` is returned,
// so a first call with `capacity = 0` queries the size.
//
// # Safety
// `params`, `s0` (3 values) and `out_len` must be valid; buffers must hold `capacity` values.
enum DphStatus dph_simulate_ensemble(const struct DphFieldParams *params,
                                     const double *s0,
                                     double t_max,
                                     size_t n_members,
                                     uint64_t master_seed,
                                     double *times,
                                     double *sx,
                                     double *sy,
                                     double *sz,
                                     size_t capacity,
                                     size_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEPHASING_H */
