#ifndef MHD0_H
#define MHD0_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum Mhd0Status {
  MHD0_STATUS_OK = 0,
  MHD0_STATUS_NULL_POINTER = 1,
  MHD0_STATUS_CONFIG = 2,
  MHD0_STATUS_BLOW_UP = 3,
  MHD0_STATUS_IO = 4,
  MHD0_STATUS_INVALID_UTF8 = 5,
  MHD0_STATUS_BUFFER_TOO_SMALL = 6,
  MHD0_STATUS_INVALID_ARGUMENT = 7,
  MHD0_STATUS_INTERNAL = 8,
} Mhd0Status;

// Field selector for [`mhd0_sim_copy_field`].
typedef enum Mhd0Field {
  MHD0_FIELD_RHO = 0,
  MHD0_FIELD_U1 = 1,
  MHD0_FIELD_U2 = 2,
  MHD0_FIELD_U3 = 3,
  MHD0_FIELD_H1 = 4,
  MHD0_FIELD_H2 = 5,
  MHD0_FIELD_H3 = 6,
} Mhd0Field;

// Opaque simulation handle.
typedef struct Mhd0Simulation Mhd0Simulation;

// One diagnostics row.
typedef struct Mhd0Diagnostics {
  double t;
  double energy_potential;
  double energy_kinetic;
  double energy_magnetic;
  double dissipation;
  double dissipation_integral;
  double energy_residual;
  double norm_h2_rho;
  double norm_h2_u;
  double norm_h2_b;
  double norm_l2_rho_t;
  double norm_l2_u_t;
  double norm_l2_b_t;
  double a_functional;
  double res_momdecomp;
  double res_poissonflux;
  double res_wv;
  double div_h_l2;
  double rho_min;
  double rho_max;
  double lyapunov_wv;
} Mhd0Diagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call into this library on the
// same thread.
const char *mhd0_last_error_message(void);

// Creates a simulation from configuration text in `key = value` form.
//
// # Safety
// `config_text` must be a NUL-terminated string and `out` a valid pointer.
enum Mhd0Status mhd0_sim_new_from_config(const char *config_text, struct Mhd0Simulation **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `sim` must be null or a handle not yet freed.
void mhd0_sim_free(struct Mhd0Simulation *sim);

// Advances by `dt`. A non-positive `dt` takes the step the configuration
// prescribes (fixed or CFL); at `t_end` that is a no-op.
//
// # Safety
// `sim` must be a live handle.
enum Mhd0Status mhd0_sim_step(struct Mhd0Simulation *sim, double dt);

// # Safety
// `sim` must be a live handle and `out` a valid pointer.
enum Mhd0Status mhd0_sim_time(const struct Mhd0Simulation *sim, double *out);

// Grid points per axis; field buffers hold `n³` values.
//
// # Safety
// `sim` must be a live handle and `out` a valid pointer.
enum Mhd0Status mhd0_sim_grid_size(const struct Mhd0Simulation *sim, size_t *out);

// Computes diagnostics at the current state. This also advances the
// running A functional, so call it at increasing times.
//
// # Safety
// `sim` must be a live handle and `out` a valid pointer.
enum Mhd0Status mhd0_sim_diagnostics(struct Mhd0Simulation *sim, struct Mhd0Diagnostics *out);

// Copies one field, row-major, into `buf` of length `len >= n³`.
//
// # Safety
// `sim` must be a live handle and `buf` valid for `len` writes.
enum Mhd0Status mhd0_sim_copy_field(const struct Mhd0Simulation *sim,
                                    enum Mhd0Field field,
                                    double *buf,
                                    size_t len);

// # Safety
// `sim` must be a live handle and `path` a NUL-terminated string.
enum Mhd0Status mhd0_sim_write_snapshot(const struct Mhd0Simulation *sim, const char *path);

// Runs a configuration file to completion, as the `mhd0 run` command
// does. `output_dir` may be null to keep the configured directory.
//
// # Safety
// `config_path` must be a NUL-terminated string; `output_dir` null or one.
enum Mhd0Status mhd0_run(const char *config_path, const char *output_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MHD0_H */
