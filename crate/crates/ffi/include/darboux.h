#ifndef DARBOUX_H
#define DARBOUX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DarbouxStatus {
  DARBOUX_STATUS_OK = 0,
  DARBOUX_STATUS_NULL_POINTER = 1,
  DARBOUX_STATUS_INVALID_ARGUMENT = 2,
  DARBOUX_STATUS_CONFIG = 3,
  DARBOUX_STATUS_NUMERICAL = 4,
  DARBOUX_STATUS_PANIC = 5,
} DarbouxStatus;

// Parameters of the two-channel model chain.
typedef struct DarbouxKvg DarbouxKvg;

// Sampled potential with pole flags.
typedef struct DarbouxPotential DarbouxPotential;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread. The pointer stays valid
// until the next failing call on the same thread.
const char *darboux_last_error(void);

const char *darboux_version(void);

// # Safety
// `out` must be a valid pointer to writable storage for one pointer.
enum DarbouxStatus darboux_kvg_new(double k1, double k2, double chi, struct DarbouxKvg **out);

// # Safety
// `handle` must come from [`darboux_kvg_new`] and not be freed twice.
void darboux_kvg_free(struct DarbouxKvg *handle);

// Ratio of the asymptotic normalizations of the deuteron D and S waves.
//
// # Safety
// `handle` must be live and `out` writable.
enum DarbouxStatus darboux_kvg_eta(const struct DarbouxKvg *handle, double *out);

// Closed-form S-matrix at real `k`, channels ordered `(s, d)`, written
// row-major into `re[4]` and `im[4]`.
//
// # Safety
// `handle` must be live; `re` and `im` must each hold four doubles.
enum DarbouxStatus darboux_kvg_smatrix(const struct DarbouxKvg *handle,
                                       double k,
                                       double *re,
                                       double *im);

// Potential of the model chain on `count` points of `[r_min, r_max]`,
// channels ordered `(d, s)`.
//
// # Safety
// `handle` must be live and `out` writable.
enum DarbouxStatus darboux_kvg_potential(const struct DarbouxKvg *handle,
                                         double r_min,
                                         double r_max,
                                         uintptr_t count,
                                         bool log_spacing,
                                         struct DarbouxPotential **out);

// # Safety
// `handle` must come from this library and not be freed twice.
void darboux_potential_free(struct DarbouxPotential *handle);

// # Safety
// `handle` must be live; `len` and `channels` writable.
enum DarbouxStatus darboux_potential_shape(const struct DarbouxPotential *handle,
                                           uintptr_t *len,
                                           uintptr_t *channels);

// Radius, row-major real potential (`channels^2` doubles) and pole flag of
// sample `idx`.
//
// # Safety
// `handle` must be live; `values` must hold `channels^2` doubles.
enum DarbouxStatus darboux_potential_sample(const struct DarbouxPotential *handle,
                                            uintptr_t idx,
                                            double *r,
                                            double *values,
                                            bool *pole);

// S-matrix of a sampled potential at `k`. `l` lists one angular momentum
// per channel; results are row-major `channels^2` doubles.
//
// # Safety
// `handle` must be live, `l` must hold `l_len` values and `re`, `im` must
// each hold `channels^2` doubles.
enum DarbouxStatus darboux_potential_smatrix(const struct DarbouxPotential *handle,
                                             double k,
                                             const uint32_t *l,
                                             uintptr_t l_len,
                                             double *re,
                                             double *im);

// Runs a JSON run configuration (the same document the command line
// reads) and returns the output tables as JSON. Free the string with
// [`darboux_string_free`].
//
// # Safety
// `config` must be a NUL-terminated string and `out` writable.
enum DarbouxStatus darboux_run_config(const char *config, char **out);

// # Safety
// `s` must come from this library and not be freed twice.
void darboux_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DARBOUX_H */
