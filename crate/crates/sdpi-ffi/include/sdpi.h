#ifndef SDPI_H
#define SDPI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Version of this C interface; bumped on any incompatible change.
 */
#define SDPI_ABI_VERSION 1

/**
 * Result codes.
 */
typedef enum SdpiStatus {
  SDPI_STATUS_OK = 0,
  SDPI_STATUS_DOMAIN = 1,
  SDPI_STATUS_SHAPE = 2,
  SDPI_STATUS_TRUNCATION = 3,
  SDPI_STATUS_NO_SOLUTION = 4,
  SDPI_STATUS_PROFILE_FAILURE = 5,
  SDPI_STATUS_PRECONDITION = 6,
  SDPI_STATUS_BUDGET = 7,
  SDPI_STATUS_PARSE = 8,
  SDPI_STATUS_IO = 9,
  SDPI_STATUS_NULL_POINTER = 10,
  SDPI_STATUS_PANIC = 11,
} SdpiStatus;

/**
 * Opaque noise model.
 */
typedef struct SdpiNoise SdpiNoise;

/**
 * Opaque finitely supported distribution.
 */
typedef struct SdpiPmf SdpiPmf;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns [`SDPI_ABI_VERSION`].
 */
uint32_t sdpi_abi_version(void);

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *sdpi_last_error(void);

/**
 * Clears the last error message.
 */
void sdpi_clear_error(void);

/**
 * Gaussian noise `N(0, sigma²)`.
 */
enum SdpiStatus sdpi_noise_gaussian(double sigma, struct SdpiNoise **out);

/**
 * Uniform noise on `[lo, hi]`.
 */
enum SdpiStatus sdpi_noise_uniform(double lo, double hi, struct SdpiNoise **out);

/**
 * Laplace noise with the given scale.
 */
enum SdpiStatus sdpi_noise_laplace(double scale, struct SdpiNoise **out);

/**
 * Noise from a spec string such as `gaussian:1`, `uniform:0,1`,
 * `laplace:0.5` or `grid:path.csv`.
 */
enum SdpiStatus sdpi_noise_parse(const char *spec, struct SdpiNoise **out);

/**
 * Releases a noise handle; null is a no-op.
 */
void sdpi_noise_free(struct SdpiNoise *h);

/**
 * Distribution with `n` strictly increasing atoms and weights summing to 1.
 */
enum SdpiStatus sdpi_pmf_new(const double *atoms,
                             const double *weights,
                             size_t n,
                             struct SdpiPmf **out);

/**
 * Releases a distribution handle; null is a no-op.
 */
void sdpi_pmf_free(struct SdpiPmf *h);

/**
 * `h_b(p)` in nats.
 */
enum SdpiStatus sdpi_binary_entropy(double p, double *out);

/**
 * Gaussian tail probability.
 */
double sdpi_q_function(double x);

enum SdpiStatus sdpi_mrs_gerber(double x, double delta, double *out);

/**
 * `F_I(t)` of the binary symmetric channel.
 */
enum SdpiStatus sdpi_fi_bsc(double t, double delta, double *out);

/**
 * `F_I(t)` of the erasure channel on an alphabet of size `k`.
 */
enum SdpiStatus sdpi_fi_erasure(double t, double alpha, size_t k, double *out);

/**
 * Lattice search lower bound on `F_I(t)` for a row-major `rows × cols`
 * kernel.
 */
enum SdpiStatus sdpi_fi_bruteforce_dmc(const double *kernel,
                                       size_t rows,
                                       size_t cols,
                                       double t,
                                       size_t w_size,
                                       size_t resolution,
                                       double *out);

/**
 * Diagonal gap lower bound for `Y = √γ X + N(0,1)`, `E X² <= 1`.
 */
enum SdpiStatus sdpi_gd_lower(double t, double gamma, double *out);

/**
 * Lower bound on `I(W;X)` when the capacity gap is at most `exp(-ln_inv_eps)`.
 */
enum SdpiStatus sdpi_t_lower_from_ln_gap(double ln_inv_eps, double gamma, double *out);

/**
 * Logarithm of the horizontal gap lower bound.
 */
enum SdpiStatus sdpi_ln_gh_lower(double t, double gamma, double *out);

/**
 * `d_TV(P_Z, P_{Z+delta})`.
 */
enum SdpiStatus sdpi_theta_shift(const struct SdpiNoise *noise, double delta, double *out);

/**
 * Amplitude-constrained TV contraction coefficient.
 */
enum SdpiStatus sdpi_eta_tv_amplitude(const struct SdpiNoise *noise, double a, double *out);

enum SdpiStatus sdpi_alpha_star(const struct SdpiNoise *noise, double *out);

/**
 * `I(X; scale·X + Z)` in nats.
 */
enum SdpiStatus sdpi_mi_additive(const struct SdpiPmf *input,
                                 const struct SdpiNoise *noise,
                                 double scale,
                                 double *out);

/**
 * General-noise diagonal gap; `contracting` receives 1 or 0.
 */
enum SdpiStatus sdpi_general_diag_bound(double t,
                                        const struct SdpiNoise *noise,
                                        double p,
                                        double gamma,
                                        double *value,
                                        int *contracting);

/**
 * KS bound from the TV distance after convolution with `noise`.
 */
enum SdpiStatus sdpi_ks_deconv_solve(const struct SdpiNoise *noise,
                                     double d_tv,
                                     double m2,
                                     double first_moments,
                                     double *bound,
                                     double *cutoff);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SDPI_H */
