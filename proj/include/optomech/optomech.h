#ifndef OPTOMECH_OPTOMECH_H
#define OPTOMECH_OPTOMECH_H

/* C interface to the optomechanical blockade / router toolkit.
 *
 * Every function returns an omr_status; on failure the message is available
 * from omr_last_error() on the calling thread until the next call. Units are
 * the mechanical frequency omega_m throughout. */

#include <stddef.h>

#if defined(_WIN32)
#  if defined(OPTOMECH_BUILDING)
#    define OMR_API __declspec(dllexport)
#  else
#    define OMR_API __declspec(dllimport)
#  endif
#else
#  define OMR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum omr_status {
  OMR_OK = 0,
  OMR_ERR_INVALID_ARGUMENT = 1,
  OMR_ERR_INVALID_DIMENSION = 2,
  OMR_ERR_SPACE_MISMATCH = 3,
  OMR_ERR_RWA_VIOLATION = 4,
  OMR_ERR_INTEGRATION = 5,
  OMR_ERR_DEGENERATE_STEADY_STATE = 6,
  OMR_ERR_NOT_CONVERGED = 7,
  OMR_ERR_UNDEFINED_CORRELATION = 8,
  OMR_ERR_QUADRATURE = 9,
  OMR_ERR_INSUFFICIENT_TIME = 10,
  OMR_ERR_NORMALIZATION = 11,
  OMR_ERR_NULL_POINTER = 20,
  OMR_ERR_OUT_OF_RANGE = 21,
  OMR_ERR_INTERNAL = 99
} omr_status;

OMR_API const char* omr_version(void);
OMR_API const char* omr_status_string(omr_status status);
OMR_API const char* omr_last_error(void);

/* ---- blockade ---------------------------------------------------------- */

typedef struct omr_system_params {
  double J;
  double g;
  double omega_m;
  double kappa;
  double gamma_m;
  double n_th;
  double eps1;
  double eps2;
} omr_system_params;

/* Blockade preset (J = 0.5, g = 0.03, kappa = 1e-3, gamma_m = kappa/200,
 * eps1 = -eps2 = 1.1e-4, n_th = 0). */
OMR_API void omr_system_params_default(omr_system_params* out);

typedef enum omr_model { OMR_MODEL_EFFECTIVE = 0, OMR_MODEL_ORIGINAL = 1 } omr_model;
typedef enum omr_basis { OMR_BASIS_QUASI = 0, OMR_BASIS_PHYSICAL = 1 } omr_basis;
typedef enum omr_thermal { OMR_THERMAL_STANDARD = 0, OMR_THERMAL_LITERAL = 1 } omr_thermal;
typedef enum omr_probe { OMR_PROBE_NONE = 0, OMR_PROBE_MINIMA = 1, OMR_PROBE_ALL = 2 } omr_probe;

typedef struct omr_blockade_options {
  omr_model model;
  omr_basis basis;          /* original model only */
  int cavity_dim;
  int mech_minus_dim;       /* b- (or b1, b2 in the physical basis) */
  int mech_plus_dim;        /* b+ (original model, quasi basis) */
  omr_thermal thermal;
  omr_probe probe;
  double convergence_tolerance;
  unsigned jobs;
} omr_blockade_options;

OMR_API void omr_blockade_options_default(omr_blockade_options* out, omr_model model);

typedef struct omr_blockade_point {
  double delta_minus;
  double g2_mm;
  double g2_pp;
  double g2_mp;
  double n_minus;
  double n_plus;
  double residual;
  double convergence_change;
  int ok;
  int probed;
  int converged;
} omr_blockade_point;

typedef enum omr_correlator { OMR_G2_MM = 0, OMR_G2_PP = 1, OMR_G2_MP = 2 } omr_correlator;

typedef struct omr_minima {
  int has_negative, has_positive, has_global;
  double negative, positive, global;
} omr_minima;

typedef struct omr_blockade_scan omr_blockade_scan;

OMR_API omr_status omr_blockade_scan_run(const omr_system_params* params, const double* delta_minus_grid,
                                         size_t count, const omr_blockade_options* options,
                                         omr_blockade_scan** out);
OMR_API size_t omr_blockade_scan_size(const omr_blockade_scan* scan);
OMR_API omr_status omr_blockade_scan_point(const omr_blockade_scan* scan, size_t index, omr_blockade_point* out);
/* Error message of a failed point, a note naming correlators that are
 * undefined (NaN) because a mode stays empty, or "". Owned by the scan. */
OMR_API const char* omr_blockade_scan_point_error(const omr_blockade_scan* scan, size_t index);
OMR_API omr_status omr_blockade_scan_minima(const omr_blockade_scan* scan, omr_correlator which, omr_minima* out);
OMR_API void omr_blockade_scan_free(omr_blockade_scan* scan);

/* ---- router ------------------------------------------------------------ */

typedef struct omr_router_params {
  double g;
  double gamma;
  double delta_prime;
  double epsilon;
  double delta_minus;
  int has_G1;  /* 0: unit-norm packet, |G1|^2 = epsilon/pi */
  double G1_re, G1_im;
} omr_router_params;

/* Router preset: g = 0, gamma = 0.01, epsilon = 1e-4, delta' = 0. */
OMR_API void omr_router_params_default(omr_router_params* out);

typedef struct omr_port_numbers {
  double n_r_minus;
  double n_l_minus;
  double n_r_plus;
  double n_l_plus;
} omr_port_numbers;

typedef struct omr_port_amplitudes {
  double r_minus[2], l_minus[2], r_plus[2], l_plus[2]; /* (re, im) */
} omr_port_amplitudes;

OMR_API omr_status omr_port_amplitudes_eval(double detuning, double g, double gamma, omr_port_amplitudes* out);
OMR_API omr_status omr_port_numbers_integrated(const omr_router_params* params, omr_port_numbers* out);
/* Literal closed forms; max_imag and singular_dropped may be NULL. */
OMR_API omr_status omr_port_numbers_closed_form(const omr_router_params* params, omr_port_numbers* out,
                                                double* max_imag, int* singular_dropped);

typedef enum omr_port { OMR_PORT_R_MINUS = 0, OMR_PORT_L_MINUS = 1, OMR_PORT_R_PLUS = 2, OMR_PORT_L_PLUS = 3 } omr_port;

typedef struct omr_extremum {
  size_t index;
  double delta_prime;
  double value;
  int is_maximum;
} omr_extremum;

typedef struct omr_router_scan omr_router_scan;

OMR_API omr_status omr_router_scan_run(const omr_router_params* fixed, const double* delta_prime_grid, size_t count,
                                       unsigned jobs, omr_router_scan** out);
OMR_API size_t omr_router_scan_size(const omr_router_scan* scan);
OMR_API omr_status omr_router_scan_point(const omr_router_scan* scan, size_t index, double* delta_prime,
                                         omr_port_numbers* ports, int* ok);
OMR_API const char* omr_router_scan_point_error(const omr_router_scan* scan, size_t index);
OMR_API size_t omr_router_scan_extrema_count(const omr_router_scan* scan, omr_port port);
OMR_API omr_status omr_router_scan_extremum(const omr_router_scan* scan, omr_port port, size_t index,
                                            omr_extremum* out);
OMR_API void omr_router_scan_free(omr_router_scan* scan);

/* n_r_plus and n_l_plus receive g_count * gamma_count values, row-major in g;
 * argmax_gamma receives g_count values (NaN for an all-zero row). */
OMR_API omr_status omr_optimum_surface(const double* g_grid, size_t g_count, const double* gamma_grid,
                                       size_t gamma_count, double epsilon, unsigned jobs, double* n_r_plus,
                                       double* n_l_plus, double* argmax_gamma);

/* ---- waveguide oracle --------------------------------------------------- */

typedef struct omr_oracle_settings {
  size_t min_modes;
  double refinement;
  double dt_factor;
  double packet_halfwidths;
  double t_final;  /* <= 0 selects the default */
  /* Nonzero: add the self-energy of the modes outside the sampled band, which
   * removes the 2 gamma / (pi W) bias of a band of half-width W. */
  int band_correction;
} omr_oracle_settings;

OMR_API void omr_oracle_settings_default(omr_oracle_settings* out);

typedef struct omr_oracle_result {
  omr_port_numbers ports;
  size_t n_modes;
  size_t steps;
  double t_final;
  double dk;
  double span;
  double cavity_weight;
  double norm_drift;
  double cavity_residual;
  double edge_occupation;
  size_t warning_count;
} omr_oracle_result;

OMR_API omr_status omr_oracle_run(const omr_router_params* params, const omr_oracle_settings* settings,
                                  omr_oracle_result* out);

#ifdef __cplusplus
}
#endif

#endif
