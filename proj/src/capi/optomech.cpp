#include "optomech/optomech.h"

#include <cmath>
#include <limits>
#include <memory>
#include <new>
#include <string>

#include "observables.hpp"
#include "router.hpp"
#include "waveguide.hpp"

struct omr_blockade_scan {
  optomech::BlockadeScan scan;
};

struct omr_router_scan {
  optomech::RouterScan scan;
};

namespace {

thread_local std::string g_last_error;

omr_status set_error(omr_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename Fn>
omr_status guard(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return OMR_OK;
  } catch (const optomech::Error& e) {
    return set_error(static_cast<omr_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(OMR_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(OMR_ERR_INTERNAL, e.what());
  }
}

#define OMR_REQUIRE(ptr)                                                           \
  do {                                                                             \
    if ((ptr) == nullptr) return set_error(OMR_ERR_NULL_POINTER, #ptr " is NULL"); \
  } while (0)

optomech::SystemParams to_core(const omr_system_params& p) {
  optomech::SystemParams s;
  s.J = p.J;
  s.g = p.g;
  s.omega_m = p.omega_m;
  s.kappa = p.kappa;
  s.gamma_m = p.gamma_m;
  s.n_th = p.n_th;
  s.eps1 = p.eps1;
  s.eps2 = p.eps2;
  return s;
}

optomech::BlockadeOptions to_core(const omr_blockade_options& o) {
  optomech::BlockadeOptions b;
  b.model = o.model == OMR_MODEL_ORIGINAL ? optomech::BlockadeModel::original : optomech::BlockadeModel::effective;
  b.basis = o.basis == OMR_BASIS_PHYSICAL ? optomech::OriginalBasis::physical : optomech::OriginalBasis::quasi;
  b.truncation = {o.cavity_dim, o.mech_minus_dim, o.mech_plus_dim};
  b.thermal = o.thermal == OMR_THERMAL_LITERAL ? optomech::ThermalConvention::literal
                                               : optomech::ThermalConvention::standard;
  switch (o.probe) {
    case OMR_PROBE_NONE: b.probe = optomech::ConvergenceProbe::none; break;
    case OMR_PROBE_ALL: b.probe = optomech::ConvergenceProbe::all; break;
    default: b.probe = optomech::ConvergenceProbe::minima; break;
  }
  b.convergence_tolerance = o.convergence_tolerance;
  b.jobs = o.jobs;
  return b;
}

optomech::RouterParams to_core(const omr_router_params& p) {
  optomech::RouterParams r;
  r.g = p.g;
  r.gamma = p.gamma;
  r.delta_prime = p.delta_prime;
  r.epsilon = p.epsilon;
  r.delta_minus = p.delta_minus;
  if (p.has_G1) r.G1 = optomech::Complex(p.G1_re, p.G1_im);
  return r;
}

omr_port_numbers to_c(const optomech::PortNumbers& n) {
  return {n.n_r_minus, n.n_l_minus, n.n_r_plus, n.n_l_plus};
}

const std::vector<optomech::Extremum>* extrema_of(const optomech::RouterScan& scan, omr_port port) {
  switch (port) {
    case OMR_PORT_R_MINUS: return &scan.r_minus_extrema;
    case OMR_PORT_L_MINUS: return &scan.l_minus_extrema;
    case OMR_PORT_R_PLUS: return &scan.r_plus_extrema;
    case OMR_PORT_L_PLUS: return &scan.l_plus_extrema;
  }
  return nullptr;
}

}  // namespace

extern "C" {

const char* omr_version(void) { return "0.1.0"; }

const char* omr_status_string(omr_status status) {
  switch (status) {
    case OMR_OK: return "ok";
    case OMR_ERR_NULL_POINTER: return "null pointer";
    case OMR_ERR_OUT_OF_RANGE: return "index out of range";
    case OMR_ERR_INTERNAL: return "internal error";
    default: break;
  }
  if (status >= OMR_ERR_INVALID_ARGUMENT && status <= OMR_ERR_NORMALIZATION) {
    return optomech::to_string(static_cast<optomech::ErrorCode>(status));
  }
  return "unknown status";
}

const char* omr_last_error(void) { return g_last_error.c_str(); }

void omr_system_params_default(omr_system_params* out) {
  if (!out) return;
  const optomech::SystemParams p = optomech::blockade_preset();
  *out = {p.J, p.g, p.omega_m, p.kappa, p.gamma_m, p.n_th, p.eps1, p.eps2};
}

void omr_blockade_options_default(omr_blockade_options* out, omr_model model) {
  if (!out) return;
  const optomech::Truncation t;
  *out = {model, OMR_BASIS_QUASI, t.cavity, t.mech_minus, t.mech_plus, OMR_THERMAL_STANDARD,
          model == OMR_MODEL_EFFECTIVE ? OMR_PROBE_ALL : OMR_PROBE_MINIMA, 0.01, 1};
}

omr_status omr_blockade_scan_run(const omr_system_params* params, const double* grid, size_t count,
                                 const omr_blockade_options* options, omr_blockade_scan** out) {
  OMR_REQUIRE(params);
  OMR_REQUIRE(grid);
  OMR_REQUIRE(options);
  OMR_REQUIRE(out);
  *out = nullptr;
  return guard([&] {
    auto handle = std::make_unique<omr_blockade_scan>();
    handle->scan = optomech::blockade_scan(to_core(*params), std::vector<double>(grid, grid + count), to_core(*options));
    *out = handle.release();
  });
}

size_t omr_blockade_scan_size(const omr_blockade_scan* scan) { return scan ? scan->scan.points.size() : 0; }

omr_status omr_blockade_scan_point(const omr_blockade_scan* scan, size_t index, omr_blockade_point* out) {
  OMR_REQUIRE(scan);
  OMR_REQUIRE(out);
  if (index >= scan->scan.points.size()) return set_error(OMR_ERR_OUT_OF_RANGE, "point index out of range");
  const auto& p = scan->scan.points[index];
  const double nan = std::numeric_limits<double>::quiet_NaN();
  *out = {p.delta_minus,
          p.ok ? p.values.g2_mm : nan,
          p.ok ? p.values.g2_pp : nan,
          p.ok ? p.values.g2_mp : nan,
          p.ok ? p.values.n_minus : nan,
          p.ok ? p.values.n_plus : nan,
          p.residual,
          p.convergence_change,
          p.ok ? 1 : 0,
          p.probed ? 1 : 0,
          p.converged ? 1 : 0};
  return OMR_OK;
}

const char* omr_blockade_scan_point_error(const omr_blockade_scan* scan, size_t index) {
  if (!scan || index >= scan->scan.points.size()) return "";
  return scan->scan.points[index].error.c_str();
}

omr_status omr_blockade_scan_minima(const omr_blockade_scan* scan, omr_correlator which, omr_minima* out) {
  OMR_REQUIRE(scan);
  OMR_REQUIRE(out);
  const optomech::HalfMinima* m = nullptr;
  switch (which) {
    case OMR_G2_MM: m = &scan->scan.minima_mm; break;
    case OMR_G2_PP: m = &scan->scan.minima_pp; break;
    case OMR_G2_MP: m = &scan->scan.minima_mp; break;
  }
  if (!m) return set_error(OMR_ERR_INVALID_ARGUMENT, "unknown correlator");
  *out = {m->negative.has_value(), m->positive.has_value(), m->global.has_value(), m->negative.value_or(0.0),
          m->positive.value_or(0.0), m->global.value_or(0.0)};
  return OMR_OK;
}

void omr_blockade_scan_free(omr_blockade_scan* scan) { delete scan; }

void omr_router_params_default(omr_router_params* out) {
  if (!out) return;
  const optomech::RouterParams r;
  *out = {r.g, r.gamma, r.delta_prime, r.epsilon, r.delta_minus, 0, 0.0, 0.0};
}

omr_status omr_port_amplitudes_eval(double detuning, double g, double gamma, omr_port_amplitudes* out) {
  OMR_REQUIRE(out);
  return guard([&] {
    const auto a = optomech::port_amplitudes(detuning, g, gamma);
    *out = {{a.r_minus.real(), a.r_minus.imag()},
            {a.l_minus.real(), a.l_minus.imag()},
            {a.r_plus.real(), a.r_plus.imag()},
            {a.l_plus.real(), a.l_plus.imag()}};
  });
}

omr_status omr_port_numbers_integrated(const omr_router_params* params, omr_port_numbers* out) {
  OMR_REQUIRE(params);
  OMR_REQUIRE(out);
  return guard([&] { *out = to_c(optomech::port_numbers_integrated(to_core(*params))); });
}

omr_status omr_port_numbers_closed_form(const omr_router_params* params, omr_port_numbers* out, double* max_imag,
                                        int* singular_dropped) {
  OMR_REQUIRE(params);
  OMR_REQUIRE(out);
  return guard([&] {
    const auto r = optomech::port_numbers_closed_form(to_core(*params));
    *out = to_c(r.values);
    if (max_imag) *max_imag = r.max_imag;
    if (singular_dropped) *singular_dropped = r.singular_terms_dropped ? 1 : 0;
  });
}

omr_status omr_router_scan_run(const omr_router_params* fixed, const double* grid, size_t count, unsigned jobs,
                               omr_router_scan** out) {
  OMR_REQUIRE(fixed);
  OMR_REQUIRE(grid);
  OMR_REQUIRE(out);
  *out = nullptr;
  return guard([&] {
    auto handle = std::make_unique<omr_router_scan>();
    handle->scan = optomech::router_scan(to_core(*fixed), std::vector<double>(grid, grid + count), jobs);
    *out = handle.release();
  });
}

size_t omr_router_scan_size(const omr_router_scan* scan) { return scan ? scan->scan.points.size() : 0; }

omr_status omr_router_scan_point(const omr_router_scan* scan, size_t index, double* delta_prime,
                                 omr_port_numbers* ports, int* ok) {
  OMR_REQUIRE(scan);
  if (index >= scan->scan.points.size()) return set_error(OMR_ERR_OUT_OF_RANGE, "point index out of range");
  const auto& p = scan->scan.points[index];
  if (delta_prime) *delta_prime = p.delta_prime;
  if (ports) *ports = to_c(p.ports);
  if (ok) *ok = p.ok ? 1 : 0;
  return OMR_OK;
}

const char* omr_router_scan_point_error(const omr_router_scan* scan, size_t index) {
  if (!scan || index >= scan->scan.points.size()) return "";
  return scan->scan.points[index].error.c_str();
}

size_t omr_router_scan_extrema_count(const omr_router_scan* scan, omr_port port) {
  if (!scan) return 0;
  const auto* e = extrema_of(scan->scan, port);
  return e ? e->size() : 0;
}

omr_status omr_router_scan_extremum(const omr_router_scan* scan, omr_port port, size_t index, omr_extremum* out) {
  OMR_REQUIRE(scan);
  OMR_REQUIRE(out);
  const auto* e = extrema_of(scan->scan, port);
  if (!e) return set_error(OMR_ERR_INVALID_ARGUMENT, "unknown port");
  if (index >= e->size()) return set_error(OMR_ERR_OUT_OF_RANGE, "extremum index out of range");
  const auto& x = (*e)[index];
  *out = {x.index, x.delta_prime, x.value, x.kind == optomech::ExtremumKind::maximum ? 1 : 0};
  return OMR_OK;
}

void omr_router_scan_free(omr_router_scan* scan) { delete scan; }

omr_status omr_optimum_surface(const double* g_grid, size_t g_count, const double* gamma_grid, size_t gamma_count,
                               double epsilon, unsigned jobs, double* n_r_plus, double* n_l_plus,
                               double* argmax_gamma) {
  OMR_REQUIRE(g_grid);
  OMR_REQUIRE(gamma_grid);
  return guard([&] {
    const auto s = optomech::optimum_surface(std::vector<double>(g_grid, g_grid + g_count),
                                             std::vector<double>(gamma_grid, gamma_grid + gamma_count), epsilon, jobs);
    for (size_t i = 0; i < g_count; ++i) {
      for (size_t j = 0; j < gamma_count; ++j) {
        if (n_r_plus) n_r_plus[i * gamma_count + j] = s.n_r_plus[i][j];
        if (n_l_plus) n_l_plus[i * gamma_count + j] = s.n_l_plus[i][j];
      }
      if (argmax_gamma) argmax_gamma[i] = s.argmax_gamma[i];
    }
  });
}

void omr_oracle_settings_default(omr_oracle_settings* out) {
  if (!out) return;
  const optomech::OracleSettings s;
  *out = {s.min_modes, s.refinement, s.dt_factor, s.packet_halfwidths, 0.0, s.band_correction ? 1 : 0};
}

omr_status omr_oracle_run(const omr_router_params* params, const omr_oracle_settings* settings,
                          omr_oracle_result* out) {
  OMR_REQUIRE(params);
  OMR_REQUIRE(out);
  return guard([&] {
    optomech::OracleSettings s;
    if (settings) {
      s.min_modes = settings->min_modes;
      s.refinement = settings->refinement;
      s.dt_factor = settings->dt_factor;
      s.packet_halfwidths = settings->packet_halfwidths;
      if (settings->t_final > 0.0) s.t_final = settings->t_final;
      s.band_correction = settings->band_correction != 0;
    }
    const auto r = optomech::run_oracle(to_core(*params), s);
    *out = {to_c(r.ports), r.grid.n_modes, r.report.steps, r.t_final, r.grid.dk, r.grid.span, r.grid.cavity_weight,
            r.report.norm_drift, r.report.cavity_residual, r.report.edge_occupation, r.report.warnings.size()};
  });
}

}  // extern "C"
