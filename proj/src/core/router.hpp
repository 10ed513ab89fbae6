#pragma once

// Single-photon scattering off the two-cavity optomechanical node coupled to a
// pair of waveguides. Energies are measured from Delta_-: the photon detuning
// is Dt = Delta_k - Delta_-, and delta' = delta - Delta_- is the packet centre.
//
// The minus-channel coefficients below carry an overall sqrt(2) relative to
// the physical port amplitudes (the incident photon occupies one port of the
// minus waveguide, i.e. half of each standing-wave mode). Port probabilities
// are therefore |coefficient|^2 / 2 for all four ports, and per-mode flux
// conservation reads (|r-|^2 + |l-|^2 + |r+|^2 + |l+|^2) / 2 = 1.

#include <optional>
#include <string>
#include <vector>

#include "fock.hpp"

namespace optomech {

struct RouterParams {
  double g = 0.0;
  double gamma = 0.01;
  double delta_prime = 0.0;
  double epsilon = 1e-4;
  double delta_minus = 0.0;  // only shifts the frame; results depend on delta' alone
  // Packet normalization; unset means |G1|^2 = epsilon/pi (unit-norm packet).
  std::optional<Complex> G1;

  void validate() const;
  // pi |G1|^2 / epsilon: total incident photon number.
  double packet_weight() const;
};

struct PortAmplitudes {
  Complex r_minus, l_minus, r_plus, l_plus;
};

struct PortNumbers {
  double n_r_minus = 0.0;
  double n_l_minus = 0.0;
  double n_r_plus = 0.0;
  double n_l_plus = 0.0;

  double sum() const { return n_r_minus + n_l_minus + n_r_plus + n_l_plus; }
};

PortAmplitudes port_amplitudes(double detuning, double g, double gamma);

struct QuadratureOptions {
  double relative_tolerance = 1e-6;
  double absolute_floor = 1e-12;
  unsigned max_depth = 25;
};

// Lorentzian-weighted port probabilities, integrated over the whole detuning
// axis after the substitution Dt = delta' + epsilon tan(theta).
PortNumbers port_numbers_integrated(const RouterParams& p, const QuadratureOptions& q = {});

struct ClosedFormResult {
  PortNumbers values;     // real parts
  double max_imag = 0.0;  // largest imaginary part left over by the closed expressions
  bool singular_terms_dropped = false;
};

// The closed forms, term by term, with F_{s t} = delta' + s g/sqrt(2) + t gamma + i epsilon,
// evaluated literally (including the fragments that lack a g*gamma factor).
// At g = 0 the 1/(4 g gamma) terms diverge; they are dropped and flagged.
ClosedFormResult port_numbers_closed_form(const RouterParams& p);

enum class ExtremumKind { maximum, minimum };

struct Extremum {
  std::size_t index;
  double delta_prime;
  double value;
  ExtremumKind kind;
};

// Strict three-point local extrema of a sampled curve.
std::vector<Extremum> local_extrema(const std::vector<double>& x, const std::vector<double>& y);

struct RouterPoint {
  double delta_prime = 0.0;
  bool ok = false;
  std::string error;
  PortNumbers ports;
};

struct RouterScan {
  std::vector<RouterPoint> points;
  std::vector<Extremum> r_minus_extrema, l_minus_extrema, r_plus_extrema, l_plus_extrema;
  std::size_t failures = 0;
};

RouterScan router_scan(const RouterParams& fixed, const std::vector<double>& delta_prime_grid, unsigned jobs = 1,
                       const QuadratureOptions& q = {});

struct OptimumSurface {
  std::vector<double> g_grid;
  std::vector<double> gamma_grid;
  std::vector<std::vector<double>> n_r_plus;  // [g][gamma]
  std::vector<std::vector<double>> n_l_plus;
  std::vector<double> argmax_gamma;           // per g; NaN if the row is identically zero
};

OptimumSurface optimum_surface(const std::vector<double>& g_grid, const std::vector<double>& gamma_grid,
                               double epsilon, unsigned jobs = 1, const QuadratureOptions& q = {});

std::vector<double> logspace(double lo, double hi, std::size_t count);

}  // namespace optomech
