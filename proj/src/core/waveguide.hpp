#pragma once

// Discretized-continuum integration of the single-excitation scattering
// problem. Everything is written in the frame rotating at Delta_-, so the two
// cavity quasi-modes sit at zero and a waveguide mode with detuning Delta_k
// sits at omega = Delta_k - Delta_-.
//
// The incident photon enters the minus waveguide from the r port. Splitting
// the minus waveguide into the standing-wave channel d (which couples to a-)
// and the channel c (which does not), half of the packet scatters while the
// other half only picks up free phases. `mu` holds the d-channel packet,
// normalized to one on its own, `eta` the plus-waveguide channel fed by a+,
// and `c` the decoupled copy used to rebuild the port amplitudes.
//
// The eta grid is labelled by its own energy Delta_kJ - Delta_-; the 2J
// offset between the two waveguide labels is a relabelling of the continuum
// and only changes phases.

#include <optional>
#include <string>
#include <vector>

#include "router.hpp"

namespace optomech {

struct ContinuumGrid {
  std::size_t n_modes = 0;
  double span = 0.0;    // full width of the sampled band
  double center = 0.0;  // in the Delta_- frame
  double dk = 0.0;
  double coupling = 0.0;  // sqrt(2) xi sqrt(dk), xi = sqrt(gamma / 2 pi)
  // 1 + a: modes outside the sampled band, eliminated adiabatically, add a
  // self-energy -a * omega (a = 2 gamma / (pi * half-span)) that cancels the
  // principal-value shift of the truncated band. 1 disables the correction.
  double cavity_weight = 1.0;

  double omega(std::size_t j) const { return center - 0.5 * span + dk * (static_cast<double>(j) + 0.5); }
};

struct OracleSettings {
  std::size_t min_modes = 2001;
  // Multiplies the mode count and the number of time steps (convergence runs).
  double refinement = 1.0;
  // Steps per unit of the largest sampled frequency: dt = dt_factor / half-span.
  double dt_factor = 0.25;
  // Extra packet half-widths sampled beyond the minimum window.
  double packet_halfwidths = 100.0;
  std::optional<double> t_final;
  bool band_correction = true;
};

// Band and spacing wide and fine enough for the requested scattering run.
ContinuumGrid make_grid(const RouterParams& p, double t_final, const OracleSettings& settings = {});

// Propagation time that lets both the packet (1/epsilon) and the cavity
// (1/gamma) ring down.
double default_t_final(const RouterParams& p);

struct ExcitationState {
  Complex alpha_minus{};
  Complex alpha_plus{};
  Eigen::VectorXcd mu;
  Eigen::VectorXcd eta;
  Eigen::VectorXcd c;

  // w (|alpha-|^2 + |alpha+|^2) + sum |mu|^2 + sum |eta|^2 with w the grid's
  // cavity_weight (c is tracked separately).
  double norm(double cavity_weight = 1.0) const;
};

ExcitationState init_lorentzian(const ContinuumGrid& grid, double delta_prime, double epsilon);

struct PropagationReport {
  std::size_t steps = 0;
  double dt = 0.0;
  double norm_drift = 0.0;
  double cavity_residual = 0.0;
  double edge_occupation = 0.0;
  std::vector<std::string> warnings;
};

ExcitationState propagate(const ExcitationState& state, const ContinuumGrid& grid, double g, double t_final,
                          std::size_t steps, PropagationReport* report = nullptr);

PortNumbers extract_port_numbers(const ExcitationState& final_state, const ContinuumGrid& grid);

struct OracleResult {
  PortNumbers ports;
  ContinuumGrid grid;
  double t_final = 0.0;
  PropagationReport report;
};

OracleResult run_oracle(const RouterParams& p, const OracleSettings& settings = {});

}  // namespace optomech
