#pragma once

// Hamiltonians of two coupled optomechanical cavities in three pictures.
// All energies are in units of the mechanical frequency (omega_m = 1 by
// convention, although the builders accept any positive value).
//
// Slot assignments (see fock.hpp for the index convention):
//   physical  : a1 = 0, a2 = 1, b1 = 2, b2 = 3
//   quasi-mode: a- = 0, a+ = 1, b- = 2, b+ = 3
//   effective : a- = 0, a+ = 1, b- = 2
// with a+- = (a1 +- a2)/sqrt(2) and b+- = (b1 +- b2)/sqrt(2).
//
// The hopping term enters the rotating-frame Hamiltonian as -J(a1^dag a2 + h.c.),
// which is what makes Delta_+- = Delta -+ J.

#include <optional>

#include "fock.hpp"

namespace optomech {

namespace slot {
inline constexpr std::size_t a1 = 0, a2 = 1, b1 = 2, b2 = 3;
inline constexpr std::size_t a_minus = 0, a_plus = 1, b_minus = 2, b_plus = 3;
}  // namespace slot

struct SystemParams {
  double delta = 0.0;    // cavity-laser detuning Delta
  double J = 0.5;        // inter-cavity hopping
  double g = 0.03;       // single-photon optomechanical coupling (cavity 1)
  double omega_m = 1.0;  // mechanical frequency (resonator 1)
  double kappa = 1e-3;
  double gamma_m = 5e-6;
  double n_th = 0.0;
  double eps1 = 1.1e-4;
  double eps2 = -1.1e-4;
  // Cavity/resonator 2; unset means identical to cavity/resonator 1.
  std::optional<double> g2;
  std::optional<double> omega_m2;

  double coupling2() const { return g2.value_or(g); }
  double mech_frequency2() const { return omega_m2.value_or(omega_m); }
  bool symmetric() const { return coupling2() == g && mech_frequency2() == omega_m; }
  // The three-wave resonance omega_m = 2J that the effective model relies on.
  bool rwa_resonant() const;

  void validate() const;
};

struct DerivedParams {
  double delta_plus;   // Delta - J
  double delta_minus;  // Delta + J
  double eps_plus;     // (eps1 + eps2)/sqrt(2)
  double eps_minus;    // (eps1 - eps2)/sqrt(2)
};

DerivedParams derive(const SystemParams& p);

// Blockade preset with the hopping chosen on the three-wave resonance
// (omega_m = 2J).
SystemParams blockade_preset();
// Same set with J = 2 omega_m, off the three-wave resonance. Only usable
// with the original or quasi-mode builders.
SystemParams blockade_off_resonance_preset();

ModeSpace physical_space(int cavity_dim, int mech_dim);
ModeSpace quasimode_space(int cavity_dim, int mech_minus_dim, int mech_plus_dim);
ModeSpace effective_space(int cavity_dim, int mech_dim);

QOperator build_original_hamiltonian(const SystemParams& p, const ModeSpace& space);
QOperator build_quasimode_hamiltonian(const SystemParams& p, const ModeSpace& space);
QOperator build_effective_hamiltonian(const SystemParams& p, const ModeSpace& space);

enum class TransformDirection { physical_to_quasi, quasi_to_physical };

// 50/50 beam-splitter map taking (a1, a2) -> (a-, a+) and, for four-mode
// spaces, (b1, b2) -> (b-, b+). Both pairs must share their truncation. The
// map is exact (unitary) on states whose per-pair excitation number stays
// below the pair's truncation; inputs with weight outside that sector are
// rejected rather than silently clipped.
class QuasiModeTransform {
 public:
  explicit QuasiModeTransform(ModeSpace space);

  const ModeSpace& space() const noexcept { return space_; }
  StateVector apply(TransformDirection direction, const StateVector& state) const;
  DenseMatrix apply(TransformDirection direction, const DenseMatrix& rho) const;
  // Norm of the component outside the exactly-transformable sector.
  double leakage(const StateVector& state) const;
  bool representable(std::size_t basis_index) const;

 private:
  ModeSpace space_;
  SparseMatrix to_quasi_;
  std::vector<char> representable_;
};

}  // namespace optomech
