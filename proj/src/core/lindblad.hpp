#pragma once

// Markovian open-system dynamics
//
//   d rho/dt = -i[H, rho] + sum_c rate_c (2 c rho c^dag - c^dag c rho - rho c^dag c).
//
// The rate multiplies the whole bracket, so a channel with rate k damps the
// field amplitude at k and the occupation at 2k.
//
// Vectorization is row-major: vec(rho)[i*n + j] = rho(i, j), which gives
// vec(A rho B) = (A (x) B^T) vec(rho).

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fock.hpp"

namespace optomech {

class DensityMatrix {
 public:
  DensityMatrix() = default;
  DensityMatrix(ModeSpace space, DenseMatrix matrix);

  static DensityMatrix pure(const ModeSpace& space, const StateVector& state);
  static DensityMatrix basis(const ModeSpace& space, std::span<const int> occupations);
  static DensityMatrix vacuum(const ModeSpace& space);
  // Single-mode thermal state with mean occupation nbar, renormalized on the truncation.
  static DensityMatrix thermal(int dim, double nbar);

  const ModeSpace& space() const noexcept { return space_; }
  const DenseMatrix& matrix() const noexcept { return matrix_; }
  std::size_t dim() const noexcept { return space_.total_dim(); }

  Complex trace() const { return matrix_.trace(); }
  double purity() const;
  double hermiticity_residual() const;
  double min_eigenvalue() const;

 private:
  ModeSpace space_;
  DenseMatrix matrix_;
};

struct CollapseChannel {
  QOperator op;
  double rate = 0.0;
};

// How the mechanical bath enters. `standard` uses gamma_m (n_th + 1) on b and
// gamma_m n_th on b^dag. `literal` keeps the heating channel at gamma_m with no
// thermal factor, taking the master equation term by term. The two differ even
// at n_th = 0, where `literal` still heats at gamma_m.
enum class ThermalConvention { standard, literal };

std::vector<CollapseChannel> mechanical_channels(const QOperator& b, double gamma_m, double n_th,
                                                 ThermalConvention convention = ThermalConvention::standard);

// Precomputed generator: H_eff = H - i sum rate c^dag c and the jump list.
class Liouvillian {
 public:
  Liouvillian(const QOperator& hamiltonian, std::vector<CollapseChannel> channels);

  const ModeSpace& space() const noexcept { return space_; }
  const QOperator& hamiltonian() const noexcept { return hamiltonian_; }
  const std::vector<CollapseChannel>& channels() const noexcept { return channels_; }

  DenseMatrix apply(const DenseMatrix& rho) const;
  // Full superoperator on row-major vec(rho).
  SparseMatrix superoperator() const;
  // Upper bound on the generator's spectral radius (Gershgorin-style).
  double frequency_scale() const;

 private:
  ModeSpace space_;
  QOperator hamiltonian_;
  std::vector<CollapseChannel> channels_;
  SparseMatrix h_eff_;
  std::vector<std::pair<SparseMatrix, SparseMatrix>> jumps_;  // (sqrt(2 rate) c, its adjoint)
};

DenseMatrix liouvillian_rhs(const QOperator& hamiltonian, const std::vector<CollapseChannel>& channels,
                            const DensityMatrix& rho);

Eigen::VectorXcd vectorize(const DenseMatrix& rho);
DenseMatrix unvectorize(const Eigen::VectorXcd& vec, std::size_t n);

struct EvolveEvent {
  double time;
  double trace_drift;
  std::string message;
};

struct EvolveControls {
  // Upper bound on the RK4 step; the integrator never exceeds
  // 0.02 / frequency_scale regardless.
  std::optional<double> max_step;
  // Overrides the Gershgorin bound used for the step rule.
  std::optional<double> frequency_scale;
  std::function<void(const EvolveEvent&)> on_event;
};

struct EvolveReport {
  std::size_t steps = 0;
  double step = 0.0;
  int renormalizations = 0;
  double max_trace_drift = 0.0;
};

DensityMatrix evolve(const QOperator& hamiltonian, const std::vector<CollapseChannel>& channels,
                     const DensityMatrix& rho0, double t_final, const EvolveControls& controls = {},
                     EvolveReport* report = nullptr);

enum class SteadyStateMethod {
  automatic,
  dense_lu,      // dense LU of the trace-constrained superoperator
  sparse_lu,     // sparse LU of the same system
  sector_gmres,  // GMRES preconditioned by the excitation-sector block solve
  long_time,     // fixed-step evolution until the generator residual vanishes
};

const char* to_string(SteadyStateMethod method) noexcept;

struct SteadyStateOptions {
  SteadyStateMethod method = SteadyStateMethod::automatic;
  // Modes whose summed occupation grades the basis for sector_gmres
  // (typically the cavity modes). Empty disables the sector method.
  std::vector<std::size_t> excitation_slots;
  // automatic picks dense LU up to this superoperator dimension.
  std::size_t dense_limit = 1024;
  double residual_tolerance = 1e-9;
  double gmres_tolerance = 1e-13;
  int gmres_restart = 120;
  int gmres_max_iterations = 3000;
  // long_time: stop once max |L[rho]| drops below this.
  double long_time_tolerance = 1e-10;
  double long_time_max = 1e8;
  std::optional<double> long_time_step;
  std::optional<DensityMatrix> initial_guess;
};

struct SteadyStateReport {
  SteadyStateMethod method = SteadyStateMethod::automatic;
  int iterations = 0;
  double residual = 0.0;
  double elapsed_time = 0.0;  // physical time for long_time
};

DensityMatrix steady_state(const QOperator& hamiltonian, const std::vector<CollapseChannel>& channels,
                           const SteadyStateOptions& options = {}, SteadyStateReport* report = nullptr);

}  // namespace optomech
