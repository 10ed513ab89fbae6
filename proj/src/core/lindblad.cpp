#include "lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

namespace optomech {

namespace {

constexpr Complex kI{0.0, 1.0};

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
  std::vector<Eigen::Triplet<Complex>> entries;
  entries.reserve(static_cast<std::size_t>(a.nonZeros() * b.nonZeros()));
  for (Eigen::Index ka = 0; ka < a.outerSize(); ++ka) {
    for (SparseMatrix::InnerIterator ia(a, ka); ia; ++ia) {
      for (Eigen::Index kb = 0; kb < b.outerSize(); ++kb) {
        for (SparseMatrix::InnerIterator ib(b, kb); ib; ++ib) {
          entries.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(),
                               ia.value() * ib.value());
        }
      }
    }
  }
  SparseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

SparseMatrix sparse_identity(Eigen::Index n) {
  SparseMatrix id(n, n);
  id.setIdentity();
  return id;
}

SparseMatrix build_superoperator(const SparseMatrix& h_eff,
                                 const std::vector<std::pair<SparseMatrix, SparseMatrix>>& jumps) {
  const Eigen::Index n = h_eff.rows();
  const SparseMatrix id = sparse_identity(n);
  SparseMatrix l = -kI * kron(h_eff, id) + kI * kron(id, SparseMatrix(h_eff.conjugate()));
  for (const auto& [jump, jump_adj] : jumps) l += kron(jump, SparseMatrix(jump.conjugate()));
  l.makeCompressed();
  return l;
}

// Replaces row `row` of a column-major sparse matrix with `replacement`
// (given as column -> value pairs).
SparseMatrix replace_row(const SparseMatrix& m, Eigen::Index row,
                         const std::vector<std::pair<Eigen::Index, Complex>>& replacement) {
  std::vector<Eigen::Triplet<Complex>> entries;
  entries.reserve(static_cast<std::size_t>(m.nonZeros()) + replacement.size());
  for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      if (it.row() != row) entries.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (const auto& [col, v] : replacement) entries.emplace_back(row, col, v);
  SparseMatrix out(m.rows(), m.cols());
  out.setFromTriplets(entries.begin(), entries.end());
  out.makeCompressed();
  return out;
}

std::vector<std::pair<Eigen::Index, Complex>> trace_row(std::size_t n, const std::vector<int>* grade = nullptr) {
  std::vector<std::pair<Eigen::Index, Complex>> row;
  for (std::size_t i = 0; i < n; ++i) {
    if (grade && (*grade)[i] != 0) continue;
    row.emplace_back(static_cast<Eigen::Index>(i * n + i), Complex(1.0, 0.0));
  }
  return row;
}

double max_abs(const DenseMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

DenseMatrix finalize_density(const DenseMatrix& raw) {
  DenseMatrix rho = 0.5 * (raw + raw.adjoint());
  const Complex tr = rho.trace();
  if (!(std::abs(tr) > 0.0) || !std::isfinite(tr.real())) {
    fail(ErrorCode::degenerate_steady_state, "steady-state solve produced a traceless or non-finite result");
  }
  return rho / tr.real();
}

// Block solve of the excitation-graded, drive-free part of the
// trace-constrained Liouvillian. Sectors (N, N') are labelled by the ket and
// bra excitation numbers; the drive-free generator keeps each sector and feeds
// only (N+1, N'+1) -> (N, N') through photon-lowering jumps, so the system is
// block triangular and can be solved from the top sector down.
class SectorSolve {
 public:
  static std::shared_ptr<SectorSolve> build(const SparseMatrix& precond_matrix, const std::vector<int>& grade,
                                            int max_grade) {
    auto self = std::make_shared<SectorSolve>();
    const std::size_t n = grade.size();
    const int width = max_grade + 1;
    self->width_ = width;
    self->max_grade_ = max_grade;
    self->sector_of_.resize(n * n);
    self->members_.assign(static_cast<std::size_t>(width * width), {});
    self->position_.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t k = i * n + j;
        const int s = grade[i] * width + grade[j];
        self->sector_of_[k] = s;
        self->position_[k] = static_cast<Eigen::Index>(self->members_[static_cast<std::size_t>(s)].size());
        self->members_[static_cast<std::size_t>(s)].push_back(static_cast<Eigen::Index>(k));
      }
    }

    const std::size_t sectors = self->members_.size();
    std::vector<std::vector<Eigen::Triplet<Complex>>> diag(sectors), upper(sectors);
    for (Eigen::Index col = 0; col < precond_matrix.outerSize(); ++col) {
      const int sc = self->sector_of_[static_cast<std::size_t>(col)];
      for (SparseMatrix::InnerIterator it(precond_matrix, col); it; ++it) {
        const int sr = self->sector_of_[static_cast<std::size_t>(it.row())];
        const Eigen::Index pr = self->position_[static_cast<std::size_t>(it.row())];
        const Eigen::Index pc = self->position_[static_cast<std::size_t>(col)];
        if (sr == sc) {
          diag[static_cast<std::size_t>(sr)].emplace_back(pr, pc, it.value());
        } else if (sc == sr + width + 1) {
          upper[static_cast<std::size_t>(sr)].emplace_back(pr, pc, it.value());
        } else {
          return nullptr;  // not block triangular in this grading
        }
      }
    }

    self->lu_.resize(sectors);
    self->coupling_.resize(sectors);
    for (std::size_t s = 0; s < sectors; ++s) {
      const auto m = static_cast<Eigen::Index>(self->members_[s].size());
      if (m == 0) continue;
      SparseMatrix block(m, m);
      block.setFromTriplets(diag[s].begin(), diag[s].end());
      block.makeCompressed();
      self->lu_[s] = std::make_unique<Eigen::SparseLU<SparseMatrix>>();
      self->lu_[s]->analyzePattern(block);
      self->lu_[s]->factorize(block);
      if (self->lu_[s]->info() != Eigen::Success) {
        const int nk = static_cast<int>(s) / width, nb = static_cast<int>(s) % width;
        fail(ErrorCode::degenerate_steady_state,
             "excitation sector (" + std::to_string(nk) + ", " + std::to_string(nb) +
                 ") has no unique solution; some excitation never decays");
      }
      const std::size_t up = s + static_cast<std::size_t>(width) + 1;
      if (!upper[s].empty() && up < sectors) {
        SparseMatrix c(m, static_cast<Eigen::Index>(self->members_[up].size()));
        c.setFromTriplets(upper[s].begin(), upper[s].end());
        c.makeCompressed();
        self->coupling_[s] = std::move(c);
      }
    }
    return self;
  }

  Eigen::VectorXcd solve(const Eigen::VectorXcd& r) const {
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(r.size());
    for (int d = -max_grade_; d <= max_grade_; ++d) {
      for (int nk = max_grade_; nk >= 0; --nk) {
        const int nb = nk - d;
        if (nb < 0 || nb > max_grade_) continue;
        const auto s = static_cast<std::size_t>(nk * width_ + nb);
        const auto& idx = members_[s];
        if (idx.empty()) continue;
        Eigen::VectorXcd rhs(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t p = 0; p < idx.size(); ++p) rhs[static_cast<Eigen::Index>(p)] = r[idx[p]];
        if (coupling_[s].size() > 0) {
          const auto& up_idx = members_[s + static_cast<std::size_t>(width_) + 1];
          Eigen::VectorXcd xu(static_cast<Eigen::Index>(up_idx.size()));
          for (std::size_t p = 0; p < up_idx.size(); ++p) xu[static_cast<Eigen::Index>(p)] = x[up_idx[p]];
          rhs -= coupling_[s] * xu;
        }
        const Eigen::VectorXcd xs = lu_[s]->solve(rhs);
        for (std::size_t p = 0; p < idx.size(); ++p) x[idx[p]] = xs[static_cast<Eigen::Index>(p)];
      }
    }
    return x;
  }

 private:
  int width_ = 0;
  int max_grade_ = 0;
  std::vector<int> sector_of_;
  std::vector<Eigen::Index> position_;
  std::vector<std::vector<Eigen::Index>> members_;
  std::vector<std::unique_ptr<Eigen::SparseLU<SparseMatrix>>> lu_;
  std::vector<SparseMatrix> coupling_;
};

// Adapter exposing SectorSolve through Eigen's preconditioner interface.
class SectorPreconditioner {
 public:
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

  SectorPreconditioner() = default;
  void attach(std::shared_ptr<const SectorSolve> solve) { solve_ = std::move(solve); }

  template <typename MatType>
  SectorPreconditioner& analyzePattern(const MatType&) { return *this; }
  template <typename MatType>
  SectorPreconditioner& factorize(const MatType&) { return *this; }
  template <typename MatType>
  SectorPreconditioner& compute(const MatType&) { return *this; }

  template <typename Rhs>
  Eigen::VectorXcd solve(const Rhs& b) const { return solve_->solve(Eigen::VectorXcd(b)); }

  Eigen::ComputationInfo info() { return Eigen::Success; }

 private:
  std::shared_ptr<const SectorSolve> solve_;
};

struct Rk4Stepper {
  const Liouvillian& generator;
  DenseMatrix k1, k2, k3, k4;

  void step(DenseMatrix& rho, double dt) {
    k1 = generator.apply(rho);
    k2 = generator.apply(rho + (0.5 * dt) * k1);
    k3 = generator.apply(rho + (0.5 * dt) * k2);
    k4 = generator.apply(rho + dt * k3);
    rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
};

double pick_step(const Liouvillian& generator, double t_final, const EvolveControls& controls,
                 std::size_t& steps) {
  const double scale = controls.frequency_scale.value_or(generator.frequency_scale());
  double dt = scale > 0.0 ? 0.02 / scale : t_final;
  if (controls.max_step) dt = std::min(dt, *controls.max_step);
  steps = static_cast<std::size_t>(std::ceil(t_final / dt));
  if (steps == 0) steps = 1;
  return t_final / static_cast<double>(steps);
}

}  // namespace

DensityMatrix::DensityMatrix(ModeSpace space, DenseMatrix matrix) : space_(std::move(space)), matrix_(std::move(matrix)) {
  const auto n = static_cast<Eigen::Index>(space_.total_dim());
  if (matrix_.rows() != n || matrix_.cols() != n) {
    fail(ErrorCode::invalid_dimension, "density matrix shape does not match its mode space");
  }
  if (!matrix_.allFinite()) fail(ErrorCode::invalid_argument, "density matrix has non-finite entries");
  if (std::abs(matrix_.trace() - Complex(1.0, 0.0)) > 1e-6) {
    fail(ErrorCode::invalid_argument, "density matrix trace deviates from 1");
  }
  if (hermiticity_residual() > 1e-6) fail(ErrorCode::invalid_argument, "density matrix is not Hermitian");
}

DensityMatrix DensityMatrix::pure(const ModeSpace& space, const StateVector& state) {
  if (state.size() != static_cast<Eigen::Index>(space.total_dim())) {
    fail(ErrorCode::invalid_dimension, "state length does not match mode space");
  }
  const double norm = state.norm();
  if (!(norm > 0.0)) fail(ErrorCode::invalid_argument, "cannot build a density matrix from a zero state");
  const StateVector psi = state / norm;
  return DensityMatrix(space, psi * psi.adjoint());
}

DensityMatrix DensityMatrix::basis(const ModeSpace& space, std::span<const int> occupations) {
  return pure(space, basis_state(space, occupations));
}

DensityMatrix DensityMatrix::vacuum(const ModeSpace& space) {
  const std::vector<int> zeros(space.modes(), 0);
  return basis(space, zeros);
}

DensityMatrix DensityMatrix::thermal(int dim, double nbar) {
  if (!(nbar >= 0.0)) fail(ErrorCode::invalid_argument, "thermal occupation must be >= 0");
  const ModeSpace space({dim});
  DenseMatrix m = DenseMatrix::Zero(dim, dim);
  const double ratio = nbar / (1.0 + nbar);
  double total = 0.0;
  for (int n = 0; n < dim; ++n) {
    m(n, n) = std::pow(ratio, n);
    total += std::pow(ratio, n);
  }
  return DensityMatrix(space, m / total);
}

double DensityMatrix::purity() const { return (matrix_ * matrix_).trace().real(); }

double DensityMatrix::hermiticity_residual() const { return max_abs(DenseMatrix(matrix_ - matrix_.adjoint())); }

double DensityMatrix::min_eigenvalue() const {
  const DenseMatrix herm = 0.5 * (matrix_ + matrix_.adjoint());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(herm, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

std::vector<CollapseChannel> mechanical_channels(const QOperator& b, double gamma_m, double n_th,
                                                 ThermalConvention convention) {
  if (!(gamma_m >= 0.0) || !(n_th >= 0.0)) fail(ErrorCode::invalid_argument, "mechanical rates must be >= 0");
  std::vector<CollapseChannel> out;
  out.push_back({b, gamma_m * (n_th + 1.0)});
  const double heating = convention == ThermalConvention::standard ? gamma_m * n_th : gamma_m;
  if (heating > 0.0) out.push_back({dagger(b), heating});
  return out;
}

Liouvillian::Liouvillian(const QOperator& hamiltonian, std::vector<CollapseChannel> channels)
    : space_(hamiltonian.space()), hamiltonian_(hamiltonian), channels_(std::move(channels)) {
  h_eff_ = hamiltonian.matrix();
  for (const auto& c : channels_) {
    require_same_space(space_, c.op.space(), "Liouvillian channel");
    if (!(c.rate >= 0.0) || !std::isfinite(c.rate)) fail(ErrorCode::invalid_argument, "collapse rate must be >= 0");
    if (c.rate == 0.0) continue;
    const SparseMatrix& op = c.op.matrix();
    const SparseMatrix op_adj = op.adjoint();
    h_eff_ -= kI * c.rate * SparseMatrix(op_adj * op);
    const SparseMatrix jump = std::sqrt(2.0 * c.rate) * op;
    jumps_.emplace_back(jump, SparseMatrix(jump.adjoint()));
  }
  h_eff_.makeCompressed();
}

DenseMatrix Liouvillian::apply(const DenseMatrix& rho) const {
  const SparseMatrix h_eff_adj = h_eff_.adjoint();
  DenseMatrix out = -kI * (h_eff_ * rho) + kI * (rho * h_eff_adj);
  for (const auto& [jump, jump_adj] : jumps_) out += (jump * rho) * jump_adj;
  return out;
}

SparseMatrix Liouvillian::superoperator() const { return build_superoperator(h_eff_, jumps_); }

double Liouvillian::frequency_scale() const {
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(h_eff_.rows());
  for (Eigen::Index k = 0; k < h_eff_.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(h_eff_, k); it; ++it) row_sums[it.row()] += std::abs(it.value());
  }
  double bound = 2.0 * (row_sums.size() ? row_sums.maxCoeff() : 0.0);
  for (const auto& [jump, jump_adj] : jumps_) {
    double worst = 0.0;
    for (Eigen::Index k = 0; k < jump.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(jump, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
    }
    bound += worst * worst;
  }
  return bound;
}

DenseMatrix liouvillian_rhs(const QOperator& hamiltonian, const std::vector<CollapseChannel>& channels,
                            const DensityMatrix& rho) {
  require_same_space(hamiltonian.space(), rho.space(), "liouvillian_rhs");
  return Liouvillian(hamiltonian, channels).apply(rho.matrix());
}

Eigen::VectorXcd vectorize(const DenseMatrix& rho) {
  const Eigen::Index n = rho.rows();
  Eigen::VectorXcd v(n * rho.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < rho.cols(); ++j) v[i * rho.cols() + j] = rho(i, j);
  }
  return v;
}

DenseMatrix unvectorize(const Eigen::VectorXcd& vec, std::size_t n) {
  const auto ni = static_cast<Eigen::Index>(n);
  if (vec.size() != ni * ni) fail(ErrorCode::invalid_dimension, "unvectorize: length is not n^2");
  DenseMatrix rho(ni, ni);
  for (Eigen::Index i = 0; i < ni; ++i) {
    for (Eigen::Index j = 0; j < ni; ++j) rho(i, j) = vec[i * ni + j];
  }
  return rho;
}

DensityMatrix evolve(const QOperator& hamiltonian, const std::vector<CollapseChannel>& channels,
                     const DensityMatrix& rho0, double t_final, const EvolveControls& controls,
                     EvolveReport* report) {
  require_same_space(hamiltonian.space(), rho0.space(), "evolve");
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) fail(ErrorCode::invalid_argument, "t_final must be >= 0");
  if (t_final == 0.0) {
    if (report) *report = EvolveReport{};
    return rho0;
  }
  const Liouvillian generator(hamiltonian, channels);
  std::size_t steps = 0;
  const double dt = pick_step(generator, t_final, controls, steps);

  EvolveReport local;
  local.step = dt;
  DenseMatrix rho = rho0.matrix();
  Rk4Stepper stepper{generator, {}, {}, {}, {}};
  for (std::size_t s = 0; s < steps; ++s) {
    stepper.step(rho, dt);
    const Complex tr = rho.trace();
    const double drift = std::abs(tr - Complex(1.0, 0.0));
    local.max_trace_drift = std::max(local.max_trace_drift, drift);
    if (drift > 1e-6 || !std::isfinite(drift)) {
      fail(ErrorCode::integration_failure, "trace drifted by " + std::to_string(drift) + " at t = " +
                                               std::to_string(dt * static_cast<double>(s + 1)) +
                                               "; reduce the step");
    }
    if (drift > 1e-9) {
      rho /= tr;
      ++local.renormalizations;
      if (controls.on_event) {
        controls.on_event({dt * static_cast<double>(s + 1), drift, "trace renormalized"});
      }
    }
  }
  local.steps = steps;
  if (report) *report = local;
  return DensityMatrix(rho0.space(), 0.5 * (rho + rho.adjoint()));
}

const char* to_string(SteadyStateMethod method) noexcept {
  switch (method) {
    case SteadyStateMethod::automatic: return "automatic";
    case SteadyStateMethod::dense_lu: return "dense_lu";
    case SteadyStateMethod::sparse_lu: return "sparse_lu";
    case SteadyStateMethod::sector_gmres: return "sector_gmres";
    case SteadyStateMethod::long_time: return "long_time";
  }
  return "unknown";
}

namespace {

// Excitation grade of each basis state, or empty if the Hamiltonian/channels
// do not have the structure the sector method needs.
std::vector<int> excitation_grade(const ModeSpace& space, const std::vector<std::size_t>& slots) {
  std::vector<int> grade(space.total_dim(), 0);
  for (std::size_t i = 0; i < grade.size(); ++i) {
    for (std::size_t s : slots) grade[i] += space.occupation(i, s);
  }
  return grade;
}

bool channel_shift_ok(const SparseMatrix& op, const std::vector<int>& grade) {
  std::optional<int> shift;
  for (Eigen::Index k = 0; k < op.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(op, k); it; ++it) {
      if (it.value() == Complex{}) continue;
      const int s = grade[static_cast<std::size_t>(it.row())] - grade[static_cast<std::size_t>(it.col())];
      if (shift && *shift != s) return false;
      shift = s;
    }
  }
  return !shift || *shift == 0 || *shift == -1;
}

DenseMatrix solve_long_time(const Liouvillian& generator, const SteadyStateOptions& options,
                            SteadyStateReport& report) {
  DenseMatrix rho = options.initial_guess ? options.initial_guess->matrix()
                                          : DensityMatrix::vacuum(generator.space()).matrix();
  const double scale = generator.frequency_scale();
  const double dt = options.long_time_step.value_or(scale > 0.0 ? 1.0 / scale : 1.0);
  Rk4Stepper stepper{generator, {}, {}, {}, {}};
  double t = 0.0;
  const int check_every = 200;
  while (true) {
    for (int s = 0; s < check_every; ++s) stepper.step(rho, dt);
    t += dt * check_every;
    rho /= rho.trace();
    const double residual = max_abs(generator.apply(rho));
    if (residual < options.long_time_tolerance) {
      report.elapsed_time = t;
      return rho;
    }
    if (t > options.long_time_max || !std::isfinite(residual)) {
      fail(ErrorCode::not_converged, "long-time evolution did not reach a steady state by t = " +
                                         std::to_string(t) + " (residual " + std::to_string(residual) + ")");
    }
  }
}

}  // namespace

DensityMatrix steady_state(const QOperator& hamiltonian, const std::vector<CollapseChannel>& channels,
                           const SteadyStateOptions& options, SteadyStateReport* report) {
  const Liouvillian generator(hamiltonian, channels);
  const ModeSpace& space = hamiltonian.space();
  const std::size_t n = space.total_dim();
  const std::size_t n2 = n * n;
  SteadyStateReport local;

  SteadyStateMethod method = options.method;
  std::vector<int> grade;
  if (method == SteadyStateMethod::automatic || method == SteadyStateMethod::sector_gmres) {
    if (!options.excitation_slots.empty()) {
      for (std::size_t s : options.excitation_slots) {
        if (s >= space.modes()) fail(ErrorCode::invalid_argument, "excitation slot out of range");
      }
      grade = excitation_grade(space, options.excitation_slots);
      for (const auto& c : channels) {
        if (c.rate > 0.0 && !channel_shift_ok(c.op.matrix(), grade)) {
          grade.clear();
          break;
        }
      }
    }
  }
  if (method == SteadyStateMethod::automatic) {
    if (n2 <= options.dense_limit) {
      method = SteadyStateMethod::dense_lu;
    } else if (!grade.empty()) {
      method = SteadyStateMethod::sector_gmres;
    } else {
      method = SteadyStateMethod::sparse_lu;
    }
  }
  if (method == SteadyStateMethod::sector_gmres && grade.empty()) {
    fail(ErrorCode::invalid_argument,
         "sector_gmres needs excitation slots that every channel conserves or lowers by one");
  }
  if (method == SteadyStateMethod::dense_lu && n2 > 4096) {
    fail(ErrorCode::invalid_argument, "dense_lu is limited to superoperator dimension 4096");
  }
  local.method = method;

  DenseMatrix rho;
  if (method == SteadyStateMethod::long_time) {
    rho = solve_long_time(generator, options, local);
  } else {
    const SparseMatrix full = generator.superoperator();
    const SparseMatrix constrained = replace_row(full, 0, trace_row(n));
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n2));
    rhs[0] = 1.0;
    Eigen::VectorXcd x;

    if (method == SteadyStateMethod::dense_lu) {
      const DenseMatrix dense(constrained);
      Eigen::PartialPivLU<DenseMatrix> lu(dense);
      // A vanishing pivot means a second stationary state; partial pivoting
      // leaves it in U instead of failing, and rcond can miss it.
      const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
      if (!(lu.rcond() > 1e-15) || !(pivots.minCoeff() > 1e-14 * pivots.maxCoeff())) {
        fail(ErrorCode::degenerate_steady_state, "Liouvillian null space is not one-dimensional");
      }
      x = lu.solve(rhs);
    } else if (method == SteadyStateMethod::sparse_lu) {
      Eigen::SparseLU<SparseMatrix> lu;
      lu.analyzePattern(constrained);
      lu.factorize(constrained);
      if (lu.info() != Eigen::Success) {
        fail(ErrorCode::degenerate_steady_state, "Liouvillian null space is not one-dimensional");
      }
      x = lu.solve(rhs);
    } else {
      // Drive-free part: drop Hamiltonian entries that change the grade.
      const SparseMatrix& h = hamiltonian.matrix();
      std::vector<Eigen::Triplet<Complex>> kept;
      for (Eigen::Index k = 0; k < h.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(h, k); it; ++it) {
          if (grade[static_cast<std::size_t>(it.row())] == grade[static_cast<std::size_t>(it.col())]) {
            kept.emplace_back(it.row(), it.col(), it.value());
          }
        }
      }
      SparseMatrix h0(h.rows(), h.cols());
      h0.setFromTriplets(kept.begin(), kept.end());
      const Liouvillian drive_free(QOperator(space, h0), channels);
      const SparseMatrix precond = replace_row(drive_free.superoperator(), 0, trace_row(n, &grade));
      const int max_grade = *std::max_element(grade.begin(), grade.end());
      auto sectors = SectorSolve::build(precond, grade, max_grade);
      if (!sectors) fail(ErrorCode::invalid_argument, "grading does not make the drive-free generator block triangular");

      Eigen::GMRES<SparseMatrix, SectorPreconditioner> gmres;
      gmres.preconditioner().attach(sectors);
      gmres.compute(constrained);
      gmres.setTolerance(options.gmres_tolerance);
      gmres.setMaxIterations(options.gmres_max_iterations);
      gmres.set_restart(options.gmres_restart);
      x = gmres.solveWithGuess(rhs, sectors->solve(rhs));
      local.iterations = static_cast<int>(gmres.iterations());
    }
    rho = unvectorize(x, n);
  }

  rho = finalize_density(rho);
  local.residual = max_abs(generator.apply(rho));
  if (!(local.residual <= options.residual_tolerance)) {
    fail(ErrorCode::not_converged, std::string("steady state residual ") + std::to_string(local.residual) +
                                       " exceeds tolerance (method " + to_string(method) + ")");
  }
  if (report) *report = local;
  return DensityMatrix(space, rho);
}

}  // namespace optomech
