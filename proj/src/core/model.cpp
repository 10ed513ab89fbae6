#include "model.hpp"

#include <cmath>
#include <string>

namespace optomech {

namespace {

const double kSqrt2 = std::sqrt(2.0);

void require_modes(const ModeSpace& space, std::size_t count, const char* builder) {
  if (space.modes() != count) {
    fail(ErrorCode::invalid_dimension, std::string(builder) + " expects " + std::to_string(count) +
                                           " modes, got " + std::to_string(space.modes()));
  }
}

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) fail(ErrorCode::invalid_argument, std::string(name) + " must be finite");
}

QOperator ladder(const ModeSpace& space, std::size_t s) { return embed(annihilation(space.dim(s)), s, space); }

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

// <m, N-m|_quasi |n1, n2>_physical for a single pair.
double pair_amplitude(int n1, int n2, int m) {
  const int total = n1 + n2;
  double sum = 0.0;
  for (int j = 0; j <= n1; ++j) {
    const int l = m - j;
    if (l < 0 || l > n2) continue;
    sum += binomial(n1, j) * binomial(n2, l) * ((l % 2 == 0) ? 1.0 : -1.0);
  }
  return sum * std::sqrt(factorial(m) * factorial(total - m) / (factorial(n1) * factorial(n2))) *
         std::pow(2.0, -0.5 * total);
}

}  // namespace

bool SystemParams::rwa_resonant() const {
  return std::abs(omega_m - 2.0 * J) <= 1e-12 * std::max(1.0, std::abs(omega_m));
}

void SystemParams::validate() const {
  for (auto [v, name] : {std::pair{delta, "delta"}, {J, "J"}, {g, "g"}, {omega_m, "omega_m"}, {kappa, "kappa"},
                         {gamma_m, "gamma_m"}, {n_th, "n_th"}, {eps1, "eps1"}, {eps2, "eps2"}}) {
    require_finite(v, name);
  }
  if (!(omega_m > 0.0)) fail(ErrorCode::invalid_argument, "omega_m must be > 0");
  if (!(kappa > 0.0)) fail(ErrorCode::invalid_argument, "kappa must be > 0");
  if (!(gamma_m >= 0.0)) fail(ErrorCode::invalid_argument, "gamma_m must be >= 0");
  if (!(n_th >= 0.0)) fail(ErrorCode::invalid_argument, "n_th must be >= 0");
  if (g2) require_finite(*g2, "g2");
  if (omega_m2 && !(*omega_m2 > 0.0)) fail(ErrorCode::invalid_argument, "omega_m2 must be > 0");
}

DerivedParams derive(const SystemParams& p) {
  return DerivedParams{
      .delta_plus = p.delta - p.J,
      .delta_minus = p.delta + p.J,
      .eps_plus = (p.eps1 + p.eps2) / kSqrt2,
      .eps_minus = (p.eps1 - p.eps2) / kSqrt2,
  };
}

SystemParams blockade_preset() {
  SystemParams p;
  p.omega_m = 1.0;
  p.J = 0.5;
  p.g = 0.03;
  p.kappa = 1e-3;
  p.gamma_m = p.kappa / 200.0;
  p.eps1 = 1.1e-4;
  p.eps2 = -p.eps1;
  p.n_th = 0.0;
  return p;
}

SystemParams blockade_off_resonance_preset() {
  SystemParams p = blockade_preset();
  p.J = 2.0;
  return p;
}

ModeSpace physical_space(int cavity_dim, int mech_dim) {
  return ModeSpace({cavity_dim, cavity_dim, mech_dim, mech_dim});
}

ModeSpace quasimode_space(int cavity_dim, int mech_minus_dim, int mech_plus_dim) {
  return ModeSpace({cavity_dim, cavity_dim, mech_minus_dim, mech_plus_dim});
}

ModeSpace effective_space(int cavity_dim, int mech_dim) { return ModeSpace({cavity_dim, cavity_dim, mech_dim}); }

QOperator build_original_hamiltonian(const SystemParams& p, const ModeSpace& space) {
  p.validate();
  require_modes(space, 4, "original Hamiltonian");
  const QOperator a1 = ladder(space, slot::a1);
  const QOperator a2 = ladder(space, slot::a2);
  const QOperator b1 = ladder(space, slot::b1);
  const QOperator b2 = ladder(space, slot::b2);
  const QOperator a1d = dagger(a1), a2d = dagger(a2), b1d = dagger(b1), b2d = dagger(b2);

  QOperator h = p.delta * (a1d * a1 + a2d * a2);
  h = h - p.J * (a1d * a2 + a1 * a2d);
  h = h + p.eps1 * (a1 + a1d) + p.eps2 * (a2 + a2d);
  h = h + p.omega_m * (b1d * b1) + p.mech_frequency2() * (b2d * b2);
  h = h + p.g * (a1d * a1 * (b1 + b1d)) + p.coupling2() * (a2d * a2 * (b2 + b2d));
  return h;
}

QOperator build_quasimode_hamiltonian(const SystemParams& p, const ModeSpace& space) {
  p.validate();
  require_modes(space, 4, "quasi-mode Hamiltonian");
  if (!p.symmetric()) {
    fail(ErrorCode::invalid_argument,
         "quasi-mode picture requires g1 = g2 and omega_m1 = omega_m2; the +/- modes do not decouple otherwise");
  }
  const DerivedParams d = derive(p);
  const QOperator am = ladder(space, slot::a_minus);
  const QOperator ap = ladder(space, slot::a_plus);
  const QOperator bm = ladder(space, slot::b_minus);
  const QOperator bp = ladder(space, slot::b_plus);
  const QOperator amd = dagger(am), apd = dagger(ap), bmd = dagger(bm), bpd = dagger(bp);
  const double gq = p.g / kSqrt2;

  QOperator h = d.delta_plus * (apd * ap) + d.delta_minus * (amd * am);
  h = h + d.eps_minus * (amd + am);
  if (d.eps_plus != 0.0) h = h + d.eps_plus * (apd + ap);
  h = h + p.omega_m * (bpd * bp + bmd * bm);
  h = h + gq * ((bp + bpd) * (apd * ap + amd * am));
  h = h + gq * ((bm + bmd) * (amd * ap + apd * am));
  return h;
}

QOperator build_effective_hamiltonian(const SystemParams& p, const ModeSpace& space) {
  p.validate();
  require_modes(space, 3, "effective Hamiltonian");
  if (!p.symmetric()) {
    fail(ErrorCode::invalid_argument, "effective Hamiltonian requires g1 = g2 and omega_m1 = omega_m2");
  }
  if (!p.rwa_resonant()) {
    fail(ErrorCode::rwa_violation, "effective three-mode Hamiltonian needs omega_m = 2J (got omega_m = " +
                                       std::to_string(p.omega_m) + ", 2J = " + std::to_string(2.0 * p.J) +
                                       "); use the original or quasi-mode builder off resonance");
  }
  const DerivedParams d = derive(p);
  const QOperator am = ladder(space, slot::a_minus);
  const QOperator ap = ladder(space, slot::a_plus);
  const QOperator bm = ladder(space, slot::b_minus);
  const QOperator amd = dagger(am), apd = dagger(ap), bmd = dagger(bm);

  QOperator h = d.delta_minus * (apd * ap + amd * am);
  h = h + d.eps_minus * (amd + am);
  h = h + (p.g / kSqrt2) * (apd * am * bmd + ap * amd * bm);
  return h;
}

QuasiModeTransform::QuasiModeTransform(ModeSpace space) : space_(std::move(space)) {
  const std::size_t modes = space_.modes();
  if (modes != 2 && modes != 4) {
    fail(ErrorCode::invalid_dimension, "quasi-mode transform acts on 2 or 4 modes");
  }
  for (std::size_t s = 0; s < modes; s += 2) {
    if (space_.dim(s) != space_.dim(s + 1)) {
      fail(ErrorCode::invalid_dimension, "quasi-mode transform needs matched truncations within each pair");
    }
  }
  const std::size_t n = space_.total_dim();
  representable_.assign(n, 0);
  std::vector<Eigen::Triplet<Complex>> entries;

  for (std::size_t col = 0; col < n; ++col) {
    const std::vector<int> occ = space_.occupations(col);
    bool ok = true;
    for (std::size_t s = 0; s < modes; s += 2) ok = ok && (occ[s] + occ[s + 1] < space_.dim(s));
    if (!ok) continue;
    representable_[col] = 1;

    // Expand pair by pair; each pair contributes (quasi occupation, amplitude) options.
    std::vector<std::pair<std::vector<int>, double>> terms{{occ, 1.0}};
    for (std::size_t s = 0; s < modes; s += 2) {
      const int n1 = occ[s], n2 = occ[s + 1], total = n1 + n2;
      std::vector<std::pair<std::vector<int>, double>> next;
      for (const auto& [q, amp] : terms) {
        for (int m = 0; m <= total; ++m) {
          const double c = pair_amplitude(n1, n2, m);
          if (c == 0.0) continue;
          std::vector<int> qq = q;
          qq[s] = m;
          qq[s + 1] = total - m;
          next.emplace_back(std::move(qq), amp * c);
        }
      }
      terms = std::move(next);
    }
    for (const auto& [q, amp] : terms) {
      entries.emplace_back(static_cast<Eigen::Index>(space_.index(q)), static_cast<Eigen::Index>(col), amp);
    }
  }
  to_quasi_ = SparseMatrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  to_quasi_.setFromTriplets(entries.begin(), entries.end());
  to_quasi_.makeCompressed();
}

bool QuasiModeTransform::representable(std::size_t basis_index) const {
  return basis_index < representable_.size() && representable_[basis_index] != 0;
}

double QuasiModeTransform::leakage(const StateVector& state) const {
  if (state.size() != static_cast<Eigen::Index>(space_.total_dim())) {
    fail(ErrorCode::invalid_dimension, "quasi-mode transform: state length mismatch");
  }
  double outside = 0.0;
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    if (!representable_[static_cast<std::size_t>(i)]) outside += std::norm(state[i]);
  }
  return std::sqrt(outside);
}

StateVector QuasiModeTransform::apply(TransformDirection direction, const StateVector& state) const {
  const double leak = leakage(state);
  if (leak > 1e-12 * std::max(1.0, state.norm())) {
    fail(ErrorCode::invalid_argument, "state has weight outside the exactly transformable sector (leakage " +
                                          std::to_string(leak) + "); raise the truncation");
  }
  if (direction == TransformDirection::physical_to_quasi) return to_quasi_ * state;
  return to_quasi_.adjoint() * state;
}

DenseMatrix QuasiModeTransform::apply(TransformDirection direction, const DenseMatrix& rho) const {
  const auto n = static_cast<Eigen::Index>(space_.total_dim());
  if (rho.rows() != n || rho.cols() != n) fail(ErrorCode::invalid_dimension, "quasi-mode transform: matrix size mismatch");
  double outside = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!representable_[static_cast<std::size_t>(i)] || !representable_[static_cast<std::size_t>(j)]) {
        outside = std::max(outside, std::abs(rho(i, j)));
      }
    }
  }
  if (outside > 1e-12) {
    fail(ErrorCode::invalid_argument, "matrix has weight outside the exactly transformable sector");
  }
  if (direction == TransformDirection::physical_to_quasi) {
    return to_quasi_ * rho * SparseMatrix(to_quasi_.adjoint());
  }
  return SparseMatrix(to_quasi_.adjoint()) * rho * to_quasi_;
}

}  // namespace optomech
