#include "fock.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace optomech {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::invalid_dimension: return "invalid dimension";
    case ErrorCode::space_mismatch: return "mode space mismatch";
    case ErrorCode::rwa_violation: return "rotating-wave condition violated";
    case ErrorCode::integration_failure: return "integration failure";
    case ErrorCode::degenerate_steady_state: return "degenerate steady state";
    case ErrorCode::not_converged: return "not converged";
    case ErrorCode::undefined_correlation: return "undefined correlation";
    case ErrorCode::quadrature_failure: return "quadrature failure";
    case ErrorCode::insufficient_time: return "insufficient propagation time";
    case ErrorCode::normalization_failure: return "normalization failure";
  }
  return "unknown error";
}

ModeSpace::ModeSpace(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) fail(ErrorCode::invalid_dimension, "mode space needs at least one mode");
  strides_.assign(dims_.size(), 1);
  total_ = 1;
  for (std::size_t i = dims_.size(); i-- > 0;) {
    if (dims_[i] < 2) {
      fail(ErrorCode::invalid_dimension,
           "mode " + std::to_string(i) + " has dimension " + std::to_string(dims_[i]) +
               "; every truncation must be >= 2");
    }
    strides_[i] = total_;
    const auto d = static_cast<std::size_t>(dims_[i]);
    if (total_ > std::numeric_limits<std::size_t>::max() / d ||
        total_ * d > static_cast<std::size_t>(std::numeric_limits<Eigen::Index>::max())) {
      fail(ErrorCode::invalid_dimension, "total dimension overflows the index range");
    }
    total_ *= d;
  }
}

int ModeSpace::dim(std::size_t slot) const {
  if (slot >= dims_.size()) {
    fail(ErrorCode::invalid_argument, "slot " + std::to_string(slot) + " out of range");
  }
  return dims_[slot];
}

std::size_t ModeSpace::index(std::span<const int> occupations) const {
  if (occupations.size() != dims_.size()) {
    fail(ErrorCode::invalid_argument, "occupation list length does not match mode count");
  }
  std::size_t idx = 0;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (occupations[i] < 0 || occupations[i] >= dims_[i]) {
      fail(ErrorCode::invalid_argument,
           "occupation " + std::to_string(occupations[i]) + " outside truncation of mode " +
               std::to_string(i));
    }
    idx += static_cast<std::size_t>(occupations[i]) * strides_[i];
  }
  return idx;
}

std::vector<int> ModeSpace::occupations(std::size_t index) const {
  std::vector<int> occ(dims_.size());
  for (std::size_t i = 0; i < dims_.size(); ++i) occ[i] = occupation(index, i);
  return occ;
}

int ModeSpace::occupation(std::size_t index, std::size_t slot) const {
  return static_cast<int>((index / strides_[slot]) % static_cast<std::size_t>(dims_[slot]));
}

QOperator::QOperator(ModeSpace space, SparseMatrix matrix)
    : space_(std::move(space)), matrix_(std::move(matrix)) {
  const auto n = static_cast<Eigen::Index>(space_.total_dim());
  if (matrix_.rows() != n || matrix_.cols() != n) {
    fail(ErrorCode::invalid_dimension, "operator matrix does not match its mode space");
  }
  matrix_.makeCompressed();
}

std::size_t QOperator::nonzeros() const {
  std::size_t count = 0;
  for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it) {
      if (it.value() != Complex{}) ++count;
    }
  }
  return count;
}

Complex QOperator::coeff(std::size_t row, std::size_t col) const {
  return matrix_.coeff(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
}

void require_same_space(const ModeSpace& a, const ModeSpace& b, const char* what) {
  if (!(a == b)) fail(ErrorCode::space_mismatch, std::string(what) + ": operands live on different mode spaces");
}

QOperator annihilation(int dim) {
  if (dim < 2) fail(ErrorCode::invalid_dimension, "ladder operator needs dim >= 2");
  std::vector<Eigen::Triplet<Complex>> entries;
  for (int n = 1; n < dim; ++n) entries.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
  SparseMatrix m(dim, dim);
  m.setFromTriplets(entries.begin(), entries.end());
  return QOperator(ModeSpace({dim}), std::move(m));
}

QOperator creation(int dim) { return dagger(annihilation(dim)); }

QOperator number(int dim) {
  if (dim < 2) fail(ErrorCode::invalid_dimension, "number operator needs dim >= 2");
  std::vector<Eigen::Triplet<Complex>> entries;
  for (int n = 1; n < dim; ++n) entries.emplace_back(n, n, static_cast<double>(n));
  SparseMatrix m(dim, dim);
  m.setFromTriplets(entries.begin(), entries.end());
  return QOperator(ModeSpace({dim}), std::move(m));
}

QOperator identity(const ModeSpace& space) {
  const auto n = static_cast<Eigen::Index>(space.total_dim());
  SparseMatrix m(n, n);
  m.setIdentity();
  return QOperator(space, std::move(m));
}

QOperator zero(const ModeSpace& space) {
  const auto n = static_cast<Eigen::Index>(space.total_dim());
  return QOperator(space, SparseMatrix(n, n));
}

QOperator embed(const QOperator& op, std::size_t slot, const ModeSpace& space) {
  if (slot >= space.modes()) fail(ErrorCode::invalid_argument, "embed: slot out of range");
  const int d = space.dim(slot);
  if (op.dim() != static_cast<std::size_t>(d)) {
    fail(ErrorCode::invalid_dimension, "embed: operator dimension " + std::to_string(op.dim()) +
                                           " does not match slot dimension " + std::to_string(d));
  }
  std::size_t left = 1;
  std::size_t right = 1;
  for (std::size_t i = 0; i < slot; ++i) left *= static_cast<std::size_t>(space.dim(i));
  for (std::size_t i = slot + 1; i < space.modes(); ++i) right *= static_cast<std::size_t>(space.dim(i));

  const SparseMatrix& m = op.matrix();
  std::vector<Eigen::Triplet<Complex>> entries;
  entries.reserve(static_cast<std::size_t>(m.nonZeros()) * left * right);
  for (std::size_t l = 0; l < left; ++l) {
    for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
        const std::size_t base_r = (l * static_cast<std::size_t>(d) + static_cast<std::size_t>(it.row())) * right;
        const std::size_t base_c = (l * static_cast<std::size_t>(d) + static_cast<std::size_t>(it.col())) * right;
        for (std::size_t r = 0; r < right; ++r) {
          entries.emplace_back(static_cast<Eigen::Index>(base_r + r), static_cast<Eigen::Index>(base_c + r),
                               it.value());
        }
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(space.total_dim());
  SparseMatrix out(n, n);
  out.setFromTriplets(entries.begin(), entries.end());
  return QOperator(space, std::move(out));
}

QOperator dagger(const QOperator& op) { return QOperator(op.space(), SparseMatrix(op.matrix().adjoint())); }

QOperator commutator(const QOperator& a, const QOperator& b) { return a * b - b * a; }

QOperator operator+(const QOperator& a, const QOperator& b) {
  require_same_space(a.space(), b.space(), "add");
  return QOperator(a.space(), SparseMatrix(a.matrix() + b.matrix()));
}

QOperator operator-(const QOperator& a, const QOperator& b) {
  require_same_space(a.space(), b.space(), "subtract");
  return QOperator(a.space(), SparseMatrix(a.matrix() - b.matrix()));
}

QOperator operator*(const QOperator& a, const QOperator& b) {
  require_same_space(a.space(), b.space(), "multiply");
  return QOperator(a.space(), SparseMatrix(a.matrix() * b.matrix()));
}

QOperator operator*(Complex s, const QOperator& a) { return QOperator(a.space(), SparseMatrix(s * a.matrix())); }

QOperator operator*(double s, const QOperator& a) { return Complex(s, 0.0) * a; }

StateVector apply(const QOperator& op, const StateVector& state) {
  if (state.size() != static_cast<Eigen::Index>(op.dim())) {
    fail(ErrorCode::invalid_dimension, "apply: state length does not match operator");
  }
  return op.matrix() * state;
}

StateVector basis_state(const ModeSpace& space, std::span<const int> occupations) {
  StateVector v = StateVector::Zero(static_cast<Eigen::Index>(space.total_dim()));
  v[static_cast<Eigen::Index>(space.index(occupations))] = 1.0;
  return v;
}

double hermiticity_residual(const QOperator& op) {
  const SparseMatrix diff = op.matrix() - SparseMatrix(op.matrix().adjoint());
  double worst = 0.0;
  for (Eigen::Index k = 0; k < diff.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  }
  return worst;
}

double max_abs(const QOperator& op) {
  double worst = 0.0;
  const SparseMatrix& m = op.matrix();
  for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  }
  return worst;
}

}  // namespace optomech
