#pragma once

// Truncated Fock-space operator algebra on composite bosonic Hilbert spaces.
//
// Mode ordering: slot 0 is the most significant digit of the basis index,
//
//     index(n_0, n_1, ..., n_{k-1}) = ((n_0 * d_1 + n_1) * d_2 + n_2) ... ,
//
// which is the ordering produced by the Kronecker product
// op_0 (x) op_1 (x) ... (x) op_{k-1}. Every module in this library addresses
// modes through this convention; the slot assignments for the physical,
// quasi-mode and effective pictures live in model.hpp.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "errors.hpp"

namespace optomech {

using Complex = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<Complex>;
using DenseMatrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

class ModeSpace {
 public:
  ModeSpace() = default;
  explicit ModeSpace(std::vector<int> dims);

  std::size_t modes() const noexcept { return dims_.size(); }
  int dim(std::size_t slot) const;
  const std::vector<int>& dims() const noexcept { return dims_; }
  std::size_t total_dim() const noexcept { return total_; }

  std::size_t index(std::span<const int> occupations) const;
  std::vector<int> occupations(std::size_t index) const;
  int occupation(std::size_t index, std::size_t slot) const;

  friend bool operator==(const ModeSpace&, const ModeSpace&) = default;

 private:
  std::vector<int> dims_;
  std::vector<std::size_t> strides_;
  std::size_t total_ = 1;
};

// Complex sparse operator tagged with the space it acts on. Immutable once
// built; safe to share across threads.
class QOperator {
 public:
  QOperator() = default;
  QOperator(ModeSpace space, SparseMatrix matrix);

  const ModeSpace& space() const noexcept { return space_; }
  const SparseMatrix& matrix() const noexcept { return matrix_; }
  std::size_t dim() const noexcept { return space_.total_dim(); }
  std::size_t nonzeros() const;

  Complex coeff(std::size_t row, std::size_t col) const;
  DenseMatrix dense() const { return DenseMatrix(matrix_); }

 private:
  ModeSpace space_;
  SparseMatrix matrix_;
};

QOperator annihilation(int dim);
QOperator creation(int dim);
QOperator number(int dim);
QOperator identity(const ModeSpace& space);
QOperator zero(const ModeSpace& space);

// Places a single-mode operator on `slot`, identity elsewhere.
QOperator embed(const QOperator& op, std::size_t slot, const ModeSpace& space);

QOperator dagger(const QOperator& op);
QOperator commutator(const QOperator& a, const QOperator& b);

QOperator operator+(const QOperator& a, const QOperator& b);
QOperator operator-(const QOperator& a, const QOperator& b);
QOperator operator*(const QOperator& a, const QOperator& b);
QOperator operator*(Complex s, const QOperator& a);
QOperator operator*(double s, const QOperator& a);

StateVector apply(const QOperator& op, const StateVector& state);
StateVector basis_state(const ModeSpace& space, std::span<const int> occupations);

// max |A - A^dagger| over all entries.
double hermiticity_residual(const QOperator& op);
double max_abs(const QOperator& op);

void require_same_space(const ModeSpace& a, const ModeSpace& b, const char* what);

}  // namespace optomech
