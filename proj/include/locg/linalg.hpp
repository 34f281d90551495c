#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>

// Block-vector kernels shared by the solver, the diagnostics and the tests:
// orthonormalization, Rayleigh quotients, residuals, projectors.  All kernels
// are templated over the scalar so the complex Hermitian path shares the real
// symmetric code with conjugation inserted by Eigen's adjoint(); the solver
// and the benchmark harness instantiate the real path only.

namespace locg {

template <typename Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixT<double>;
using Vector = VectorT<double>;

// A dimension-n self-adjoint linear map, optionally matrix-free.
template <typename Scalar>
struct HermitianOperatorT {
  Eigen::Index n = 0;
  std::function<MatrixT<Scalar>(const MatrixT<Scalar>&)> apply;
  std::optional<MatrixT<Scalar>> dense_form;

  MatrixT<Scalar> operator()(const MatrixT<Scalar>& X) const { return apply(X); }
};

using HermitianOperator = HermitianOperatorT<double>;
using ComplexHermitianOperator = HermitianOperatorT<std::complex<double>>;

inline HermitianOperator make_dense_operator(Matrix A) {
  HermitianOperator op;
  op.n = A.rows();
  // Shared ownership keeps the matrix alive in copies of the operator.
  auto M = std::make_shared<const Matrix>(std::move(A));
  op.dense_form = *M;
  op.apply = [M](const Matrix& X) -> Matrix { return (*M) * X; };
  return op;
}

// Counting wrapper: same operator, but every column pushed through `apply`
// increments *counter.  Used to assert the (m_e+1)*n_b cost contract.
inline HermitianOperator make_counting_operator(const HermitianOperator& inner,
                                                long* counter) {
  HermitianOperator op;
  op.n = inner.n;
  op.dense_form = inner.dense_form;
  auto base = inner.apply;
  op.apply = [base, counter](const Matrix& X) -> Matrix {
    *counter += static_cast<long>(X.cols());
    return base(X);
  };
  return op;
}

// Modified Gram-Schmidt with one full reorthogonalization pass.  Columns
// whose component orthogonal to the previously accepted columns has norm
// <= drop_tol * (original column norm) are dropped.  Throws if every column
// is dropped.
template <typename Scalar>
std::pair<MatrixT<Scalar>, Eigen::Index> orthonormalize(
    const MatrixT<Scalar>& B, double drop_tol = 1e-10) {
  if (B.cols() == 0) throw std::invalid_argument("orthonormalize: no columns");
  if (drop_tol <= 0) throw std::invalid_argument("orthonormalize: drop_tol must be positive");
  MatrixT<Scalar> Q(B.rows(), B.cols());
  Eigen::Index rank = 0;
  for (Eigen::Index j = 0; j < B.cols(); ++j) {
    VectorT<Scalar> v = B.col(j);
    const double nrm0 = v.norm();
    if (nrm0 == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index i = 0; i < rank; ++i)
        v -= Q.col(i) * (Q.col(i).adjoint() * v)(0, 0);
    const double nrm = v.norm();
    if (nrm <= drop_tol * nrm0) continue;
    Q.col(rank++) = v / nrm;
  }
  if (rank == 0) throw std::runtime_error("orthonormalize: empty basis (all columns dropped)");
  return {Q.leftCols(rank), rank};
}

// Orthonormalize the columns of V while carrying their images AV under a
// linear map: the output pair (Q, AQ) satisfies range(Q) = range(kept V),
// Q^H Q = I, and AQ = A*Q without any fresh applications of A.  This is what
// lets one iteration cost exactly (m_e+1)*n_b operator applications.
template <typename Scalar>
std::pair<MatrixT<Scalar>, MatrixT<Scalar>> orthonormalize_with_images(
    const MatrixT<Scalar>& V, const MatrixT<Scalar>& AV, double drop_tol = 1e-10) {
  if (V.cols() != AV.cols() || V.rows() != AV.rows())
    throw std::invalid_argument("orthonormalize_with_images: shape mismatch");
  const Eigen::Index n = V.rows();
  MatrixT<Scalar> Q(n, V.cols()), AQ(n, V.cols());
  Eigen::Index rank = 0;
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    VectorT<Scalar> v = V.col(j);
    VectorT<Scalar> av = AV.col(j);
    const double nrm0 = v.norm();
    if (nrm0 == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index i = 0; i < rank; ++i) {
        const Scalar c = (Q.col(i).adjoint() * v)(0, 0);
        v -= Q.col(i) * c;
        av -= AQ.col(i) * c;
      }
    const double nrm = v.norm();
    if (nrm <= drop_tol * nrm0) continue;
    Q.col(rank) = v / nrm;
    AQ.col(rank) = av / nrm;
    ++rank;
  }
  if (rank == 0)
    throw std::runtime_error("orthonormalize_with_images: empty basis (subspace collapse)");
  return {Q.leftCols(rank), AQ.leftCols(rank)};
}

namespace detail {
// (X^H X)^{-1/2} via the Gram matrix eigendecomposition; throws when the
// Gram condition number exceeds 1e14 (rank-deficient block).
template <typename Scalar>
MatrixT<Scalar> gram_inv_sqrt(const MatrixT<Scalar>& X) {
  const MatrixT<Scalar> G = X.adjoint() * X;
  Eigen::SelfAdjointEigenSolver<MatrixT<Scalar>> es(G);
  const auto& d = es.eigenvalues();
  if (d(0) <= 0 || d(d.size() - 1) / d(0) > 1e14)
    throw std::runtime_error("rank deficient block");
  VectorT<double> inv_sqrt = d.array().sqrt().inverse();
  return es.eigenvectors() * inv_sqrt.template cast<Scalar>().asDiagonal() *
         es.eigenvectors().adjoint();
}
}  // namespace detail

// rho(X) = (X^H X)^{-1/2} X^H A X (X^H X)^{-1/2}; for orthonormal X this is
// X^H A X.  Result is Hermitian by construction up to roundoff; we symmetrize.
template <typename Scalar>
MatrixT<Scalar> rayleigh_quotient(const HermitianOperatorT<Scalar>& A,
                                  const MatrixT<Scalar>& X) {
  const MatrixT<Scalar> S = detail::gram_inv_sqrt(X);
  const MatrixT<Scalar> Xn = X * S;
  MatrixT<Scalar> R = Xn.adjoint() * A.apply(Xn);
  R = Scalar(0.5) * (R + R.adjoint()).eval();
  return R;
}

// r(X) = A X (X^H X)^{-1/2} - X (X^H X)^{-1/2} rho(X); satisfies X^H r(X)=0.
template <typename Scalar>
MatrixT<Scalar> residual(const HermitianOperatorT<Scalar>& A,
                         const MatrixT<Scalar>& X) {
  const MatrixT<Scalar> S = detail::gram_inv_sqrt(X);
  const MatrixT<Scalar> Xn = X * S;
  const MatrixT<Scalar> AXn = A.apply(Xn);
  MatrixT<Scalar> rho = Xn.adjoint() * AXn;
  rho = Scalar(0.5) * (rho + rho.adjoint()).eval();
  return AXn - Xn * rho;
}

// (I - P(X)) V for orthonormal X.
template <typename Scalar>
MatrixT<Scalar> project_out(const MatrixT<Scalar>& X, const MatrixT<Scalar>& V) {
  if (X.rows() != V.rows()) throw std::invalid_argument("project_out: shape mismatch");
  return V - X * (X.adjoint() * V);
}

}  // namespace locg
