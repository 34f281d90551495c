#include "locg/eig.hpp"

#include <cmath>
#include <stdexcept>

namespace locg {

EigenDecomposition dense_eigh(const Matrix& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("dense_eigh: matrix not square");
  const double scale = std::max(1e-300, A.cwiseAbs().maxCoeff());
  const double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale)
    throw std::invalid_argument("dense_eigh: matrix not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (A + A.transpose()));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("dense_eigh: eigensolver failed to converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

Vector laplacian2d_spectrum(int N) {
  if (N < 2) throw std::invalid_argument("laplacian2d_spectrum: N must be >= 2");
  const double pi = 3.14159265358979323846264338327950288;
  Vector c(N);
  for (int i = 1; i <= N; ++i) c(i - 1) = std::cos(i * pi / (N + 1));
  Vector vals(static_cast<Eigen::Index>(N) * N);
  Eigen::Index k = 0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) vals(k++) = -4.0 + 2.0 * c(i) + 2.0 * c(j);
  std::sort(vals.data(), vals.data() + vals.size());
  return vals;
}

SpectralSummary spectral_summary(const Vector& v) {
  if (v.size() < 2) throw std::invalid_argument("spectral_summary: need at least 2 values");
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) < v(i - 1)) throw std::invalid_argument("spectral_summary: values not ascending");
  SpectralSummary s;
  s.lambda_1 = v(0);
  s.lambda_n = v(v.size() - 1);
  const double spread = s.lambda_n - s.lambda_1;
  // kappa is defined through the gap lambda_2 - lambda_1; a multiple smallest
  // eigenvalue (gap at roundoff level) leaves it undefined.
  const double lambda_2 = v(1);
  if (spread <= 0 || lambda_2 - s.lambda_1 <= 1e-14 * spread)
    throw std::runtime_error("spectral_summary: degenerate smallest eigenvalue");
  s.lambda_2 = lambda_2;
  s.kappa = (s.lambda_n - s.lambda_1) / (s.lambda_2 - s.lambda_1);
  s.delta = (s.kappa - 1.0) / (s.kappa + 1.0);
  return s;
}

Matrix matrix_sqrt_spd(const Matrix& A) {
  EigenDecomposition ed = dense_eigh(A);
  if (ed.values(0) <= 0)
    throw std::invalid_argument("matrix_sqrt_spd: matrix not positive definite");
  return ed.vectors * ed.values.array().sqrt().matrix().asDiagonal() *
         ed.vectors.transpose();
}

}  // namespace locg
