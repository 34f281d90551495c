#include "locg/problems.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "locg/rng.hpp"

namespace locg::problems {

Matrix haar_orthonormal(Eigen::Index n, Eigen::Index k, std::uint64_t seed) {
  if (k > n) throw std::invalid_argument("haar_orthonormal: k > n");
  Rng rng(seed);
  Matrix G(n, k);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < n; ++i) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ() * Matrix::Identity(n, k);
  // Sign convention diag(R) > 0 makes the QR factorization unique, which is
  // what turns "QR of a Gaussian" into Haar measure.
  const Matrix R = qr.matrixQR().topRows(k);
  for (Eigen::Index j = 0; j < k; ++j)
    if (R(j, j) < 0) Q.col(j) = -Q.col(j);
  return Q;
}

Matrix starting_block(Eigen::Index n, int n_b, std::uint64_t seed) {
  if (n_b < 1 || n_b > 3)
    throw std::invalid_argument("starting_block: n_b must be in 1..3");
  return haar_orthonormal(n, 3, seed).leftCols(n_b);
}

Matrix laplacian2d_dense(int N) {
  if (N < 2) throw std::invalid_argument("laplacian2d: N must be >= 2");
  const Eigen::Index n = static_cast<Eigen::Index>(N) * N;
  Matrix A = Matrix::Zero(n, n);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const Eigen::Index p = static_cast<Eigen::Index>(i) * N + j;
      A(p, p) = -4.0;
      if (i > 0) A(p, p - N) = 1.0;
      if (i < N - 1) A(p, p + N) = 1.0;
      if (j > 0) A(p, p - 1) = 1.0;
      if (j < N - 1) A(p, p + 1) = 1.0;
    }
  return A;
}

Problem laplacian2d(int N) {
  if (N < 2) throw std::invalid_argument("laplacian2d: N must be >= 2");
  Problem p;
  p.name = "laplacian2d";
  const Eigen::Index n = static_cast<Eigen::Index>(N) * N;
  p.op.n = n;
  p.op.apply = [N, n](const Matrix& X) -> Matrix {
    if (X.rows() != n) throw std::invalid_argument("laplacian2d: dimension mismatch");
    Matrix Y(n, X.cols());
    for (Eigen::Index c = 0; c < X.cols(); ++c)
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          const Eigen::Index q = static_cast<Eigen::Index>(i) * N + j;
          double v = -4.0 * X(q, c);
          if (i > 0) v += X(q - N, c);
          if (i < N - 1) v += X(q + N, c);
          if (j > 0) v += X(q - 1, c);
          if (j < N - 1) v += X(q + 1, c);
          Y(q, c) = v;
        }
    return Y;
  };
  p.spectrum = laplacian2d_spectrum(N);
  p.summary = spectral_summary(p.spectrum);
  p.a_scale = 8.0;
  return p;
}

namespace {
Problem haar_conjugated(std::string name, const Vector& lambda_ascending,
                        std::uint64_t seed) {
  const Eigen::Index n = lambda_ascending.size();
  const Matrix Q = haar_orthonormal(n, n, seed);
  Matrix A = Q * lambda_ascending.asDiagonal() * Q.transpose();
  A = 0.5 * (A + A.transpose()).eval();
  Problem p;
  p.name = std::move(name);
  p.op = make_dense_operator(std::move(A));
  p.spectrum = lambda_ascending;
  p.summary = spectral_summary(p.spectrum);
  p.a_scale = lambda_ascending.cwiseAbs().maxCoeff();
  return p;
}
}  // namespace

Problem cluster_outlier(std::uint64_t seed, Eigen::Index n) {
  if (n < 10) throw std::invalid_argument("cluster_outlier: n must be >= 10");
  // (-1, 0, 0.001, ..., 0.001*(n-6), 2^6, 2^7, 2^8, 2^9): n - 5 cluster
  // values starting at 0 with step 0.001, four outliers, leading -1.
  Vector lam(n);
  lam(0) = -1.0;
  for (Eigen::Index i = 0; i < n - 5; ++i) lam(1 + i) = 0.001 * static_cast<double>(i);
  lam(n - 4) = 64.0;
  lam(n - 3) = 128.0;
  lam(n - 2) = 256.0;
  lam(n - 1) = 512.0;
  return haar_conjugated("cluster_outlier", lam, seed);
}

Problem outlier_cluster(std::uint64_t seed, Eigen::Index n) {
  if (n < 10) throw std::invalid_argument("outlier_cluster: n must be >= 10");
  // (1, 1.1, 1.101, ..., 1.1 + 0.001*(n-2)).
  Vector lam(n);
  lam(0) = 1.0;
  for (Eigen::Index i = 1; i < n; ++i) lam(i) = 1.1 + 0.001 * static_cast<double>(i - 1);
  return haar_conjugated("outlier_cluster", lam, seed);
}

namespace {
std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}
}  // namespace

Problem load_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_matrix_market: cannot open " + path);
  std::string banner;
  std::getline(in, banner);
  std::istringstream bs(banner);
  std::string tag, object, format, field, symmetry;
  bs >> tag >> object >> format >> field >> symmetry;
  if (lower(tag) != "%%matrixmarket" || lower(object) != "matrix")
    throw std::runtime_error("load_matrix_market: not a Matrix Market file");
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (field != "real" && field != "integer")
    throw std::runtime_error("load_matrix_market: unsupported field '" + field +
                             "' (real symmetric only on this path)");
  if (symmetry != "general" && symmetry != "symmetric")
    throw std::runtime_error("load_matrix_market: unsupported symmetry '" + symmetry + "'");

  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream hs(line);
  Matrix A;
  if (format == "coordinate") {
    Eigen::Index rows = 0, cols = 0;
    long nnz = 0;
    if (!(hs >> rows >> cols >> nnz))
      throw std::runtime_error("load_matrix_market: malformed size line");
    if (rows != cols) throw std::runtime_error("load_matrix_market: matrix not square");
    A = Matrix::Zero(rows, cols);
    for (long e = 0; e < nnz; ++e) {
      Eigen::Index i, j;
      double v;
      if (!(in >> i >> j >> v))
        throw std::runtime_error("load_matrix_market: truncated entry list");
      if (i < 1 || i > rows || j < 1 || j > cols)
        throw std::runtime_error("load_matrix_market: index out of range");
      A(i - 1, j - 1) = v;
      if (symmetry == "symmetric") A(j - 1, i - 1) = v;
    }
  } else if (format == "array") {
    Eigen::Index rows = 0, cols = 0;
    if (!(hs >> rows >> cols))
      throw std::runtime_error("load_matrix_market: malformed size line");
    if (rows != cols) throw std::runtime_error("load_matrix_market: matrix not square");
    A = Matrix::Zero(rows, cols);
    if (symmetry == "symmetric") {
      for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = j; i < rows; ++i) {
          double v;
          if (!(in >> v)) throw std::runtime_error("load_matrix_market: truncated array data");
          A(i, j) = v;
          A(j, i) = v;
        }
    } else {
      for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) {
          double v;
          if (!(in >> v)) throw std::runtime_error("load_matrix_market: truncated array data");
          A(i, j) = v;
        }
    }
  } else {
    throw std::runtime_error("load_matrix_market: unsupported format '" + format + "'");
  }

  const double scale = std::max(1e-300, A.cwiseAbs().maxCoeff());
  const double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale)
    throw std::runtime_error("load_matrix_market: matrix is not symmetric");
  A = 0.5 * (A + A.transpose()).eval();

  Problem p;
  p.name = "matrix-file";
  p.spectrum = dense_eigh(A).values;
  p.summary = spectral_summary(p.spectrum);
  p.a_scale = p.spectrum.cwiseAbs().maxCoeff();
  p.op = make_dense_operator(std::move(A));
  return p;
}

void write_matrix_market(const std::string& path, const Matrix& A) {
  if (A.rows() != A.cols())
    throw std::invalid_argument("write_matrix_market: matrix not square");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_matrix_market: cannot open " + path);
  long nnz = 0;
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    for (Eigen::Index i = j; i < A.rows(); ++i)
      if (A(i, j) != 0.0) ++nnz;
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << A.rows() << " " << A.cols() << " " << nnz << "\n";
  char buf[64];
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    for (Eigen::Index i = j; i < A.rows(); ++i)
      if (A(i, j) != 0.0) {
        std::snprintf(buf, sizeof(buf), "%.17g", A(i, j));
        out << (i + 1) << " " << (j + 1) << " " << buf << "\n";
      }
}

}  // namespace locg::problems
