#pragma once

#include <cstdint>
#include <string>

#include "locg/eig.hpp"
#include "locg/linalg.hpp"

// Generators for the paper's three test problems, Haar-random starts, and
// Matrix Market ingestion.

namespace locg::problems {

struct Problem {
  std::string name;
  HermitianOperator op;
  SpectralSummary summary;
  Vector spectrum;       // full prescribed/analytic spectrum, ascending
  double a_scale = 1.0;  // a-priori bound on ||A||_2, used for tolerances
};

// n x k block with orthonormal columns, Haar-distributed on the Stiefel
// manifold: QR of an i.i.d. standard-normal matrix with the sign convention
// diag(R) > 0.  Deterministic given the seed.
Matrix haar_orthonormal(Eigen::Index n, Eigen::Index k, std::uint64_t seed);

// Starts are drawn as n x 3 Haar blocks truncated to n_b columns, so runs
// with different n_b but equal seed share their leading start columns.
Matrix starting_block(Eigen::Index n, int n_b, std::uint64_t seed);

// Five-point 2D Laplacian on an N x N grid with zero Dirichlet boundary
// (diagonal -4, neighbor couplings 1), applied matrix-free; n = N^2.
Problem laplacian2d(int N);
Matrix laplacian2d_dense(int N);

// A = Q Lambda Q^T with Haar-random orthogonal Q.
// Cluster-Outlier: Lambda = (-1, 0, 0.001, ..., 0.001*(n-6), 2^6, ..., 2^9).
// With the default n = 1000 this is the paper's exact spectrum (kappa = 513).
Problem cluster_outlier(std::uint64_t seed, Eigen::Index n = 1000);
// Outlier-Cluster: Lambda = (1, 1.1, 1.101, ..., 1.1 + 0.001*(n-2)).
// With the default n = 1000: (1, 1.1, ..., 2.098), kappa = 10.98.
Problem outlier_cluster(std::uint64_t seed, Eigen::Index n = 1000);

// Matrix Market ingestion (coordinate or array, real, general/symmetric).
// General-field files are accepted only if symmetric to 1e-12 relative.
Problem load_matrix_market(const std::string& path);
void write_matrix_market(const std::string& path, const Matrix& A);

}  // namespace locg::problems
