#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "locg/eig.hpp"
#include "locg/problems.hpp"

using namespace locg;
using namespace locg::problems;

namespace {
std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}
}  // namespace

TEST_CASE("haar_orthonormal basics") {
  const Matrix Q = haar_orthonormal(30, 4, 1);
  CHECK((Q.adjoint() * Q - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);

  const Matrix Q2 = haar_orthonormal(30, 4, 2);
  CHECK((Q - Q2).cwiseAbs().maxCoeff() > 1e-3);  // different seeds differ

  // determinism: same seed, bit-identical
  const Matrix Q1b = haar_orthonormal(30, 4, 1);
  CHECK((Q - Q1b).cwiseAbs().maxCoeff() == 0.0);

  const Matrix S = haar_orthonormal(3, 3, 9);
  CHECK(std::abs(std::abs(S.determinant()) - 1.0) < 1e-12);
}

TEST_CASE("starting_block truncates a shared n x 3 Haar block") {
  const Matrix X3 = starting_block(40, 3, 5);
  const Matrix X1 = starting_block(40, 1, 5);
  const Matrix X2 = starting_block(40, 2, 5);
  CHECK((X3.leftCols(1) - X1).cwiseAbs().maxCoeff() == 0.0);
  CHECK((X3.leftCols(2) - X2).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(starting_block(40, 4, 5), std::invalid_argument);
}

TEST_CASE("laplacian2d stencil on e_1") {
  const Problem p = laplacian2d(2);
  Matrix e1 = Matrix::Zero(4, 1);
  e1(0, 0) = 1;
  const Matrix y = p.op.apply(e1);
  CHECK(y(0, 0) == doctest::Approx(-4.0));
  CHECK(y(1, 0) == doctest::Approx(1.0));
  CHECK(y(2, 0) == doctest::Approx(1.0));
  CHECK(y(3, 0) == doctest::Approx(0.0));
}

TEST_CASE("laplacian2d matrix-free apply equals the dense stencil matrix") {
  const Problem p = laplacian2d(5);
  const Matrix A = laplacian2d_dense(5);
  const Matrix I = Matrix::Identity(25, 25);
  CHECK((p.op.apply(I) - A).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((A - A.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("laplacian2d(10) dense spectrum matches analytic") {
  const EigenDecomposition ed = dense_eigh(laplacian2d_dense(10));
  CHECK((ed.values - laplacian2d_spectrum(10)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("laplacian2d(50) summary constant") {
  const Problem p = laplacian2d(50);
  CHECK(std::round(p.summary.kappa * 1e4) / 1e4 == doctest::Approx(702.5410));
}

TEST_CASE("cluster_outlier spectrum is exactly the paper's Lambda") {
  const Problem p = cluster_outlier(4);
  REQUIRE(p.spectrum.size() == 1000);
  CHECK(p.spectrum(0) == doctest::Approx(-1.0));
  CHECK(p.spectrum(1) == doctest::Approx(0.0));
  CHECK(p.spectrum(2) == doctest::Approx(0.001).epsilon(1e-14));
  CHECK(p.spectrum(995) == doctest::Approx(0.994).epsilon(1e-12));
  CHECK(p.spectrum(996) == doctest::Approx(64.0));
  CHECK(p.spectrum(999) == doctest::Approx(512.0));
  CHECK(p.summary.kappa == doctest::Approx(513.0).epsilon(1e-12));

  // Haar conjugation preserves the spectrum
  const EigenDecomposition ed = dense_eigh(*p.op.dense_form);
  CHECK((ed.values - p.spectrum).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(ed.values(0) == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("outlier_cluster spectrum and constants") {
  const Problem p = outlier_cluster(4);
  REQUIRE(p.spectrum.size() == 1000);
  CHECK(p.spectrum(0) == doctest::Approx(1.0));
  CHECK(p.spectrum(1) == doctest::Approx(1.1));
  CHECK(p.spectrum(999) == doctest::Approx(2.098).epsilon(1e-12));
  CHECK(std::round(p.summary.kappa * 100) / 100 == doctest::Approx(10.98));

  const EigenDecomposition ed = dense_eigh(*p.op.dense_form);
  CHECK((ed.values - p.spectrum).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("synthetic problems are deterministic in the seed") {
  const Problem a = cluster_outlier(11, 60);
  const Problem b = cluster_outlier(11, 60);
  CHECK((*a.op.dense_form - *b.op.dense_form).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("matrix market: parse a symmetric coordinate file") {
  const auto path = temp_file("locg_test_diag.mtx");
  {
    std::ofstream f(path);
    f << "%%MatrixMarket matrix coordinate real symmetric\n"
      << "% diag(1,2,3)\n"
      << "3 3 3\n"
      << "1 1 1.0\n2 2 2.0\n3 3 3.0\n";
  }
  const Problem p = load_matrix_market(path.string());
  Matrix e2 = Matrix::Zero(3, 1);
  e2(1, 0) = 1;
  CHECK((p.op.apply(e2) - 2.0 * e2).cwiseAbs().maxCoeff() < 1e-14);
  std::filesystem::remove(path);
}

TEST_CASE("matrix market: asymmetric general file is rejected") {
  const auto path = temp_file("locg_test_asym.mtx");
  {
    std::ofstream f(path);
    f << "%%MatrixMarket matrix coordinate real general\n"
      << "2 2 3\n"
      << "1 1 1.0\n1 2 5.0\n2 2 1.0\n";
  }
  CHECK_THROWS_WITH_AS(load_matrix_market(path.string()),
                       doctest::Contains("not symmetric"), std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("matrix market: laplacian2d(4) round trip") {
  const auto path = temp_file("locg_test_lap4.mtx");
  write_matrix_market(path.string(), laplacian2d_dense(4));
  const Problem p = load_matrix_market(path.string());
  const EigenDecomposition ed = dense_eigh(*p.op.dense_form);
  CHECK((ed.values - laplacian2d_spectrum(4)).cwiseAbs().maxCoeff() < 1e-12);
  std::filesystem::remove(path);
}
