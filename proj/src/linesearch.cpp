#include "locg/linesearch.hpp"

#include <cmath>
#include <stdexcept>

namespace locg {

namespace {

constexpr double kTiny = 1e-300;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

double rq(const HermitianOperator& A, const Vector& x) {
  const Vector Ax = A.apply(x);
  return x.dot(Ax) / x.squaredNorm();
}

// Unnormalized residual r~(x) = A x - x rho(x).
Vector rtilde(const HermitianOperator& A, const Vector& x) {
  const Vector Ax = A.apply(x);
  return Ax - x * (x.dot(Ax) / x.squaredNorm());
}

Matrix rho_tilde(const HermitianOperator& A, const Matrix& X) {
  return (X.adjoint() * X).ldlt().solve(X.adjoint() * A.apply(X));
}

}  // namespace

LineSearchWitness make_vector_witness(const HermitianOperator& A, const Vector& x,
                                      const Vector& v, const Matrix& W,
                                      const Vector& x_plus_raw) {
  LineSearchWitness w;
  w.x = x / x.norm();
  w.v = v;
  w.W = W;
  const double xdot = w.x.dot(x_plus_raw);
  if (std::abs(xdot) < 1e-14)
    throw std::runtime_error("make_vector_witness: x and x_plus nearly orthogonal");
  w.x_plus = x_plus_raw / xdot;  // x^H x_plus = 1 = x^H x
  w.d = w.x_plus - w.x;
  w.rho_x = rq(A, w.x);
  w.rho_plus = rq(A, w.x_plus);

  // Extraction basis: [(I-P)v, (I-P)W].
  const Eigen::Index m = W.cols();
  Matrix B(x.size(), 1 + m);
  B.col(0) = v - w.x * w.x.dot(v);
  if (m > 0) B.rightCols(m) = W - w.x * (w.x.adjoint() * W);
  const Vector coef = B.colPivHouseholderQr().solve(w.d);
  w.alpha_plus = coef(0);
  w.b_plus = coef.tail(m);

  const double dn = w.d.norm();
  const double delta = std::abs(w.rho_x - w.rho_plus);
  w.condition = std::max(1.0 / std::max(dn, kTiny),
                         std::abs(w.rho_plus) / std::max(delta, kTiny));
  return w;
}

IdentityReport verify_vector_identities(const HermitianOperator& A,
                                        const LineSearchWitness& w, double tol) {
  IdentityReport rep;
  rep.condition = w.condition;
  const Eigen::Index n = w.x.size();
  const Eigen::Index m = w.W.cols();
  const Vector r = rtilde(A, w.x);
  const Vector rp = rtilde(A, w.x_plus);
  const Vector Axp = A.apply(w.x_plus);
  const double ascale = Axp.norm() + std::abs(w.rho_plus) * w.x_plus.norm();

  // (a) r(x_+) perp span[x, v, W, d]
  {
    Matrix B(n, 3 + m);
    B.col(0) = w.x;
    B.col(1) = w.v / std::max(w.v.norm(), kTiny);
    if (m > 0)
      for (Eigen::Index j = 0; j < m; ++j)
        B.col(2 + j) = w.W.col(j) / std::max(w.W.col(j).norm(), kTiny);
    B.col(2 + m) = w.d / std::max(w.d.norm(), kTiny);
    rep.residuals[0] = (B.adjoint() * rp).cwiseAbs().maxCoeff() / std::max(ascale, kTiny);
  }

  const Vector Ad = A.apply(w.d);
  const Vector Fd = Ad - w.rho_plus * w.d;

  // (b) alpha_+ * r^H v + d^H F(rho_+) d = 0
  {
    const double num = std::abs(w.alpha_plus * r.dot(w.v) + w.d.dot(Fd));
    const double den = std::abs(w.d.dot(Ad)) +
                       std::abs(w.rho_plus) * w.d.squaredNorm() +
                       std::abs(w.alpha_plus * r.dot(w.v));
    rep.residuals[1] = num / std::max(den, kTiny);
  }

  // (c) rho_+ - rho = (r^H v / x^H x) alpha_+
  {
    const double lhs = w.rho_plus - w.rho_x;
    const double rhs = r.dot(w.v) / w.x.squaredNorm() * w.alpha_plus;
    rep.residuals[2] =
        std::abs(lhs - rhs) / std::max(std::max(std::abs(lhs), std::abs(rhs)), kTiny);
  }

  // (d) r~(x_+) - r~(x) = F-check(x) d   (d perp x, so the outer projector
  // acts through x alone)
  {
    const Vector Fcd = Fd - w.x * w.x.dot(Fd);
    const double den = Ad.norm() + std::abs(w.rho_plus) * w.d.norm();
    rep.residuals[3] = (rp - r - Fcd).norm() / std::max(den, kTiny);
  }

  // (e) [W^H Fc W] b_+ = -alpha_+ W^H Fc v
  if (m == 0) {
    rep.residuals[4] = kNaN;
    rep.e_checkable = false;
  } else {
    const Matrix T = w.W - w.x * (w.x.adjoint() * w.W);  // (I-P)W
    const Matrix AT = A.apply(T);
    const Matrix M = T.adjoint() * AT - w.rho_plus * (T.adjoint() * T);
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.adjoint()));
    const double mmax = es.eigenvalues().cwiseAbs().maxCoeff();
    const double mmin = es.eigenvalues().cwiseAbs().minCoeff();
    if (mmin <= 0 || mmax / mmin > 1e12) {
      rep.residuals[4] = kNaN;
      rep.e_checkable = false;
      rep.condition = std::max(rep.condition, mmin > 0 ? mmax / mmin : 1e300);
    } else {
      const Vector pv = w.v - w.x * w.x.dot(w.v);
      const Vector Apv = A.apply(pv);
      const Vector rhs_vec = T.adjoint() * (Apv - w.rho_plus * pv);
      const double num = (M * w.b_plus + w.alpha_plus * rhs_vec).norm();
      const double den = (M * w.b_plus).norm() + std::abs(w.alpha_plus) * rhs_vec.norm();
      rep.residuals[4] = num / std::max(den, kTiny);
      rep.condition = std::max(rep.condition, mmax / mmin);
    }
  }

  // Roundoff bounds the achievable verification accuracy by eps * condition;
  // below that level a mismatch carries no information.
  const double tol_eff =
      std::max(tol, 32.0 * std::numeric_limits<double>::epsilon() * rep.condition);
  rep.pass = true;
  for (int i = 0; i < 5; ++i)
    if (std::isfinite(rep.residuals[i]) && rep.residuals[i] > tol_eff) rep.pass = false;
  return rep;
}

BlockLineSearchWitness make_block_witness(const HermitianOperator& A,
                                          const Matrix& X, const Matrix& V,
                                          const Matrix& W, const Matrix& X_plus_raw) {
  BlockLineSearchWitness w;
  w.X = X;
  w.V = V;
  w.W = W;
  const Matrix C = X.adjoint() * X_plus_raw;
  Eigen::FullPivLU<Matrix> lu(C);
  if (!lu.isInvertible())
    throw std::runtime_error("make_block_witness: X^H X_plus singular (locked direction)");
  w.X_plus = X_plus_raw * lu.solve(X.adjoint() * X);  // X^H X_plus = X^H X
  w.D = w.X_plus - w.X;

  const Eigen::Index m = W.cols();
  Matrix B(X.rows(), V.cols() + m);
  B.leftCols(V.cols()) = V - X * (X.adjoint() * V);
  if (m > 0) B.rightCols(m) = W - X * (X.adjoint() * W);
  const Matrix coef = B.colPivHouseholderQr().solve(w.D);
  w.a_plus = coef.topRows(V.cols());
  w.b_plus = coef.bottomRows(m);

  // Per-column conditioning: a column whose Ritz value has nearly stagnated
  // dominates the extraction's sensitivity even when the block-level norms
  // still look benign.
  const Matrix rhoX = rho_tilde(A, w.X);
  const Matrix rhoP = rho_tilde(A, w.X_plus);
  w.condition = 0;
  for (Eigen::Index j = 0; j < w.D.cols(); ++j) {
    const double dn = w.D.col(j).norm();
    const double delta = std::abs(rhoX(j, j) - rhoP(j, j));
    w.condition = std::max(w.condition, 1.0 / std::max(dn, kTiny));
    w.condition =
        std::max(w.condition, std::abs(rhoP(j, j)) / std::max(delta, kTiny));
  }
  return w;
}

IdentityReport verify_block_identities(const HermitianOperator& A,
                                       const BlockLineSearchWitness& w, double tol) {
  IdentityReport rep;
  rep.condition = w.condition;
  const Eigen::Index n = w.X.rows();
  const Eigen::Index m = w.W.cols();

  const Matrix AX = A.apply(w.X);
  const Matrix AXp = A.apply(w.X_plus);
  const Matrix rhoX = (w.X.adjoint() * w.X).ldlt().solve(w.X.adjoint() * AX);
  const Matrix rhoP = (w.X_plus.adjoint() * w.X_plus).ldlt().solve(w.X_plus.adjoint() * AXp);
  const Matrix R = AX - w.X * rhoX;     // r~(X)
  const Matrix Rp = AXp - w.X_plus * rhoP;
  const double ascale = AXp.norm() + rhoP.norm();

  auto proj_out_X = [&](const Matrix& M_) -> Matrix {
    return M_ - w.X * (w.X.adjoint() * M_);
  };

  // (1) r(X_+) perp span[X, V, W, D]
  {
    Matrix B(n, w.X.cols() + w.V.cols() + m + w.D.cols());
    Eigen::Index c = 0;
    auto put = [&](const Matrix& M_) {
      for (Eigen::Index j = 0; j < M_.cols(); ++j)
        B.col(c++) = M_.col(j) / std::max(M_.col(j).norm(), kTiny);
    };
    put(w.X);
    put(w.V);
    if (m > 0) put(w.W);
    put(w.D);
    rep.residuals[0] = (B.adjoint() * Rp).cwiseAbs().maxCoeff() / std::max(ascale, kTiny);
  }

  const Matrix AD = A.apply(w.D);
  const Matrix LD = AD - w.D * rhoP;  // L_{X_+}(D)

  // (2) r~(X)^H V a_+ + L_{X_+}(D)^H D = 0
  {
    const Matrix lhs = (R.adjoint() * w.V) * w.a_plus + LD.adjoint() * w.D;
    const double den = (R.adjoint() * w.V).norm() * w.a_plus.norm() +
                       LD.norm() * w.D.norm();
    rep.residuals[1] = lhs.norm() / std::max(den, kTiny);
  }

  // (3) rho~(X_+) - rho~(X) = (X^H X)^{-1} r~(X)^H V a_+
  {
    const Matrix lhs = rhoP - rhoX;
    const Matrix rhs =
        (w.X.adjoint() * w.X).ldlt().solve((R.adjoint() * w.V) * w.a_plus);
    rep.residuals[2] =
        (lhs - rhs).norm() / std::max(std::max(lhs.norm(), rhs.norm()), kTiny);
  }

  // (4) r~(X_+) - r~(X) = (I - P(X)) L_{X_+}(D)
  {
    const double den = AD.norm() + w.D.norm() * rhoP.norm();
    rep.residuals[3] = (Rp - R - proj_out_X(LD)).norm() / std::max(den, kTiny);
  }

  // (5) L_{X_+;(I-P)W}(b_+) = -W^H (I-P) L_{X_+}(V a_+)
  if (m == 0) {
    rep.residuals[4] = kNaN;
    rep.e_checkable = false;
  } else {
    const Matrix T = proj_out_X(w.W);
    const Matrix AT = A.apply(T);
    const Matrix Va = w.V * w.a_plus;
    const Matrix LVa = A.apply(Va) - Va * rhoP;
    const Matrix lhs = (T.adjoint() * AT) * w.b_plus - (T.adjoint() * T) * w.b_plus * rhoP;
    const Matrix rhs = -(w.W.adjoint() * proj_out_X(LVa));
    const double den = lhs.norm() + rhs.norm();
    rep.residuals[4] = (lhs - rhs).norm() / std::max(den, kTiny);
  }

  // Roundoff bounds the achievable verification accuracy by eps * condition;
  // below that level a mismatch carries no information.
  const double tol_eff =
      std::max(tol, 32.0 * std::numeric_limits<double>::epsilon() * rep.condition);
  rep.pass = true;
  for (int i = 0; i < 5; ++i)
    if (std::isfinite(rep.residuals[i]) && rep.residuals[i] > tol_eff) rep.pass = false;
  return rep;
}

double gradient_fd_residual(const HermitianOperator& A, const Matrix& X,
                            const Matrix& E, double h) {
  auto trace_rho = [&](const Matrix& Y) {
    return rho_tilde(A, Y).trace();
  };
  const double fd = (trace_rho(X + h * E) - trace_rho(X - h * E)) / (2.0 * h);
  // gradient form: 2 Re <E, r(X) (X^H X)^{-1/2}>
  const Matrix S = detail::gram_inv_sqrt(X);
  const Matrix Xn = X * S;
  const Matrix AXn = A.apply(Xn);
  const Matrix Rn = AXn - Xn * (Xn.adjoint() * AXn);
  const double grad = 2.0 * (E.array() * (Rn * S).array()).sum();
  return std::abs(fd - grad) / std::max(std::abs(grad), 1e-12);
}

IdentityReport verify_step_witness(const HermitianOperator& A,
                                   const StepWitness& w, double tol) {
  if (w.n_b == 1) {
    const LineSearchWitness lw =
        make_vector_witness(A, w.X.col(0), w.V.col(0), w.W, w.X_plus.col(0));
    return verify_vector_identities(A, lw, tol);
  }
  const BlockLineSearchWitness bw = make_block_witness(A, w.X, w.V, w.W, w.X_plus);
  return verify_block_identities(A, bw, tol);
}

}  // namespace locg
