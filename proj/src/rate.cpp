#include "locg/rate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace locg::rate {

double chebyshev_T(int m, double t) {
  if (m < 0) throw std::invalid_argument("chebyshev_T: negative degree");
  if (std::abs(t) < 1.0) throw std::domain_error("chebyshev_T: |t| must be >= 1");
  const double sign = (t < 0 && (m % 2)) ? -1.0 : 1.0;
  return sign * std::cosh(m * std::acosh(std::abs(t)));
}

double bound_C(const SpectralSummary& s, int m_e) {
  if (m_e < 1) throw std::invalid_argument("bound_C: m_e must be >= 1");
  if (s.kappa <= 1.0) return 0.0;
  const double T = chebyshev_T(m_e, 1.0 / s.delta);
  return 1.0 / (T * T);
}

double chi(double sigma, double C) {
  if (sigma < 1.0 || C < 0.0 || C >= 1.0) throw std::invalid_argument("chi: bad arguments");
  return C * C / (1.0 + (1.0 - C) * (2.0 * sigma - 1.0 + 2.0 * std::sqrt(sigma * (sigma + C))));
}

double chi_primary_form(double sigma, double C) {
  const double s = std::sqrt(sigma * (sigma + C));
  return (2.0 * sigma + C - 2.0 * s) / (2.0 * sigma + 1.0 - 2.0 * s);
}

double omega(double sigma, double C) {
  if (sigma < 1.0 || C < 0.0 || C >= 1.0) throw std::invalid_argument("omega: bad arguments");
  return C / (1.0 + (1.0 - C) * std::sqrt(sigma / (sigma + C)));
}

double omega_primary_form(double sigma, double C) {
  const double s = std::sqrt(sigma * (sigma + C));
  return (sigma + C - (1.0 - C) * s) / (1.0 + sigma * (2.0 - C));
}

double chi1(double C, int m_h) {
  if (m_h < 1) throw std::invalid_argument("chi1: m_h must be >= 1");
  if (C < 0.0 || C >= 1.0) throw std::invalid_argument("chi1: bad C");
  const int half = (1 + m_h) / 2;
  const int rem = (1 + m_h) - 2 * half;
  return std::pow(chi(1.0, C), half) * std::pow(C, rem);
}

std::vector<double> gamma_history(const std::vector<Vector>& residuals) {
  if (residuals.empty()) throw std::invalid_argument("gamma_history: no residuals");
  return gamma_tilde_history(residuals, residuals[0]);
}

std::vector<double> gamma_tilde_history(const std::vector<Vector>& residuals,
                                        const Vector& q) {
  if (residuals.empty()) throw std::invalid_argument("gamma_tilde_history: no residuals");
  const Vector& rk = residuals[0];
  const double rr = rk.squaredNorm();
  if (rr == 0.0) throw std::invalid_argument("gamma_tilde_history: r_k is zero");
  std::vector<double> gammas;
  for (std::size_t j = 1; j < residuals.size(); ++j)
    gammas.push_back((residuals[j] - residuals[j - 1]).dot(q) / rr);
  return gammas;
}

double sigma_scalar(const std::vector<double>& gammas) {
  double s = 1.0;
  for (std::size_t j = 1; j < gammas.size(); ++j) s += std::abs(gammas[j]);
  return s * s;
}

SigmaDiagnostic block_gamma_first(const BlockGammaInput& in) {
  SigmaDiagnostic d;
  d.iter = in.iter;
  d.variant = SigmaVariant::BlockFirstColumn;
  const Eigen::Index nb = in.X.cols();
  if (nb < 2) throw std::invalid_argument("block_gamma_first: needs n_b >= 2");

  const double delta0 = in.rho_prev(0) - in.rho(0);  // delta_{k-1,(1)}
  if (!(delta0 > 1e-300)) return d;                  // stagnated: unavailable

  // E_{k,(2:n_b)} = rho_{k,(2:)} - rho_{k+1,(1)} I, diagonal and (in the
  // asymptotic regime) positive.
  const Vector e2 = in.rho.tail(nb - 1).array() - in.rho_next_1;
  if ((e2.array().abs() <= 1e-300).any()) return d;
  const Vector e2i = e2.array().inverse();

  const Matrix Gam = in.X.transpose() * in.X_prev;  // Gamma_k
  const Vector h = Gam.block(1, 0, nb - 1, 1);
  const Matrix H2 = Gam.block(1, 1, nb - 1, nb - 1);
  const Vector dprev2 = in.rho_prev.tail(nb - 1) - in.rho.tail(nb - 1);

  Matrix M = e2i.asDiagonal();
  M -= H2 * e2i.asDiagonal() * H2.transpose();
  M += (e2i.array() * dprev2.array() / (e2 + dprev2).array())
           .matrix()
           .asDiagonal();

  Eigen::SelfAdjointEigenSolver<Matrix> esM(0.5 * (M + M.transpose()));
  const double mscale = std::max(1e-300, M.cwiseAbs().maxCoeff());
  d.M_positive_definite = esM.eigenvalues()(0) > -1e-10 * mscale;

  const Vector r1 = in.R.col(0);
  const double rr = r1.squaredNorm();
  if (!(rr > 0)) return d;
  const Vector Ar1 = in.AR.col(0);
  const Matrix R2 = in.R.rightCols(nb - 1);
  const Matrix AR2 = in.AR.rightCols(nb - 1);
  const Eigen::RowVectorXd proj = r1.transpose() * R2 / rr;
  const Matrix Rp = R2 - r1 * proj;          // R_perp
  const Matrix ARp = AR2 - Ar1 * proj;       // A * R_perp (exact combination)

  Matrix Gp = Rp.transpose() * ARp - in.rho_next_1 * (Rp.transpose() * Rp);
  Gp = 0.5 * (Gp + Gp.transpose()).eval();
  // Psi_22 is written as an inverse of R_perp^H (A - rho_+ I) R_perp; when
  // R_perp is rank deficient we take the Moore-Penrose reading and flag it.
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Gp);
  cod.setThreshold(1e-12);
  d.R_perp_rank_deficient = cod.rank() < Gp.rows();
  const Matrix Gpi = cod.pseudoInverse();

  const Matrix RtR = Rp.transpose() * Rp;
  const Matrix Psi21Psi22Psi21 =
      e2i.asDiagonal() * RtR * Gpi * RtR * e2i.asDiagonal();
  const Vector Phi2 = (Ar1 - in.rho(0) * r1) / rr;
  const Vector RtPhi2 = Rp.transpose() * Phi2;
  const double phi2psi22phi2 = RtPhi2.dot(Gpi * RtPhi2);
  const Vector Phi1 =
      e2i.asDiagonal() *
      (R2.transpose() * r1 - RtR * (Gpi * (Rp.transpose() * (Ar1 - in.rho(0) * r1)))) / rr;

  const Vector v1 = h / delta0 + Phi1;
  const Matrix Mid = M - h * h.transpose() / delta0 - Psi21Psi22Psi21;
  const Eigen::FullPivLU<Matrix> luMid(Mid);
  if (luMid.isInvertible())
    d.gamma_sq_full = delta0 * (v1.dot(luMid.solve(v1)) + phi2psi22phi2);
  else
    d.gamma_sq_full = std::numeric_limits<double>::quiet_NaN();

  d.tau_sq = h.dot(M.llt().solve(h)) / delta0;
  if (!d.M_positive_definite || !(d.tau_sq >= 0.0 && d.tau_sq < 1.0)) {
    d.theory_precondition_violated = true;
    d.gamma_sq_shrink = std::numeric_limits<double>::quiet_NaN();
    d.sigma = std::numeric_limits<double>::quiet_NaN();
  } else {
    d.gamma_sq_shrink = d.tau_sq / (1.0 - d.tau_sq) + delta0 * phi2psi22phi2;
    d.sigma = 1.0 + d.gamma_sq_shrink;
  }
  d.h_over_sqrt_delta = h.norm() / std::sqrt(delta0);
  d.available = true;
  return d;
}

RateReport rate_report(const std::vector<double>& eps_by_iter,
                       const std::vector<double>& sigma_by_iter,
                       const SpectralSummary& summary, int m_e, int m_h) {
  RateReport rep;
  rep.C_cheb = bound_C(summary, m_e);
  rep.m_e = m_e;
  rep.m_h = m_h;
  const double C = rep.C_cheb;
  const double floor =
      1e2 * std::numeric_limits<double>::epsilon() * std::abs(summary.lambda_1);
  const int len = static_cast<int>(eps_by_iter.size());
  auto ok = [&](int k) {
    return k >= 0 && k < len && std::isfinite(eps_by_iter[k]) && eps_by_iter[k] > floor;
  };
  for (int k = len / 2; k < len; ++k) {
    if (!ok(k) || !ok(k - 1)) continue;
    RateRow row;
    row.iter = k;
    row.eps = eps_by_iter[k];
    row.sigma = 1.0;
    if (m_h >= 1 && k < static_cast<int>(sigma_by_iter.size()) &&
        std::isfinite(sigma_by_iter[k]))
      row.sigma = std::max(1.0, sigma_by_iter[k]);
    row.step_ratio = eps_by_iter[k] / eps_by_iter[k - 1];
    row.step_bound = (m_h == 0) ? C : std::sqrt(chi(row.sigma, C));
    row.ratio_vs_bound =
        row.step_bound > 0 ? row.step_ratio / row.step_bound
                           : std::numeric_limits<double>::infinity();
    const int back = k - 1 - m_h;
    if (m_h >= 1 && ok(back)) {
      row.multi_available = true;
      row.multi_ratio = eps_by_iter[k] / eps_by_iter[back];
      row.multi_bound = std::min(chi(row.sigma, C), chi1(C, m_h));
    }
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace locg::rate
