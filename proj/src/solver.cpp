#include "locg/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace locg {

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Stagnation: return "converged-by-stagnation";
    case Outcome::ResidualConverged: return "residual-converged";
    case Outcome::MaxIter: return "max-iter";
    case Outcome::Breakdown: return "breakdown";
  }
  return "unknown";
}

Preconditioner Preconditioner::Jacobi(const Vector& diagA) {
  Preconditioner K;
  K.identity = false;
  Vector inv = diagA.cwiseAbs().cwiseMax(1e-300).cwiseInverse();
  K.apply = [inv](const Matrix& X) -> Matrix { return inv.asDiagonal() * X; };
  return K;
}

Preconditioner Preconditioner::Operator(std::function<Matrix(const Matrix&)> f) {
  Preconditioner K;
  K.identity = false;
  K.apply = std::move(f);
  return K;
}

namespace {

Matrix apply_counted(const HermitianOperator& A, long& ops, const Matrix& X) {
  ops += X.cols();
  return A.apply(X);
}

double estimate_norm(const HermitianOperator& A, long& ops) {
  Vector v = Vector::Ones(A.n) / std::sqrt(static_cast<double>(A.n));
  double nrm = 1.0;
  for (int i = 0; i < 8; ++i) {
    Vector w = apply_counted(A, ops, v);
    nrm = w.norm();
    if (nrm <= 0) return 1.0;
    v = w / nrm;
  }
  return 1.25 * nrm;  // small safety factor; used only for tolerances
}

Vector merged_values(const std::vector<double>& locked, const Vector& live) {
  Vector out(static_cast<Eigen::Index>(locked.size()) + live.size());
  for (std::size_t i = 0; i < locked.size(); ++i) out(i) = locked[i];
  out.tail(live.size()) = live;
  return out;
}

void validate_config(const SolverConfig& cfg, Eigen::Index n) {
  if (cfg.n_b < 1 || cfg.m_e < 1 || cfg.m_h < 0)
    throw std::invalid_argument("locg: need n_b >= 1, m_e >= 1, m_h >= 0");
  if (static_cast<Eigen::Index>(cfg.n_b) * (cfg.m_e + 1 + cfg.m_h) > n)
    throw std::invalid_argument("locg: search subspace does not fit (n too small)");
  if (!(cfg.stop_rel > 0)) throw std::invalid_argument("locg: stop_rel must be positive");
}

}  // namespace

RitzDecomposition rayleigh_ritz(const HermitianOperator& A, const Matrix& Z,
                                int n_b, double breakdown_tol, double a_scale) {
  if (Z.cols() < n_b) throw std::invalid_argument("rayleigh_ritz: fewer columns than n_b");
  const Matrix AZ = A.apply(Z);
  Matrix G = Z.adjoint() * AZ;
  const double asym = (G - G.transpose()).cwiseAbs().maxCoeff();
  if (asym > breakdown_tol * std::max(1.0, a_scale))
    throw std::runtime_error("nonreal Ritz values");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (G + G.transpose()));
  RitzDecomposition rd;
  rd.values = es.eigenvalues().head(n_b);
  rd.vectors = Z * es.eigenvectors().leftCols(n_b);
  return rd;
}

Subspace build_search_subspace(const HermitianOperator& A, const Preconditioner& K,
                               SolverState& st, const SolverConfig& cfg) {
  const Eigen::Index n = st.X.rows();
  const Eigen::Index nbu = st.X.cols();
  std::vector<Matrix> V{st.X}, AV{st.AX};
  Matrix S = K.identity ? st.R : K.apply(st.R);
  for (int t = 1; t <= cfg.m_e; ++t) {
    Matrix AS = apply_counted(A, st.ops, S);
    V.push_back(S);
    AV.push_back(AS);
    if (t < cfg.m_e) {
      Matrix F = AS - S * st.rho.asDiagonal();
      S = K.identity ? std::move(F) : K.apply(F);
    }
  }
  for (const auto& h : st.history) {
    V.push_back(h.first);
    AV.push_back(h.second);
  }
  Eigen::Index total = 0;
  for (const auto& B : V) total += B.cols();
  Matrix Vall(n, total), AVall(n, total);
  Eigen::Index c = 0;
  for (std::size_t i = 0; i < V.size(); ++i) {
    Vall.middleCols(c, V[i].cols()) = V[i];
    AVall.middleCols(c, V[i].cols()) = AV[i];
    c += V[i].cols();
  }
  if (st.locked_X.cols() > 0) {
    const Matrix C = st.locked_X.adjoint() * Vall;
    Vall -= st.locked_X * C;
    AVall -= st.locked_AX * C;
  }
  auto [Z, AZ] = orthonormalize_with_images(Vall, AVall, cfg.drop_tol);
  (void)nbu;
  return {std::move(Z), std::move(AZ)};
}

SolverState locg_init(const HermitianOperator& A, const Preconditioner& K,
                      const Matrix& X0, const SolverConfig& cfg) {
  (void)K;
  validate_config(cfg, A.n);
  if (X0.rows() != A.n || X0.cols() != cfg.n_b)
    throw std::invalid_argument("locg_init: X0 has wrong shape");
  const double orth = (X0.adjoint() * X0 - Matrix::Identity(cfg.n_b, cfg.n_b))
                          .cwiseAbs()
                          .maxCoeff();
  if (orth > 1e-6)
    throw std::invalid_argument("locg_init: X0 not orthonormal (rank deficient?)");
  SolverState st;
  st.a_scale = cfg.a_scale > 0 ? cfg.a_scale : estimate_norm(A, st.ops_setup);
  st.X = X0;
  st.AX = apply_counted(A, st.ops_setup, st.X);
  Matrix G = st.X.adjoint() * st.AX;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (G + G.transpose()));
  st.X = (st.X * es.eigenvectors()).eval();
  st.AX = (st.AX * es.eigenvectors()).eval();
  st.rho = es.eigenvalues();
  st.R = st.AX - st.X * st.rho.asDiagonal();
  return st;
}

StepStatus locg_step(const HermitianOperator& A, const Preconditioner& K,
                     SolverState& st, const SolverConfig& cfg,
                     IterationRecord& rec, const double* lambda1_ref,
                     const WitnessCallback& witness) {
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index nbu = st.X.cols();
  const long ops0 = st.ops;
  rec = IterationRecord{};
  rec.iter = st.iter;
  rec.n_locked = static_cast<int>(st.locked_vals.size());

  const Vector resnorms = st.R.colwise().norm().transpose();
  rec.ritz = merged_values(st.locked_vals, st.rho);
  rec.resnorms = merged_values(st.locked_resnorms, resnorms);
  if (lambda1_ref)
    rec.errs_rel = (rec.ritz.array() - *lambda1_ref).matrix() / std::abs(*lambda1_ref);

  // ---- search subspace (Krylov chain; A-images carried along) -------------
  const Eigen::Index n = st.X.rows();
  Matrix S = K.identity ? st.R : K.apply(st.R);
  const Matrix S1_raw = S;
  Matrix AS1;                       // A * (K R); equals A R for K = I
  std::vector<Matrix> krylov_raw;   // S_2 .. S_{m_e} raw (for q_k extraction)
  std::vector<Matrix> V{st.X}, AV{st.AX};
  for (int t = 1; t <= cfg.m_e; ++t) {
    Matrix AS = apply_counted(A, st.ops, S);
    if (t == 1) AS1 = AS;
    V.push_back(S);
    AV.push_back(AS);
    if (t < cfg.m_e) {
      Matrix F = AS - S * st.rho.asDiagonal();
      S = K.identity ? std::move(F) : K.apply(F);
      krylov_raw.push_back(S);
    }
  }
  for (const auto& h : st.history) {
    V.push_back(h.first);
    AV.push_back(h.second);
  }
  Eigen::Index total = 0;
  for (const auto& B : V) total += B.cols();
  Matrix Vall(n, total), AVall(n, total);
  {
    Eigen::Index c = 0;
    for (std::size_t i = 0; i < V.size(); ++i) {
      Vall.middleCols(c, V[i].cols()) = V[i];
      AVall.middleCols(c, V[i].cols()) = AV[i];
      c += V[i].cols();
    }
  }
  if (st.locked_X.cols() > 0) {
    const Matrix C = st.locked_X.adjoint() * Vall;
    Vall -= st.locked_X * C;
    AVall -= st.locked_AX * C;
  }
  auto [Z, AZ] = orthonormalize_with_images(Vall, AVall, cfg.drop_tol);
  rec.subspace_dim = static_cast<int>(Z.cols());

  Matrix G = Z.adjoint() * AZ;
  rec.asym = (G - G.transpose()).cwiseAbs().maxCoeff();
  if (rec.asym > cfg.breakdown_tol * std::max(1.0, st.a_scale)) {
    // Near convergence the carried A-images of nearly dependent columns lose
    // accuracy (roundoff amplified by the inverse of the dropped mass), which
    // shows up as apparent asymmetry.  Retry once with a coarser drop
    // tolerance so those directions are discarded; only a persistently
    // asymmetric projection is a genuine breakdown.
    auto [Z2, AZ2] = orthonormalize_with_images(Vall, AVall, 1e-5);
    Matrix G2 = Z2.adjoint() * AZ2;
    const double asym2 = (G2 - G2.transpose()).cwiseAbs().maxCoeff();
    if (asym2 > cfg.breakdown_tol * std::max(1.0, st.a_scale) ||
        Z2.cols() < nbu) {
      rec.ops = st.ops - ops0;
      rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return StepStatus::Breakdown;
    }
    Z = std::move(Z2);
    AZ = std::move(AZ2);
    G = std::move(G2);
    rec.asym = asym2;
    rec.subspace_dim = static_cast<int>(Z.cols());
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (G + G.transpose()));
  const Vector rhon = es.eigenvalues().head(nbu);
  const Matrix Xn = Z * es.eigenvectors().leftCols(nbu);
  const Matrix AXn = apply_counted(A, st.ops, Xn);
  const Matrix Rn = AXn - Xn * rhon.asDiagonal();

  // ---- diagnostics for the current iterate --------------------------------
  if (cfg.m_h == 0) rec.sigma = 0.0;  // Table 1/2 convention for SD and eSD
  if (cfg.diagnostics && cfg.n_b == 1 && cfg.m_h >= 1 && !st.rhist.empty()) {
    const Vector x = st.X.col(0);
    const Vector r = st.R.col(0);
    Vector q = r;
    bool have_q = true;
    if (cfg.m_e >= 2) {
      // q_k = r_k + (I-P_k)(I-Q_k) W_k c_k with c_k extracted from the
      // expansion of x_{k+1} in the step's own basis.
      have_q = false;
      if (K.identity && !krylov_raw.empty()) {
        Eigen::Index wcols = 0;
        for (const auto& B : krylov_raw) wcols += B.cols();
        Matrix Wraw(n, wcols);
        Eigen::Index c = 0;
        for (const auto& B : krylov_raw) {
          Wraw.middleCols(c, B.cols()) = B;
          c += B.cols();
        }
        try {
          auto [Wk, wrank] = orthonormalize(Wraw, cfg.drop_tol);
          const double rr = r.squaredNorm();
          Matrix T = Wk - x * (x.adjoint() * Wk) - r * ((r.adjoint() * Wk) / rr);
          Eigen::Index hcols = 0;
          for (const auto& h : st.history) hcols += h.first.cols();
          Matrix B(n, 1 + wrank + hcols);
          B.col(0) = r;
          B.middleCols(1, wrank) = T;
          c = 1 + wrank;
          for (const auto& h : st.history) {
            B.middleCols(c, h.first.cols()) =
                h.first - x * (x.adjoint() * h.first);
            c += h.first.cols();
          }
          const double xdot = x.dot(Xn.col(0));
          if (std::abs(xdot) > 1e-8) {
            const Vector d = Xn.col(0) / xdot - x;
            const Vector coef = B.colPivHouseholderQr().solve(d);
            const double alpha = coef(0);
            if (std::abs(alpha) > 1e-300) {
              q = r + T * (coef.segment(1, wrank) / alpha);
              have_q = true;
            }
          }
        } catch (const std::exception&) {
          have_q = false;
        }
      }
    }
    if (have_q) {
      std::vector<Vector> window{r};
      for (const auto& rv : st.rhist) {
        window.push_back(rv);
        if (static_cast<int>(window.size()) > cfg.m_h + 1) break;
      }
      rec.gammas = rate::gamma_tilde_history(window, q);
      rec.gamma1 = rec.gammas.empty() ? std::numeric_limits<double>::quiet_NaN()
                                      : rec.gammas[0];
      rec.sigma = rate::sigma_scalar(rec.gammas);
      rec.sigma_is_tilde = (cfg.m_e >= 2);
    }
  }
  if (cfg.diagnostics && cfg.n_b >= 2 && cfg.m_e == 1 && cfg.m_h == 1 &&
      K.identity && st.locked_vals.empty() && st.prev_rho.size() == nbu &&
      !st.history.empty()) {
    rate::BlockGammaInput in;
    in.X = st.X;
    in.X_prev = st.history.front().first;
    in.R = st.R;
    in.AR = AS1;
    in.rho = st.rho;
    in.rho_prev = st.prev_rho;
    in.rho_next_1 = rhon(0);
    in.iter = st.iter;
    rec.block = rate::block_gamma_first(in);
  }

  // ---- monotonicity (Thm 2.1) ---------------------------------------------
  for (Eigen::Index j = 0; j < nbu; ++j)
    if (rhon(j) > st.rho(j) + 1e-13 * std::abs(st.rho(j)))
      st.monotonicity_violated = true;

  // ---- witness for the line-search oracle ---------------------------------
  StepWitness w;
  bool emit = false;
  if (witness) {
    Eigen::Index hcols = 0;
    for (const auto& h : st.history) hcols += h.first.cols();
    Matrix Whist(n, hcols);
    Eigen::Index c = 0;
    for (const auto& h : st.history) {
      Whist.middleCols(c, h.first.cols()) = h.first;
      c += h.first.cols();
    }
    if (cfg.m_e == 1) {
      w.V = S1_raw;
      emit = true;
    }
    // (m_e >= 2 block steps have no V with W^H r = 0; no witness there.)
    if (emit) {
      w.iter = st.iter;
      w.n_b = static_cast<int>(nbu);
      w.X = st.X;
      w.W = std::move(Whist);
      w.X_plus = Xn;
    }
  }

  // ---- stopping decisions & state rotation --------------------------------
  bool stagnated = true;
  for (Eigen::Index j = 0; j < nbu; ++j)
    if (!(st.rho(j) - rhon(j) < cfg.stop_rel * std::abs(rhon(j)))) stagnated = false;

  if (cfg.n_b == 1 && cfg.m_h >= 1) {
    st.rhist.push_front(st.R.col(0));
    while (static_cast<int>(st.rhist.size()) > cfg.m_h) st.rhist.pop_back();
  }
  st.history.push_front({st.X, st.AX});
  while (static_cast<int>(st.history.size()) > cfg.m_h) st.history.pop_back();
  st.prev_rho = st.rho;
  st.X = Xn;
  st.AX = AXn;
  st.R = Rn;
  st.rho = rhon;
  ++st.iter;

  StepStatus status = StepStatus::Continue;
  const Vector rn_new = Rn.colwise().norm().transpose();
  const double res_tol = cfg.res_tol_rel * st.a_scale;
  if (stagnated) {
    status = StepStatus::Stagnation;
  } else if ((rn_new.array() <= res_tol).all()) {
    status = StepStatus::ResidualConverged;
  } else if (cfg.lock_converged) {
    Eigen::Index lock = 0;
    while (lock < nbu && rn_new(lock) <= res_tol) ++lock;
    if (lock > 0) {
      const Eigen::Index rest = nbu - lock;
      const Eigen::Index old_locked = st.locked_X.cols();
      st.locked_X.conservativeResize(n, old_locked + lock);
      st.locked_AX.conservativeResize(n, old_locked + lock);
      st.locked_X.rightCols(lock) = st.X.leftCols(lock);
      st.locked_AX.rightCols(lock) = st.AX.leftCols(lock);
      for (Eigen::Index j = 0; j < lock; ++j) {
        st.locked_vals.push_back(st.rho(j));
        st.locked_resnorms.push_back(rn_new(j));
      }
      st.X = st.X.rightCols(rest).eval();
      st.AX = st.AX.rightCols(rest).eval();
      st.R = st.R.rightCols(rest).eval();
      st.rho = st.rho.tail(rest).eval();
      st.prev_rho = st.prev_rho.tail(rest).eval();
      // Locked columns' history entries would be exactly dependent
      // directions; drop them from the ring.
      for (auto& h : st.history) {
        h.first = h.first.rightCols(rest).eval();
        h.second = h.second.rightCols(rest).eval();
      }
      st.rhist.clear();
      rec.newly_locked = true;
      if (rest == 0) status = StepStatus::ResidualConverged;
    }
  }

  rec.ops = st.ops - ops0;
  rec.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (emit) {
    w.newly_locked = rec.newly_locked;
    witness(w);
  }
  return status;
}

SolveResult locg_solve(const HermitianOperator& A, const Preconditioner& K,
                       const Matrix& X0, const SolverConfig& cfg,
                       const double* lambda1_ref, const WitnessCallback& witness) {
  SolverState st = locg_init(A, K, X0, cfg);
  SolveResult res;

  auto final_record = [&](int iter) {
    IterationRecord rec;
    rec.iter = iter;
    rec.ritz = merged_values(st.locked_vals, st.rho);
    rec.resnorms = merged_values(st.locked_resnorms,
                                 st.R.colwise().norm().transpose());
    if (lambda1_ref)
      rec.errs_rel =
          (rec.ritz.array() - *lambda1_ref).matrix() / std::abs(*lambda1_ref);
    rec.n_locked = static_cast<int>(st.locked_vals.size());
    if (cfg.m_h == 0) rec.sigma = 0.0;
    return rec;
  };

  // Zero-residual start: converged at iteration 0.
  const double res_tol = cfg.res_tol_rel * st.a_scale;
  if ((st.R.colwise().norm().array() <= res_tol).all()) {
    res.outcome = Outcome::ResidualConverged;
    res.iters = 0;
    res.trace.records.push_back(final_record(0));
  } else {
    for (int it = 0; it < cfg.max_iter; ++it) {
      IterationRecord rec;
      const StepStatus status = locg_step(A, K, st, cfg, rec, lambda1_ref, witness);
      res.trace.records.push_back(rec);
      if (status == StepStatus::Breakdown) {
        res.outcome = Outcome::Breakdown;
        res.breakdown_iter = rec.iter;
        break;
      }
      if (status == StepStatus::Stagnation) {
        res.outcome = Outcome::Stagnation;
        res.trace.records.push_back(final_record(st.iter));
        break;
      }
      if (status == StepStatus::ResidualConverged) {
        res.outcome = Outcome::ResidualConverged;
        res.trace.records.push_back(final_record(st.iter));
        break;
      }
      if (it == cfg.max_iter - 1) {
        res.outcome = Outcome::MaxIter;
        res.trace.records.push_back(final_record(st.iter));
      }
    }
    res.iters = st.iter;
  }

  res.ritz = merged_values(st.locked_vals, st.rho);
  if (st.locked_X.cols() > 0) {
    Matrix Xall(A.n, res.ritz.size());
    Xall.leftCols(st.locked_X.cols()) = st.locked_X;
    Xall.rightCols(st.X.cols()) = st.X;
    res.X = std::move(Xall);
  } else {
    res.X = st.X;
  }
  res.ops_total = st.ops;
  res.ops_setup = st.ops_setup;
  res.monotonicity_violated = st.monotonicity_violated;
  return res;
}

}  // namespace locg
