// Infeasible primal-dual path-following method for block-diagonal SDPs.
//
// The LMI problem  min c'y  s.t.  F0 + sum_i y_i F_i + margin I <= 0  is the
// dual of the standard pair
//
//   (P)  min <C, X>  s.t. <A_i, X> = b_i, X >= 0
//   (D)  max b'y     s.t. sum_i y_i A_i + S = C, S >= 0
//
// with C = -(F0 + margin I), A_i = F_i and b = -c. Search directions use
// the HKM scaling; each iteration takes a Mehrotra predictor and corrector.

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>

#include "sparse_lpv/kernels.hpp"
#include "sparse_lpv/sdp.hpp"

namespace sparse_lpv::sdp {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct BlockTerm {
  int unknown = 0;
  std::vector<double> values;       // both triangles
  std::vector<std::int32_t> flat;   // row * dim + col
  std::vector<int> rows;            // distinct rows touched
};

struct Block {
  int dim = 0;
  RowMat C;
  std::vector<BlockTerm> terms;
};

struct Iterate {
  std::vector<RowMat> X, S;
  Vector y;
};

std::vector<Block> build_blocks(const Problem& p) {
  std::vector<Block> blocks;
  blocks.reserve(p.constraints().size());
  for (const auto& c : p.constraints()) {
    Block b;
    b.dim = c.dim;
    b.C = RowMat::Zero(c.dim, c.dim);
    for (const auto& e : c.constant) {
      b.C(e.row, e.col) -= e.value;
      if (e.row != e.col) b.C(e.col, e.row) -= e.value;
    }
    b.C.diagonal().array() -= c.margin;
    for (const auto& t : c.terms) {
      BlockTerm bt;
      bt.unknown = t.unknown;
      for (const auto& e : t.entries) {
        bt.values.push_back(e.value);
        bt.flat.push_back(e.row * c.dim + e.col);
        bt.rows.push_back(e.row);
        if (e.row != e.col) {
          bt.values.push_back(e.value);
          bt.flat.push_back(e.col * c.dim + e.row);
          bt.rows.push_back(e.col);
        }
      }
      std::sort(bt.rows.begin(), bt.rows.end());
      bt.rows.erase(std::unique(bt.rows.begin(), bt.rows.end()), bt.rows.end());
      b.terms.push_back(std::move(bt));
    }
    blocks.push_back(std::move(b));
  }
  return blocks;
}

double frob(const RowMat& a, const RowMat& b) {
  return kernels::dot({a.data(), static_cast<std::size_t>(a.size())},
                      {b.data(), static_cast<std::size_t>(b.size())});
}

double term_dot(const BlockTerm& t, const RowMat& M) {
  return kernels::gather_dot(t.values, t.flat, M.data());
}

/// A(M)_i = sum_blocks <A_i, M_b>
Vector apply_A(const std::vector<Block>& blocks, const std::vector<RowMat>& M, int m) {
  Vector out = Vector::Zero(m);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (const auto& t : blocks[b].terms) out[t.unknown] += term_dot(t, M[b]);
  }
  return out;
}

/// (A' y)_b = sum_i y_i A_i
RowMat apply_At(const Block& block, const Vector& y) {
  RowMat out = RowMat::Zero(block.dim, block.dim);
  double* data = out.data();
  for (const auto& t : block.terms) {
    const double yi = y[t.unknown];
    if (yi == 0.0) continue;
    for (std::size_t k = 0; k < t.values.size(); ++k) data[t.flat[k]] += yi * t.values[k];
  }
  return out;
}

RowMat sym(const RowMat& a) { return 0.5 * (a + a.transpose()); }

/// Largest step a in (0, inf] with M + a dM >= 0, given the Cholesky factor of M.
double max_step(const Eigen::LLT<RowMat>& chol, const RowMat& dM) {
  if (dM.rows() == 1) {
    const double m = chol.matrixLLT()(0, 0) * chol.matrixLLT()(0, 0);
    return dM(0, 0) < 0 ? -m / dM(0, 0) : std::numeric_limits<double>::infinity();
  }
  RowMat tmp = chol.matrixL().solve(dM);
  RowMat w = chol.matrixL().solve(RowMat(tmp.transpose()));
  Eigen::SelfAdjointEigenSolver<RowMat> es(sym(w), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  return lmin < 0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

double step_length(const std::vector<RowMat>& M, const std::vector<RowMat>& dM, bool& ok) {
  double a = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < M.size(); ++b) {
    Eigen::LLT<RowMat> chol(M[b]);
    if (chol.info() != Eigen::Success) {
      ok = false;
      return 0.0;
    }
    a = std::min(a, max_step(chol, dM[b]));
  }
  return a;
}

Solution solve_constant(const Problem& problem) {
  Solution sol;
  sol.values = Vector::Zero(0);
  const double viol = max_violation(problem, sol.values);
  sol.objective = 0.0;
  sol.best_effort = false;
  if (viol <= 0.0) {
    sol.status = Status::kOptimal;
    sol.message = "no unknowns; constant constraints hold";
  } else {
    sol.status = Status::kInfeasible;
    sol.best_effort = true;
    sol.message = "no unknowns; a constant constraint is violated";
  }
  return sol;
}

}  // namespace

Solution solve(const Problem& problem, const Settings& settings) {
  const int m = problem.num_unknowns();
  if (m == 0) return solve_constant(problem);

  const std::vector<Block> blocks = build_blocks(problem);
  const std::size_t nb = blocks.size();
  const Vector b = -problem.objective();

  // Unknowns absent from every constraint are pinned through the Schur system.
  std::vector<bool> used(static_cast<std::size_t>(m), false);
  for (const auto& blk : blocks) {
    for (const auto& t : blk.terms) used[static_cast<std::size_t>(t.unknown)] = true;
  }
  Solution sol;
  for (int i = 0; i < m; ++i) {
    if (!used[static_cast<std::size_t>(i)] && b[i] != 0.0) {
      sol.status = Status::kNumericalFailure;
      sol.values = Vector::Zero(m);
      sol.message = "objective is unbounded: an unknown with nonzero cost appears in no constraint";
      return sol;
    }
  }

  // Starting point (scaled identities).
  double normC = 0.0;
  std::vector<double> normA(static_cast<std::size_t>(m), 0.0);
  for (const auto& blk : blocks) {
    normC += blk.C.squaredNorm();
    for (const auto& t : blk.terms) {
      double s = 0.0;
      for (double v : t.values) s += v * v;
      normA[static_cast<std::size_t>(t.unknown)] += s;
    }
  }
  normC = std::sqrt(normC);
  for (auto& v : normA) v = std::sqrt(v);
  const double normb = b.norm();

  Iterate it;
  it.y = Vector::Zero(m);
  int n_total = 0;
  for (const auto& blk : blocks) {
    const double n = blk.dim;
    n_total += blk.dim;
    double xi = std::max(10.0, std::sqrt(n));
    double eta = std::max(10.0, std::sqrt(n));
    double cnorm = blk.C.norm();
    eta = std::max(eta, cnorm);
    for (const auto& t : blk.terms) {
      double an = 0.0;
      for (double v : t.values) an += v * v;
      an = std::sqrt(an);
      xi = std::max(xi, n * (1.0 + std::abs(b[t.unknown])) / (1.0 + an));
      eta = std::max(eta, an);
    }
    eta = (1.0 + eta) / std::sqrt(n);
    it.X.push_back(RowMat::Identity(blk.dim, blk.dim) * xi);
    it.S.push_back(RowMat::Identity(blk.dim, blk.dim) * eta);
  }

  std::vector<RowMat> Sinv(nb), Rd(nb), dX(nb), dS(nb), G(nb), H(nb);
  Eigen::MatrixXd M(m, m);
  RowMat P, T;

  // Last iterate that met the relaxed tolerances; used when progress breaks down.
  struct Snapshot {
    Vector y;
    Stats stats;
  };
  std::optional<Snapshot> best;

  auto finish = [&](Status status, std::string msg) {
    if (status == Status::kNumericalFailure && best) {
      it.y = best->y;
      sol.stats = best->stats;
      status = Status::kOptimal;
      msg += "; returning last iterate within relaxed tolerances";
    }
    sol.status = status;
    sol.values = it.y;
    sol.objective = problem.objective().dot(it.y);
    sol.best_effort = status != Status::kOptimal;
    sol.message = std::move(msg);
    return sol;
  };
  auto finish_best = [&](std::string msg) {
    it.y = best->y;
    sol.stats = best->stats;
    return finish(Status::kOptimal, std::move(msg));
  };

  int stalled = 0;
  for (int iter = 0;; ++iter) {
    // Residuals and objective values.
    const Vector AX = apply_A(blocks, it.X, m);
    const Vector rp = b - AX;
    double rd_norm2 = 0.0;
    double pobj = 0.0;
    double xs = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      Rd[k] = blocks[k].C - apply_At(blocks[k], it.y) - it.S[k];
      rd_norm2 += Rd[k].squaredNorm();
      pobj += frob(blocks[k].C, it.X[k]);
      xs += frob(it.X[k], it.S[k]);
    }
    const double dobj = b.dot(it.y);
    const double mu = xs / n_total;
    const double pres = rp.norm() / (1.0 + normb);
    const double dres = std::sqrt(rd_norm2) / (1.0 + normC);
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double relgap = std::max(gap, xs / (1.0 + std::abs(pobj) + std::abs(dobj)));

    sol.stats = Stats{iter, pobj, dobj, relgap, pres, dres};
    auto within = [&](double f) {
      return relgap <= f * settings.gap_tolerance && pres <= f * settings.primal_tolerance &&
             dres <= f * settings.dual_tolerance;
    };
    if (settings.verbose) {
      std::fprintf(stderr, "%3d  pobj %+.10e  dobj %+.10e  gap %.2e  pres %.2e  dres %.2e  mu %.2e\n",
                   iter, pobj, dobj, relgap, pres, dres, mu);
    }

    if (within(1.0)) return finish(Status::kOptimal, "converged");
    if (within(settings.stall_factor) && (!best || relgap < best->stats.relative_gap)) {
      best = Snapshot{it.y, sol.stats};
    }
    // Farkas certificate for an empty LMI set: X >= 0, A(X) ~ 0, <C,X> < 0.
    if (pobj < 0 && AX.norm() / (-pobj) < settings.infeasibility_tolerance) {
      return finish(Status::kInfeasible, "LMI constraints are infeasible (primal ray found)");
    }
    if (dobj > 0 && std::sqrt(rd_norm2 + 0.0) < 1e300) {
      double aty_s = 0.0;
      for (std::size_t k = 0; k < nb; ++k) {
        aty_s += (apply_At(blocks[k], it.y) + it.S[k]).squaredNorm();
      }
      if (std::sqrt(aty_s) / dobj < settings.infeasibility_tolerance && dobj > 1e8 * (1.0 + normC)) {
        return finish(Status::kNumericalFailure, "objective appears unbounded below");
      }
    }
    if (iter >= settings.max_iterations) {
      if (best) return finish_best("iteration limit reached within relaxed tolerances");
      return finish(Status::kIterationLimit, "iteration limit reached");
    }

    // Schur complement M_ij = <A_i, X A_j S^-1>.
    M.setZero();
    for (std::size_t k = 0; k < nb; ++k) {
      Eigen::LLT<RowMat> chol(it.S[k]);
      if (chol.info() != Eigen::Success) return finish(Status::kNumericalFailure, "dual slack lost definiteness");
      Sinv[k] = chol.solve(RowMat::Identity(blocks[k].dim, blocks[k].dim));
      Sinv[k] = sym(Sinv[k]);
      const Block& blk = blocks[k];
      const int d = blk.dim;
      const auto dsz = static_cast<std::size_t>(d);
      const RowMat& X = it.X[k];
      T.resize(d, d);
      P.resize(d, d);
      for (std::size_t j = 0; j < blk.terms.size(); ++j) {
        const BlockTerm& tj = blk.terms[j];
        // T = A_j S^-1 (only rows in tj.rows are nonzero), P = X T.
        for (int r : tj.rows) T.row(r).setZero();
        for (std::size_t e = 0; e < tj.values.size(); ++e) {
          const int r = tj.flat[e] / d;
          const int c = tj.flat[e] % d;
          kernels::axpy(tj.values[e], {Sinv[k].row(c).data(), dsz}, {T.row(r).data(), dsz});
        }
        P.setZero();
        for (int r : tj.rows) {
          for (int row = 0; row < d; ++row) {
            const double xr = X(row, r);
            if (xr != 0.0) kernels::axpy(xr, {T.row(r).data(), dsz}, {P.row(row).data(), dsz});
          }
        }
        for (std::size_t i = 0; i <= j; ++i) {
          const BlockTerm& ti = blk.terms[i];
          M(ti.unknown, tj.unknown) += term_dot(ti, P);
        }
      }
    }
    for (int i = 0; i < m; ++i) {
      if (!used[static_cast<std::size_t>(i)]) M(i, i) = 1.0;
    }
    // Terms are sorted by unknown, so the accumulation above filled the upper triangle.
    Eigen::LLT<Eigen::MatrixXd> schur(M.selfadjointView<Eigen::Upper>());
    Eigen::LDLT<Eigen::MatrixXd> schur_ldlt;
    const bool use_llt = schur.info() == Eigen::Success;
    if (!use_llt) {
      Eigen::MatrixXd Mreg = M.selfadjointView<Eigen::Upper>();
      Mreg.diagonal().array() += 1e-14 * (1.0 + Mreg.diagonal().cwiseAbs().maxCoeff());
      schur_ldlt.compute(Mreg);
      if (schur_ldlt.info() != Eigen::Success) {
        return finish(Status::kNumericalFailure, "Schur complement factorization failed");
      }
    }
    const Eigen::MatrixXd Mfull = M.selfadjointView<Eigen::Upper>();
    auto schur_solve = [&](const Vector& rhs) -> Vector {
      Vector x = use_llt ? Vector(schur.solve(rhs)) : Vector(schur_ldlt.solve(rhs));
      // One step of iterative refinement.
      const Vector r = rhs - Mfull * x;
      x += use_llt ? Vector(schur.solve(r)) : Vector(schur_ldlt.solve(r));
      return x;
    };

    // One Newton solve for the target G: dX = G - sym(X dS S^-1).
    Vector dy;
    auto direction = [&]() {
      for (std::size_t k = 0; k < nb; ++k) H[k] = it.X[k] * Rd[k] * Sinv[k] - G[k];
      Vector rhs = rp + apply_A(blocks, H, m);
      dy = schur_solve(rhs);
      for (std::size_t k = 0; k < nb; ++k) {
        dS[k] = Rd[k] - apply_At(blocks[k], dy);
        dX[k] = G[k] - sym(it.X[k] * dS[k] * Sinv[k]);
      }
    };

    // Predictor.
    for (std::size_t k = 0; k < nb; ++k) G[k] = -it.X[k];
    direction();
    bool ok = true;
    const double ap_max = step_length(it.X, dX, ok);
    const double ad_max = step_length(it.S, dS, ok);
    if (!ok) return finish(Status::kNumericalFailure, "iterate lost definiteness");
    const double ap = std::min(1.0, ap_max);
    const double ad = std::min(1.0, ad_max);
    double xs_aff = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      xs_aff += frob(RowMat(it.X[k] + ap * dX[k]), RowMat(it.S[k] + ad * dS[k]));
    }
    const double mu_aff = xs_aff / n_total;
    double sigma = std::pow(std::max(0.0, mu_aff) / mu, 3);
    sigma = std::clamp(sigma, 0.0, 1.0);

    // Corrector.
    std::vector<RowMat> dXa = dX, dSa = dS;
    for (std::size_t k = 0; k < nb; ++k) {
      G[k] = sigma * mu * Sinv[k] - it.X[k] - sym(dXa[k] * dSa[k] * Sinv[k]);
    }
    direction();
    const double ap2 = step_length(it.X, dX, ok);
    const double ad2 = step_length(it.S, dS, ok);
    if (!ok) return finish(Status::kNumericalFailure, "iterate lost definiteness");
    const double frac = std::max(settings.step_fraction,
                                 0.9 + 0.09 * std::min(std::min(1.0, ap2), std::min(1.0, ad2)));
    const double alpha_p = std::min(1.0, frac * ap2);
    const double alpha_d = std::min(1.0, frac * ad2);

    for (std::size_t k = 0; k < nb; ++k) {
      it.X[k] = sym(RowMat(it.X[k] + alpha_p * dX[k]));
      it.S[k] = sym(RowMat(it.S[k] + alpha_d * dS[k]));
    }
    it.y += alpha_d * dy;

    if (std::max(alpha_p, alpha_d) < 1e-8) {
      if (++stalled >= 3) return finish(Status::kNumericalFailure, "step lengths collapsed");
    } else {
      stalled = 0;
    }
  }
}

}  // namespace sparse_lpv::sdp
