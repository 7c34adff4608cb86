#include "pwapass/passivity.hpp"

#include <cmath>
#include <sstream>

#include "pwapass/linalg.hpp"
#include "pwapass/lmi_assembly.hpp"

namespace pwapass::passivity {

RhoSet rho_terms(const model::NonlinearSystemSpec& sys,
                 const approx::PwaApproximation& pwa, std::size_t i, const Mat& pbar_j) {
  RhoSet rho;
  const auto& ci = pwa.cells[i];
  const double np = lmi::spectral_norm(pbar_j);
  const double na = lmi::spectral_norm(ci.a_hat());
  const double nd = lmi::spectral_norm(pwa.d1_hat(sys));
  rho.rho1 = 2.0 * ci.eps * np * na;
  rho.rho2 = ci.eps * np * nd;
  rho.rho3 = ci.eps * ci.eps * np;
  rho.rho4 = ci.delta;
  return rho;
}

Mat lambda_value(const model::NonlinearSystemSpec& sys,
                 const model::PolyhedralPartition& partition,
                 const approx::PwaApproximation& pwa, std::size_t i, std::size_t j,
                 const Mat& pbar_i, const Mat& pbar_j, const Mat& w_i,
                 const RhoSet& rho) {
  (void)j;
  const std::size_t n = sys.n(), s = sys.s();
  const auto& ci = pwa.cells[i];
  const Mat ahat = ci.a_hat();
  const Mat dhat = pwa.d1_hat(sys);
  const Mat cbar = ci.c_bar();
  const Mat ebar = partition.cell(i).ebar();

  Mat l11 = ahat.transposed() * pbar_j * ahat - pbar_i;
  if (ebar.rows() > 0) l11 += ebar.transposed() * w_i * ebar;
  for (std::size_t k = 0; k <= n; ++k) l11(k, k) += rho.sum();

  Mat l12 = ahat.transposed() * pbar_j * dhat - cbar.transposed();
  Mat l22 = dhat.transposed() * pbar_j * dhat - (sys.D2().transposed() + sys.D2());
  for (std::size_t k = 0; k < s; ++k) l22(k, k) += rho.rho2 + rho.rho4;

  Mat lam(n + 1 + s, n + 1 + s);
  lam.set_block(0, 0, l11);
  lam.set_block(0, n + 1, l12);
  lam.set_block(n + 1, 0, l12.transposed());
  lam.set_block(n + 1, n + 1, l22);
  lam.symmetrize();
  return lam;
}

Mat positivity_value(const model::PolyhedralPartition& p, std::size_t i,
                     const Mat& pbar_i, const Mat& r_i) {
  const Mat ebar = p.cell(i).ebar();
  Mat m = pbar_i;
  if (ebar.rows() > 0) m -= ebar.transposed() * r_i * ebar;
  m.symmetrize();
  return m;
}

namespace {

struct Vars {
  std::vector<int> pbar, w, r;
};

// One fixed-point iterate: solve the LMIs with frozen rho values.
lmi::LmiSolution solve_iterate(const model::NonlinearSystemSpec& sys,
                               const model::PolyhedralPartition& partition,
                               const approx::PwaApproximation& pwa,
                               const std::vector<RhoSet>& rho,  // per (i*N+j)
                               const lmi::SolveOptions& sopts, lmi::LmiProblem& prob,
                               Vars& vars) {
  const std::size_t N = partition.size();
  const std::size_t n = sys.n(), s = sys.s();
  prob = lmi::LmiProblem();
  vars = Vars{};

  for (std::size_t i = 0; i < N; ++i) {
    const auto& cell = partition.cell(i);
    if (cell.contains_origin) {
      vars.pbar.push_back(
          prob.add_symmetric_corner("Pbar" + std::to_string(i), n + 1, n));
    } else {
      vars.pbar.push_back(prob.add_symmetric("Pbar" + std::to_string(i), n + 1));
    }
    const std::size_t ne = cell.E.rows();
    vars.w.push_back(ne ? prob.add_symmetric("W" + std::to_string(i), ne, true) : -1);
    vars.r.push_back(ne ? prob.add_symmetric("R" + std::to_string(i), ne, true) : -1);
  }

  for (std::size_t i = 0; i < N; ++i) {
    const auto& cell = partition.cell(i);
    const Mat ebar = cell.ebar();
    // Pbar(i) - Ebar^T R(i) Ebar > 0 (strict); origin cells lose the lift
    // row/col structurally and the solver's presolve drops it.
    auto& pos = prob.add_block(n + 1, lmi::Sense::kPsdStrict,
                               "positivity[" + std::to_string(i) + "]");
    lmi::put_var_sym(prob, pos, 0, vars.pbar[i], n + 1);
    if (ebar.rows() > 0)
      lmi::put_quad_sym(prob, pos, 0, ebar, vars.r[i], -1.0);

    const auto& ci = pwa.cells[i];
    const Mat ahat = ci.a_hat();
    const Mat dhat = pwa.d1_hat(sys);
    const Mat cbar = ci.c_bar();
    for (std::size_t j = 0; j < N; ++j) {
      auto& blk = prob.add_block(n + 1 + s, lmi::Sense::kNsd,
                                 "Lambda[" + std::to_string(i) + "," +
                                     std::to_string(j) + "]");
      const RhoSet& rr = rho[i * N + j];
      // Lambda11
      lmi::put_quad_sym(prob, blk, 0, ahat, vars.pbar[j]);
      lmi::put_var_sym(prob, blk, 0, vars.pbar[i], n + 1, -1.0);
      if (ebar.rows() > 0) lmi::put_quad_sym(prob, blk, 0, ebar, vars.w[i]);
      for (std::size_t k = 0; k <= n; ++k) blk.add_const(k, k, rr.sum());
      // Lambda12 = Ahat^T Pbar(j) Dhat - Cbar^T
      lmi::put_bilinear_sym(prob, blk, 0, n + 1, ahat, vars.pbar[j], dhat);
      lmi::put_const_offdiag(blk, 0, n + 1, cbar.transposed(), -1.0);
      // Lambda22
      lmi::put_quad_sym(prob, blk, n + 1, dhat, vars.pbar[j]);
      lmi::put_const_sym(blk, n + 1, sys.D2().transposed() + sys.D2(), -1.0);
      for (std::size_t k = 0; k < s; ++k)
        blk.add_const(n + 1 + k, n + 1 + k, rr.rho2 + rr.rho4);
    }
  }
  return lmi::solve_feasibility(prob, sopts);
}

}  // namespace

Theorem1Result check_passivity(const model::NonlinearSystemSpec& sys,
                               const model::PolyhedralPartition& partition,
                               const approx::PwaApproximation& pwa,
                               const Theorem1Options& opts) {
  const std::size_t N = partition.size();
  if (pwa.cells.size() != N)
    throw std::invalid_argument("check_passivity: approximation does not cover partition");

  std::vector<RhoSet> rho(N * N);  // starts at zero
  lmi::LmiProblem prob;
  Vars vars;
  lmi::LmiSolution sol;

  for (int round = 0; round < opts.max_fixed_point_rounds; ++round) {
    sol = solve_iterate(sys, partition, pwa, rho, opts.solve, prob, vars);
    if (!sol.feasible()) {
      NotCertified nc;
      nc.reason = "LMI solve not feasible: " + sol.detail;
      // locate the worst Lambda pair for the report
      double worst = 1e300;
      std::size_t bi = 0;
      for (const auto& b : prob.blocks()) {
        const double m = prob.block_margin(b, sol.assignment);
        if (b.label.rfind("Lambda", 0) == 0 && m < worst) {
          worst = m;
          std::sscanf(b.label.c_str(), "Lambda[%d,%d]", &nc.worst_i, &nc.worst_j);
          nc.worst_margin = m;
        }
        ++bi;
      }
      return nc;
    }

    // recompute rho from the iterate and verify consistency
    std::vector<Mat> pbar(N), w(N), r(N);
    for (std::size_t i = 0; i < N; ++i) {
      pbar[i] = prob.value(vars.pbar[i], sol.assignment);
      const std::size_t ne = partition.cell(i).E.rows();
      w[i] = ne ? prob.value(vars.w[i], sol.assignment) : Mat(0, 0);
      r[i] = ne ? prob.value(vars.r[i], sol.assignment) : Mat(0, 0);
    }
    std::vector<RhoSet> rho_new(N * N);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j)
        rho_new[i * N + j] = rho_terms(sys, pwa, i, pbar[j]);

    // final verification pass with consistent rho
    bool consistent = true;
    Theorem1Certificate cert;
    cert.pbar = pbar;
    cert.w = w;
    cert.r = r;
    cert.fixed_point_rounds = round + 1;
    double worst = 1e300;
    NotCertified nc;
    for (std::size_t i = 0; i < N && consistent; ++i) {
      const Mat pos = positivity_value(partition, i, pbar[i], r[i]);
      // strictness applies on the structurally nonzero support
      const std::size_t dim = partition.cell(i).contains_origin ? sys.n() : sys.n() + 1;
      const double pm = linalg::min_eig(pos.block(0, 0, dim, dim));
      cert.positivity_margins.push_back(pm);
      if (pm < opts.solve.tau - opts.solve.tolerance) consistent = false;
      for (std::size_t j = 0; j < N; ++j) {
        PairAudit pa;
        pa.i = i;
        pa.j = j;
        pa.rho = rho_new[i * N + j];
        const Mat lam =
            lambda_value(sys, partition, pwa, i, j, pbar[i], pbar[j], w[i], pa.rho);
        pa.lambda_margin = -linalg::max_eig(lam);
        cert.pairs.push_back(pa);
        if (pa.lambda_margin < worst) {
          worst = pa.lambda_margin;
          nc.worst_i = static_cast<int>(i);
          nc.worst_j = static_cast<int>(j);
          nc.worst_margin = pa.lambda_margin;
        }
        if (pa.lambda_margin < -opts.solve.tolerance) consistent = false;
      }
    }
    if (consistent) return cert;

    rho = rho_new;
    if (round == opts.max_fixed_point_rounds - 1) {
      nc.reason = "rho fixed point did not converge";
      return nc;
    }
  }
  NotCertified nc;
  nc.reason = "fixed-point budget exhausted";
  return nc;
}

}  // namespace pwapass::passivity
