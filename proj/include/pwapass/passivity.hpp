#pragma once

#include <optional>
#include <variant>

#include "pwapass/approx.hpp"
#include "pwapass/lmi.hpp"

namespace pwapass::passivity {

// Open-loop passivity analysis (u == 0): piecewise quadratic storage
// V(x) = 1/2 xbar^T Pbar(i) xbar, cell-restriction multipliers W(i)/R(i)
// with positive entries, and the residual-growth penalty terms rho1..rho4.

struct RhoSet {
  double rho1 = 0.0, rho2 = 0.0, rho3 = 0.0, rho4 = 0.0;
  double sum() const { return rho1 + rho2 + rho3 + rho4; }
};

// rho terms for the pair (i, j) under the given Pbar(j).
RhoSet rho_terms(const model::NonlinearSystemSpec& sys,
                 const approx::PwaApproximation& pwa, std::size_t i, const Mat& pbar_j);

// Numeric Lambda(i,j) assembled from concrete matrices (used both for the
// verification replay and by the tests as an independent route).
Mat lambda_value(const model::NonlinearSystemSpec& sys,
                 const model::PolyhedralPartition& partition,
                 const approx::PwaApproximation& pwa, std::size_t i, std::size_t j,
                 const Mat& pbar_i, const Mat& pbar_j, const Mat& w_i,
                 const RhoSet& rho);

// Storage positivity matrix Pbar(i) - Ebar^T R Ebar (the strict inequality of
// the theorem; for origin cells the lift row is structurally zero and the
// check applies on the state block).
Mat positivity_value(const model::PolyhedralPartition& p, std::size_t i,
                     const Mat& pbar_i, const Mat& r_i);

struct PairAudit {
  std::size_t i = 0, j = 0;
  RhoSet rho;
  double lambda_margin = 0.0;  // lambda_min(-Lambda), >= -tol when satisfied
};

struct Theorem1Certificate {
  std::vector<Mat> pbar;  // per cell, (n+1)x(n+1); diag{P,0} for origin cells
  std::vector<Mat> w;     // per cell, dim = number of certificate rows
  std::vector<Mat> r;
  std::vector<PairAudit> pairs;
  std::vector<double> positivity_margins;  // per cell
  int fixed_point_rounds = 0;
};

struct NotCertified {
  std::string reason;
  int worst_i = -1, worst_j = -1;
  double worst_margin = 0.0;
};

using Theorem1Result = std::variant<Theorem1Certificate, NotCertified>;

struct Theorem1Options {
  lmi::SolveOptions solve;
  int max_fixed_point_rounds = 10;
};

Theorem1Result check_passivity(const model::NonlinearSystemSpec& sys,
                               const model::PolyhedralPartition& partition,
                               const approx::PwaApproximation& pwa,
                               const Theorem1Options& opts = {});

}  // namespace pwapass::passivity
