#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pwapass/approx.hpp"
#include "pwapass/lmi.hpp"

namespace pwapass::passify {

// Theorem-2 style synthesis of piecewise linear gains K(i) = W(i) U(i)^-1
// with storage V(x) = 1/2 x^T T(i)^-1 x.

struct SynthesisOptions {
  lmi::SolveOptions solve;
  approx::SamplingOptions sampling;
  bool enforce_side_conditions = true;
  int refine_limit = 6;          // bisections per original cell
  int max_steering_rounds = 8;   // side-condition escalation re-solves
  double steering_margin = 1.2;  // target inflation on the gamma needs
  double scalar_floor = 1e-6;    // q, h
  double r_fixed = 1e-8;         // scalar r held constant (see notes in impl)
  double kappa_max = 1e8;        // condition bound on U(i)
  int max_jitter_retries = 3;
};

struct CellSynthesis {
  Mat T;  // n x n storage block (equal across cells under common storage)
  Mat U;
  Mat W;  // m x n
  Mat R;
  Mat G;  // s x s
  Mat K;  // m x n gain
};

struct SideAudit {
  double gamma1 = 0, gamma2 = 0, gamma3 = 0, gamma4 = 0;
  double gamma_sum = 0;
  double lam_l = 0;   // min(lambda_min(U^-T R U^-1), r/q^2)
  double lam_g = 0;   // lambda_min(G)
  bool pass_c = false, pass_d = false;
  bool pass() const { return pass_c && pass_d; }
};

struct Theorem2Synthesis {
  std::vector<CellSynthesis> cells;
  double q = 0, r = 0, h = 0;
  std::vector<SideAudit> audit;       // per cell, gammas maximized over j
  double worst_block_margin = 0;      // replayed (9b) min-eig over all pairs
  double worst_that_margin = 0;       // replayed (9a) margin
  int steering_rounds = 0;
};

struct SynthesisOutcome {
  enum class Status { kCertified, kRefined, kFailed };
  Status status = Status::kFailed;
  model::PolyhedralPartition partition;  // final (possibly refined) partition
  approx::PwaApproximation pwa;
  std::optional<Theorem2Synthesis> synthesis;
  std::string failure_reason;
  int failing_cell = -1;
  int refinement_rounds = 0;

  bool ok() const { return status != Status::kFailed; }
};

// Closed-loop matrices for gain K on one approximated cell.
struct ClosedLoop {
  Mat a_k;      // A + B1 K
  Mat a_bar_k;  // [A_K a]
  Mat a_hat_k;  // [[A_K a],[0 1]]
  Mat c_k;      // C + B2 K
  Mat c_bar_k;  // [C_K c]
};
ClosedLoop closed_loop_matrices(const approx::PwaCellApproximation& cell, const Mat& b1,
                                const Mat& b2, const Mat& k);

// Numeric (9b) block from concrete matrices; the replay route.
Mat thm2_block_value(const model::NonlinearSystemSpec& sys,
                     const approx::PwaCellApproximation& ci, const Mat& t_i,
                     const Mat& t_j, const Mat& u, const Mat& w, const Mat& r_i,
                     const Mat& g, double q, double r, double h);

// Side conditions (9c)/(9d) with the gammas maximized over successor cells.
std::vector<SideAudit> side_conditions(const model::NonlinearSystemSpec& sys,
                                       const approx::PwaApproximation& pwa,
                                       const Theorem2Synthesis& syn);

SynthesisOutcome synthesize(const model::NonlinearSystemSpec& sys,
                            const model::PolyhedralPartition& partition,
                            const SynthesisOptions& opts = {});

// Bisect the given cells of a slab partition (used by the refinement loops).
model::PolyhedralPartition bisect_cells(const model::PolyhedralPartition& p,
                                        const std::vector<std::size_t>& which);

}  // namespace pwapass::passify
