#pragma once

#include <optional>
#include <vector>

#include "pwapass/passify.hpp"

namespace pwapass::netpassify {

// Two-state Markov packet-loss channel: arrival probability alpha after a
// loss, 1-beta after a delivery; initial law P(v0=1) = alpha/(alpha+beta).
struct GilbertElliottChannel {
  double alpha = 0.0;
  double beta = 0.0;

  GilbertElliottChannel(double a, double b) : alpha(a), beta(b) {
    if (!(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0))
      throw std::invalid_argument(
          "channel: alpha and beta must lie strictly inside (0,1); for a "
          "lossless link use the deterministic synthesis instead");
  }
  double stationary_arrival() const { return alpha / (alpha + beta); }
  // pbar_k given v_{k-1} (the TCP-like acknowledgment makes it known).
  double pbar_given(int v_prev) const { return v_prev == 0 ? alpha : 1.0 - beta; }
};

// Deterministic loss-sequence sampler: v0 ~ Bernoulli(alpha/(alpha+beta)),
// then the transition law.
std::vector<int> sample_channel(const GilbertElliottChannel& ch, std::size_t horizon,
                                std::uint64_t seed);

struct RhoAudit {
  double rho1 = 0, rho2 = 0, rho3 = 0, rho4 = 0, rho5 = 0, rho6 = 0, rho7 = 0;
  double rho_sum = 0;   // (17c) left side, maximized over j, l, pbar
  double rho_g = 0;     // (17d) left side
  double lam_l = 0, lam_g = 0;
  bool pass_c = false, pass_d = false;
  bool pass() const { return pass_c && pass_d; }
};

struct Theorem3Synthesis {
  std::vector<passify::CellSynthesis> cells;
  double q = 0, r = 0, h = 0;
  std::vector<RhoAudit> audit;
  double worst_block_margin = 0;  // replayed (17b) over all (i,j,l) x pbar
  double worst_that_margin = 0;
  int steering_rounds = 0;
};

struct NetworkedOutcome {
  enum class Status { kCertified, kRefined, kFailed };
  Status status = Status::kFailed;
  model::PolyhedralPartition partition;
  approx::PwaApproximation pwa;
  std::optional<Theorem3Synthesis> synthesis;
  std::string failure_reason;
  int failing_cell = -1;
  int refinement_rounds = 0;

  bool ok() const { return status != Status::kFailed; }
};

// Numeric (17b) block; corollary = true drops the R/G/r terms (Corollary 1's
// conditions (22)/(23) for exact PWA systems).
Mat thm3_block_value(const Mat& b1, const Mat& d1, const Mat& b2, const Mat& d2,
                     const approx::PwaCellApproximation& ci, double pbar,
                     const Mat& t_i, const Mat& t_j, const Mat& t_l, const Mat& u,
                     const Mat& w, const Mat& r_i, const Mat& g, double q, double r,
                     double h, bool corollary = false);

std::vector<RhoAudit> side_conditions(const model::NonlinearSystemSpec& sys,
                                      const approx::PwaApproximation& pwa,
                                      const GilbertElliottChannel& ch,
                                      const Theorem3Synthesis& syn);

NetworkedOutcome synthesize_networked(const model::NonlinearSystemSpec& sys,
                                      const model::PolyhedralPartition& partition,
                                      const GilbertElliottChannel& ch,
                                      const passify::SynthesisOptions& opts = {});

// Corollary 1: gains for a PWA system given directly (no residual terms).
// The PWA data lives in `pwa`; b1/d1/b2/d2 complete the system matrices.
struct PwaSystem {
  const model::PolyhedralPartition* partition = nullptr;
  approx::PwaApproximation pwa;
  Mat B1, D1, B2, D2;
};

struct CorollarySynthesis {
  std::vector<Mat> T, U, W, K;
  double q = 0, h = 0;
  double worst_block_margin = 0;
};

std::optional<CorollarySynthesis> synthesize_pwa_networked(
    const PwaSystem& sys, const GilbertElliottChannel& ch,
    const passify::SynthesisOptions& opts = {});

}  // namespace pwapass::netpassify
