#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pwapass/netpassify.hpp"

namespace pwapass::sim {

// Disturbance source: zero, componentwise expressions in the step index k,
// or seeded uniform noise in [-amplitude, amplitude].
struct Disturbance {
  enum class Kind { kZero, kExpr, kNoise };
  Kind kind = Kind::kZero;
  std::vector<expr::Expression> exprs;  // one per component of w
  double amplitude = 0.0;
  std::uint64_t seed = 0;
};

// Storage function used for the per-step dissipation diagnostics.
struct Storage {
  enum class Kind { kNone, kPbar, kTinv };
  Kind kind = Kind::kNone;
  std::vector<Mat> per_cell;  // Pbar(i) ((n+1)x(n+1)) or T(i) (n x n)
};

struct SimulationConfig {
  Vec x0;
  std::size_t horizon = 100;
  Disturbance disturbance;
  std::vector<Mat> gains;  // per-cell K(i); empty -> u == 0
  std::optional<netpassify::GilbertElliottChannel> channel;
  std::uint64_t channel_seed = 1;
  Storage storage;
};

struct StepRecord {
  std::size_t k = 0;
  Vec x;
  std::size_t cell = 0;
  Vec u_prime;  // controller output
  int v = 1;    // applied arrival flag (1 when no channel)
  Vec u;        // v * u_prime, the zero-input scheme
  Vec w;
  Vec z;
  double storage_value = 0.0;
  double gap = 0.0;                        // V(x+, s+) - V(x, s) - z'w
  std::optional<double> conditional_gap;   // channel runs only
};

struct SimulationTrace {
  std::vector<StepRecord> steps;
  Vec final_state;
  bool truncated = false;
  std::size_t exit_step = 0;
  std::string exit_reason;
};

// Exact PWA dynamics (Corollary-1 validation path): the surrogate is the
// system, so the recurrence uses A(i)x + a(i) instead of f.
struct PwaDynamics {
  const approx::PwaApproximation* pwa = nullptr;
  Mat B1, D1, B2, D2;
};

using Dynamics = std::variant<const model::NonlinearSystemSpec*, PwaDynamics>;

SimulationTrace run(const Dynamics& dyn, const model::PolyhedralPartition& partition,
                    const SimulationConfig& config);

struct DissipationReport {
  double max_gap = 0.0;
  std::size_t argmax_step = 0;
  std::size_t violations = 0;  // gap > tolerance
  double max_conditional_gap = 0.0;
  std::size_t conditional_violations = 0;
  std::size_t conditional_evaluated = 0;
};

DissipationReport dissipation_report(const SimulationTrace& trace, double tolerance = 1e-9);

// CSV export: header k, x1..xn, cell, u_prime*, v, u*, w*, z*, V, gap,
// cond_gap; floats printed with 17 significant digits.
void write_csv(const SimulationTrace& trace, std::size_t n, std::size_t m,
               std::size_t s, const std::string& path);

}  // namespace pwapass::sim
