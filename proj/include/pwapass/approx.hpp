#pragma once

#include <cstdint>

#include "pwapass/model.hpp"
#include "pwapass/rng.hpp"

namespace pwapass::approx {

// Per-cell affine surrogate f(x) ~ A x + a, h(x) ~ C x + c with certified
// residual growth bounds ||f(x)-Ax-a|| <= eps ||x||, ||h(x)-Cx-c|| <= delta ||x||
// over the cell (Euclidean norms), and the lifted forms used by the LMIs.
struct PwaCellApproximation {
  int cell_index = -1;
  Mat A;   // n x n
  Vec a;   // n (exactly zero for origin cells)
  Mat C;   // s x n
  Vec c;   // s (exactly zero for origin cells)
  double eps = 0.0;
  double delta = 0.0;
  Vec expansion_point;

  Mat a_hat() const;   // [[A, a], [0, 1]]
  Mat a_bar() const;   // [A a]
  Mat c_bar() const;   // [C c]
};

struct PwaApproximation {
  std::vector<PwaCellApproximation> cells;

  Mat b1_hat(const model::NonlinearSystemSpec& sys) const;  // [B1; 0]
  Mat d1_hat(const model::NonlinearSystemSpec& sys) const;  // [D1; 0]
};

struct SamplingOptions {
  std::size_t samples = 10000;
  double safety_factor = 1.2;
  std::uint64_t seed = 20240801;
};

// Taylor linearization about the cell's expansion point: the origin for
// origin cells (so a = c = 0 exactly), the slab midpoint otherwise.
PwaCellApproximation linearize_cell(const model::NonlinearSystemSpec& sys,
                                    const model::PolyhedralPartition& p,
                                    const model::Cell& cell);

// Residual-ratio bounds by sampling. Draws points in the cell's box section;
// coordinates the cell does not constrain are additionally drawn with shrunk
// magnitudes, because the ratio ||residual||/||x|| peaks where those
// coordinates vanish and plain uniform draws would miss that regime.
// eps = safety_factor * max ||f(x)-Ax-a||/||x|| over the draws (x = 0 skipped),
// delta likewise for h.
void bound_residuals(const model::NonlinearSystemSpec& sys,
                     const model::PolyhedralPartition& p, const model::Cell& cell,
                     PwaCellApproximation& approx, const SamplingOptions& opts);

// m(x,i), n(x,i) of the decomposition: f(x)-Ax-a and h(x)-Cx-c.
std::pair<Vec, Vec> residual(const model::NonlinearSystemSpec& sys,
                             const PwaCellApproximation& cell, const Vec& x);

// Sample one point in cell ∩ box (used by bound_residuals and the
// verification suite; deterministic given the rng state).
Vec sample_point(const model::PolyhedralPartition& p, const model::Cell& cell,
                 Rng& rng);

PwaApproximation build_approximation(const model::NonlinearSystemSpec& sys,
                                     const model::PolyhedralPartition& p,
                                     const SamplingOptions& opts = {});

}  // namespace pwapass::approx
