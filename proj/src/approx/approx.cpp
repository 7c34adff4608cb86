#include "pwapass/approx.hpp"

#include <cmath>
#include <stdexcept>

namespace pwapass::approx {

Mat PwaCellApproximation::a_hat() const {
  const std::size_t n = A.rows();
  Mat m(n + 1, n + 1);
  m.set_block(0, 0, A);
  for (std::size_t i = 0; i < n; ++i) m(i, n) = a[i];
  m(n, n) = 1.0;
  return m;
}

Mat PwaCellApproximation::a_bar() const {
  const std::size_t n = A.rows();
  Mat m(n, n + 1);
  m.set_block(0, 0, A);
  for (std::size_t i = 0; i < n; ++i) m(i, n) = a[i];
  return m;
}

Mat PwaCellApproximation::c_bar() const {
  const std::size_t s = C.rows(), n = C.cols();
  Mat m(s, n + 1);
  m.set_block(0, 0, C);
  for (std::size_t i = 0; i < s; ++i) m(i, n) = c[i];
  return m;
}

Mat PwaApproximation::b1_hat(const model::NonlinearSystemSpec& sys) const {
  Mat m(sys.n() + 1, sys.m());
  m.set_block(0, 0, sys.B1());
  return m;
}

Mat PwaApproximation::d1_hat(const model::NonlinearSystemSpec& sys) const {
  Mat m(sys.n() + 1, sys.s());
  m.set_block(0, 0, sys.D1());
  return m;
}

namespace {

// Approximate Chebyshev center for manually supplied cells: best of a sample
// batch by minimum normalized slack. Grid slabs use the axis midpoint.
Vec expansion_point_for(const model::PolyhedralPartition& p, const model::Cell& cell) {
  const std::size_t n = p.box().rows();
  if (cell.contains_origin) return Vec(n, 0.0);
  if (cell.axis >= 0) {
    Vec x(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      x[j] = 0.5 * (p.box()(j, 0) + p.box()(j, 1));
    x[static_cast<std::size_t>(cell.axis)] = 0.5 * (cell.lo + cell.hi);
    return x;
  }
  Rng rng(0x5eedu ^ static_cast<std::uint64_t>(cell.index));
  Vec best;
  double best_slack = -1.0;
  for (int tries = 0; tries < 20000; ++tries) {
    Vec x(n);
    for (std::size_t j = 0; j < n; ++j)
      x[j] = rng.uniform(p.box()(j, 0), p.box()(j, 1));
    if (!cell.contains(x)) continue;
    double slack = 1e300;
    for (std::size_t r = 0; r < cell.E_mem.rows(); ++r) {
      double v = cell.e_mem[r];
      double rn = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        v += cell.E_mem(r, j) * x[j];
        rn += cell.E_mem(r, j) * cell.E_mem(r, j);
      }
      slack = std::min(slack, v / std::max(std::sqrt(rn), 1e-300));
    }
    if (slack > best_slack) {
      best_slack = slack;
      best = x;
    }
  }
  if (best.empty())
    throw std::runtime_error("expansion point: cell appears empty within the box");
  return best;
}

}  // namespace

Vec sample_point(const model::PolyhedralPartition& p, const model::Cell& cell,
                 Rng& rng) {
  const std::size_t n = p.box().rows();
  for (int tries = 0; tries < 10000; ++tries) {
    Vec x(n);
    for (std::size_t j = 0; j < n; ++j) {
      double lo = p.box()(j, 0), hi = p.box()(j, 1);
      if (cell.axis >= 0 && j == static_cast<std::size_t>(cell.axis)) {
        x[j] = rng.uniform(cell.lo, cell.hi);
        continue;
      }
      double v = rng.uniform(lo, hi);
      // Half of the draws shrink toward zero (log-uniform scale) when the box
      // brackets zero; the residual ratio peaks in that regime.
      if (lo < 0.0 && hi > 0.0 && rng.bernoulli(0.5)) {
        v *= std::pow(10.0, -12.0 * rng.uniform01());
      }
      x[j] = v;
    }
    if (cell.axis >= 0 || cell.contains(x)) return x;
  }
  throw std::runtime_error("sample_point: cell appears empty (degenerate cell)");
}

PwaCellApproximation linearize_cell(const model::NonlinearSystemSpec& sys,
                                    const model::PolyhedralPartition& p,
                                    const model::Cell& cell) {
  PwaCellApproximation out;
  out.cell_index = cell.index;
  const Vec xc = expansion_point_for(p, cell);
  out.expansion_point = xc;
  out.A = sys.jacobian_f(xc);
  out.C = sys.jacobian_h(xc);
  if (cell.contains_origin) {
    out.a = Vec(sys.n(), 0.0);
    out.c = Vec(sys.s(), 0.0);
  } else {
    const Vec fx = sys.eval_f(xc);
    const Vec Ax = out.A * xc;
    out.a.resize(sys.n());
    for (std::size_t i = 0; i < sys.n(); ++i) out.a[i] = fx[i] - Ax[i];
    const Vec hx = sys.eval_h(xc);
    const Vec Cx = out.C * xc;
    out.c.resize(sys.s());
    for (std::size_t i = 0; i < sys.s(); ++i) out.c[i] = hx[i] - Cx[i];
  }
  return out;
}

std::pair<Vec, Vec> residual(const model::NonlinearSystemSpec& sys,
                             const PwaCellApproximation& cell, const Vec& x) {
  Vec m = sys.eval_f(x);
  const Vec Ax = cell.A * x;
  for (std::size_t i = 0; i < m.size(); ++i) m[i] -= Ax[i] + cell.a[i];
  Vec nres = sys.eval_h(x);
  const Vec Cx = cell.C * x;
  for (std::size_t i = 0; i < nres.size(); ++i) nres[i] -= Cx[i] + cell.c[i];
  return {m, nres};
}

void bound_residuals(const model::NonlinearSystemSpec& sys,
                     const model::PolyhedralPartition& p, const model::Cell& cell,
                     PwaCellApproximation& approx, const SamplingOptions& opts) {
  if (opts.samples < 1000)
    throw std::invalid_argument("bound_residuals: need at least 1e3 samples");
  Rng rng(opts.seed ^ (0x9e1ull * static_cast<std::uint64_t>(cell.index + 1)));
  double worst_f = 0.0, worst_h = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < opts.samples; ++k) {
    const Vec x = sample_point(p, cell, rng);
    const double nx = norm2(x);
    if (nx == 0.0) continue;  // ratio extends continuously; skip the origin
    ++used;
    auto [mres, nres] = residual(sys, approx, x);
    worst_f = std::max(worst_f, norm2(mres) / nx);
    worst_h = std::max(worst_h, norm2(nres) / nx);
  }
  if (used == 0) throw std::runtime_error("bound_residuals: empty sample set");
  approx.eps = opts.safety_factor * worst_f;
  approx.delta = opts.safety_factor * worst_h;
}

PwaApproximation build_approximation(const model::NonlinearSystemSpec& sys,
                                     const model::PolyhedralPartition& p,
                                     const SamplingOptions& opts) {
  PwaApproximation out;
  out.cells.reserve(p.size());
  for (const auto& cell : p.cells()) {
    PwaCellApproximation ca = linearize_cell(sys, p, cell);
    bound_residuals(sys, p, cell, ca, opts);
    out.cells.push_back(std::move(ca));
  }
  return out;
}

}  // namespace pwapass::approx
