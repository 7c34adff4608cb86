#include <algorithm>
#include <cmath>
#include <sstream>

#include "pwapass/linalg.hpp"
#include "pwapass/lmi.hpp"
#include "pwapass/rng.hpp"

namespace pwapass::lmi {

namespace {

// Sense-normalized, tau-shifted, compressed copy of one block: the solver
// works exclusively with "G(x) >= 0" targets.
struct WorkBlock {
  std::size_t dim = 0;
  Mat constant;
  struct Run {
    int var;
    std::vector<Block::Term> terms;  // coordinates already compressed
  };
  std::vector<Run> runs;
};

Mat work_value(const WorkBlock& w, const Vec& x, double t) {
  Mat m = w.constant;
  for (const auto& run : w.runs) {
    const double xv = x[static_cast<std::size_t>(run.var)];
    for (const auto& tm : run.terms) {
      const double v = tm.coef * xv;
      m(tm.r, tm.c) += v;
      if (tm.r != tm.c) m(tm.c, tm.r) += v;
    }
  }
  for (std::size_t i = 0; i < w.dim; ++i) m(i, i) += t;
  return m;
}

bool is_pd(const WorkBlock& w, const Vec& x, double t) {
  Mat m = work_value(w, x, t);
  return linalg::cholesky(m);
}

std::vector<WorkBlock> normalize(const LmiProblem& p, const SolveOptions& opts) {
  std::vector<WorkBlock> out;
  // `shift` (the strictness margin) applies on the compressed support only:
  // rows of the affine block that are identically zero carry no strictness.
  auto push = [&](const Mat& constant, const std::vector<Block::Term>& terms,
                  std::size_t dim, double shift) {
    // drop rows that are identically zero (constant row and every term row)
    std::vector<char> live(dim, 0);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j)
        if (constant(i, j) != 0.0) live[i] = live[j] = 1;
    for (const auto& t : terms)
      if (t.coef != 0.0) live[t.r] = live[t.c] = 1;
    std::vector<int> map(dim, -1);
    std::size_t nd = 0;
    for (std::size_t i = 0; i < dim; ++i)
      if (live[i]) map[i] = static_cast<int>(nd++);
    if (nd == 0) return;  // identically zero block: trivially satisfied

    WorkBlock w;
    w.dim = nd;
    w.constant = Mat(nd, nd);
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j)
        if (live[i] && live[j])
          w.constant(static_cast<std::size_t>(map[i]), static_cast<std::size_t>(map[j])) =
              constant(i, j);
    for (std::size_t i = 0; i < nd; ++i) w.constant(i, i) -= shift;
    std::vector<Block::Term> remapped;
    remapped.reserve(terms.size());
    for (auto t : terms) {
      t.r = static_cast<std::uint16_t>(map[t.r]);
      t.c = static_cast<std::uint16_t>(map[t.c]);
      remapped.push_back(t);
    }
    std::sort(remapped.begin(), remapped.end(),
              [](const Block::Term& a, const Block::Term& b) { return a.var < b.var; });
    for (const auto& t : remapped) {
      if (w.runs.empty() || w.runs.back().var != t.var)
        w.runs.push_back({t.var, {}});
      w.runs.back().terms.push_back(t);
    }
    out.push_back(std::move(w));
  };

  for (const auto& b : p.blocks()) {
    Mat constant = b.constant;
    std::vector<Block::Term> terms = b.terms;
    if (b.sense == Sense::kNsd) {
      constant *= -1.0;
      for (auto& t : terms) t.coef = -t.coef;
    }
    push(constant, terms, b.dim, b.sense == Sense::kPsdStrict ? opts.tau : 0.0);
  }

  // elementwise-positivity floors as 1x1 blocks
  for (const auto& v : p.variables()) {
    if (!v.elementwise_positive) continue;
    for (std::size_t i = 0; i < v.rows; ++i)
      for (std::size_t j = (v.kind == VarKind::kSymmetric ? i : 0); j < v.cols; ++j) {
        const int id = p.entry(static_cast<int>(&v - p.variables().data()), i, j);
        if (id < 0) continue;
        WorkBlock w;
        w.dim = 1;
        w.constant = Mat(1, 1);
        w.constant(0, 0) = -opts.eta_pos;
        w.runs.push_back({id, {Block::Term{0, 0, id, 1.0}}});
        out.push_back(std::move(w));
      }
  }
  return out;
}

}  // namespace

LmiSolution solve_feasibility(const LmiProblem& p, const SolveOptions& opts) {
  LmiSolution sol;
  const std::size_t nv = p.num_scalars();
  std::vector<WorkBlock> work = normalize(p, opts);

  Vec x(nv, 0.0);
  if (opts.jitter_seed) {
    Rng jig(opts.jitter_seed);
    for (auto& v : x) v = jig.uniform(-1e-3, 1e-3);
  }

  double t = 1.0;
  for (const auto& w : work) {
    Mat m = work_value(w, x, 0.0);
    t = std::max(t, -linalg::min_eig(m) + 1.0);
  }

  const double box = opts.box;
  int total_newton = 0;
  bool budget_exhausted = false;
  double prev_stage_t = t;
  bool stagnated = false;

  // scratch
  Vec grad(nv + 1);
  Mat hess(nv + 1, nv + 1);
  std::vector<Mat> abuf;

  double mu = opts.mu0;
  for (; mu <= opts.mu_max; mu *= opts.mu_growth) {
    for (int it = 0; it < opts.max_newton_per_stage; ++it) {
      if (total_newton >= opts.max_newton_total) {
        budget_exhausted = true;
        break;
      }
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t i = 0; i < nv + 1; ++i)
        for (std::size_t j = 0; j < nv + 1; ++j) hess(i, j) = 0.0;
      grad[nv] += mu;

      for (const auto& w : work) {
        const std::size_t m = w.dim;
        Mat S = work_value(w, x, t);
        Vec lam;
        Mat Q;
        linalg::eigh(S, lam, &Q);
        if (lam[0] <= 0.0) lam[0] = 1e-300;  // invariant guard
        Vec ilam(m), wgt(m);
        for (std::size_t i = 0; i < m; ++i) {
          ilam[i] = 1.0 / lam[i];
          wgt[i] = std::sqrt(ilam[i]);
        }
        const std::size_t nr = w.runs.size();
        if (abuf.size() < nr) abuf.resize(nr);
        for (std::size_t a = 0; a < nr; ++a) {
          if (abuf[a].rows() != m) abuf[a] = Mat(m, m);
          else
            for (std::size_t i = 0; i < m * m; ++i) abuf[a].data()[i] = 0.0;
          for (const auto& tm : w.runs[a].terms) {
            const double* ur = &Q(tm.r, 0);
            const double* uc = &Q(tm.c, 0);
            if (tm.r == tm.c) {
              kernels::rank1_update(abuf[a].data(), m, m, tm.coef, ur, ur);
            } else {
              kernels::rank1_update(abuf[a].data(), m, m, tm.coef, ur, uc);
              kernels::rank1_update(abuf[a].data(), m, m, tm.coef, uc, ur);
            }
          }
        }
        // gradient and cross terms with t, then scale buffers in place
        double trS = 0.0, trS2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          trS += ilam[i];
          trS2 += ilam[i] * ilam[i];
        }
        grad[nv] -= trS;
        hess(nv, nv) += trS2;
        for (std::size_t a = 0; a < nr; ++a) {
          const int pa = w.runs[a].var;
          double g = 0.0, ht = 0.0;
          for (std::size_t i = 0; i < m; ++i) {
            const double d = abuf[a](i, i);
            g += d * ilam[i];
            ht += d * ilam[i] * ilam[i];
          }
          grad[static_cast<std::size_t>(pa)] -= g;
          hess(static_cast<std::size_t>(pa), nv) += ht;
          hess(nv, static_cast<std::size_t>(pa)) += ht;
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) abuf[a](i, j) *= wgt[i] * wgt[j];
        }
        for (std::size_t a = 0; a < nr; ++a) {
          const std::size_t pa = static_cast<std::size_t>(w.runs[a].var);
          for (std::size_t b = a; b < nr; ++b) {
            const std::size_t pb = static_cast<std::size_t>(w.runs[b].var);
            const double h = kernels::dot(abuf[a].data(), abuf[b].data(), m * m);
            hess(pa, pb) += h;
            if (pa != pb) hess(pb, pa) += h;
          }
        }
      }
      // box barrier on the variables
      for (std::size_t i = 0; i < nv; ++i) {
        const double lo = box + x[i], hi = box - x[i];
        grad[i] += 1.0 / hi - 1.0 / lo;
        hess(i, i) += 1.0 / (hi * hi) + 1.0 / (lo * lo);
      }

      // Jacobi-preconditioned Newton solve with ridge escalation
      Vec dscale(nv + 1);
      for (std::size_t i = 0; i < nv + 1; ++i)
        dscale[i] = 1.0 / std::sqrt(std::max(hess(i, i), 1e-300));
      Mat hs(nv + 1, nv + 1);
      for (std::size_t i = 0; i < nv + 1; ++i)
        for (std::size_t j = 0; j < nv + 1; ++j)
          hs(i, j) = hess(i, j) * dscale[i] * dscale[j];
      Vec rhs(nv + 1);
      for (std::size_t i = 0; i < nv + 1; ++i) rhs[i] = -grad[i] * dscale[i];
      std::optional<Vec> y;
      for (double ridge = 1e-11; ridge <= 1e-1; ridge *= 100.0) {
        Mat hr = hs;
        for (std::size_t i = 0; i < nv + 1; ++i) hr(i, i) += ridge;
        y = linalg::cholesky_solve(std::move(hr), rhs);
        if (y) break;
      }
      if (!y) break;  // give up on this stage
      Vec d(nv + 1);
      for (std::size_t i = 0; i < nv + 1; ++i) d[i] = (*y)[i] * dscale[i];

      double decrement = 0.0;
      for (std::size_t i = 0; i < nv + 1; ++i) decrement -= grad[i] * d[i];

      double step = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        bool ok = true;
        for (std::size_t i = 0; i < nv && ok; ++i)
          if (std::abs(x[i] + step * d[i]) >= box) ok = false;
        if (ok) {
          Vec xn = x;
          kernels::axpy(step, d.data(), xn.data(), nv);
          const double tn = t + step * d[nv];
          for (const auto& w : work)
            if (!is_pd(w, xn, tn)) {
              ok = false;
              break;
            }
          if (ok) {
            x = std::move(xn);
            t = tn;
            moved = true;
            break;
          }
        }
        step *= 0.5;
      }
      ++total_newton;
      if (!moved || decrement < 1e-8 || step < 1e-10) break;
    }
    if (budget_exhausted) break;

    // candidate verification at stage end
    double worst = 1e300;
    for (const auto& w : work) {
      Mat m = work_value(w, x, 0.0);
      worst = std::min(worst, linalg::min_eig(m));
    }
    if (worst >= -0.5 * opts.tolerance) break;
    if (std::abs(t - prev_stage_t) < 1e-12 * std::max(1.0, std::abs(t)) && t > 0.0) {
      stagnated = true;
      break;
    }
    prev_stage_t = t;
  }

  sol.assignment = x;
  sol.t_final = t;
  sol.newton_iterations = total_newton;

  // Pass/fail is decided on the sense-normalized compressed blocks (strictness
  // counts on the structurally nonzero support only); the reported per-block
  // margins are raw eigenvalues of the original blocks.
  bool pass = true;
  double worst_violation = 0.0;
  for (const auto& w : work) {
    const double margin = linalg::min_eig(work_value(w, x, 0.0));
    if (margin < -opts.tolerance) pass = false;
    worst_violation = std::max(worst_violation, -margin);
  }
  sol.margins.reserve(p.blocks().size());
  for (const auto& b : p.blocks()) sol.margins.push_back(p.block_margin(b, x));
  sol.worst_violation = std::max(0.0, worst_violation);

  std::ostringstream detail;
  if (pass) {
    sol.status = SolveStatus::kFeasible;
    detail << "feasible after " << total_newton << " Newton steps, worst margin gap "
           << sol.worst_violation;
  } else if (budget_exhausted) {
    sol.status = SolveStatus::kInconclusive;
    detail << "iteration budget exhausted (t=" << t << ")";
  } else if (t > std::max(10.0 * opts.tolerance, 1e-9) &&
             (mu > opts.mu_max || stagnated)) {
    sol.status = SolveStatus::kInfeasibleCertified;
    detail << "phase-1 optimum t=" << t << " bounded away from zero";
  } else {
    sol.status = SolveStatus::kInconclusive;
    detail << "no verified candidate (t=" << t << ")";
  }
  sol.detail = detail.str();
  return sol;
}

}  // namespace pwapass::lmi
