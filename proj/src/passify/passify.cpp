#include "pwapass/passify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pwapass/linalg.hpp"
#include "pwapass/lmi_assembly.hpp"

namespace pwapass::passify {

ClosedLoop closed_loop_matrices(const approx::PwaCellApproximation& cell, const Mat& b1,
                                const Mat& b2, const Mat& k) {
  if (k.rows() != b1.cols() || k.cols() != cell.A.cols())
    throw std::invalid_argument("closed_loop_matrices: gain shape mismatch");
  ClosedLoop cl;
  cl.a_k = cell.A + b1 * k;
  cl.c_k = cell.C + b2 * k;
  const std::size_t n = cell.A.rows(), s = cell.C.rows();
  cl.a_bar_k = Mat(n, n + 1);
  cl.a_bar_k.set_block(0, 0, cl.a_k);
  for (std::size_t i = 0; i < n; ++i) cl.a_bar_k(i, n) = cell.a[i];
  cl.a_hat_k = Mat(n + 1, n + 1);
  cl.a_hat_k.set_block(0, 0, cl.a_bar_k);
  cl.a_hat_k(n, n) = 1.0;
  cl.c_bar_k = Mat(s, n + 1);
  cl.c_bar_k.set_block(0, 0, cl.c_k);
  for (std::size_t i = 0; i < s; ++i) cl.c_bar_k(i, n) = cell.c[i];
  return cl;
}

Mat thm2_block_value(const model::NonlinearSystemSpec& sys,
                     const approx::PwaCellApproximation& ci, const Mat& t_i,
                     const Mat& t_j, const Mat& u, const Mat& w, const Mat& r_i,
                     const Mat& g, double q, double r, double h) {
  const std::size_t n = sys.n(), s = sys.s();
  const std::size_t dim = 2 * n + s + 2;
  Mat m(dim, dim);
  const std::size_t o1 = 0, o2 = n, o3 = n + 1, o4 = n + 1 + s, o5 = 2 * n + s + 1;

  Mat o11 = u + u.transposed() - t_i - r_i;
  m.set_block(o1, o1, o11);
  Mat ut = u.transposed();
  Mat o13v = ut * ci.C.transposed() + w.transposed() * sys.B2().transposed();
  m.set_block(o1, o3, o13v);
  m.set_block(o3, o1, o13v.transposed());
  Mat o14 = ut * ci.A.transposed() + w.transposed() * sys.B1().transposed();
  m.set_block(o1, o4, o14);
  m.set_block(o4, o1, o14.transposed());
  m(o2, o2) = 2.0 * q - (h + r);
  for (std::size_t k = 0; k < s; ++k) {
    m(o2, o3 + k) = q * ci.c[k];
    m(o3 + k, o2) = q * ci.c[k];
  }
  for (std::size_t k = 0; k < n; ++k) {
    m(o2, o4 + k) = q * ci.a[k];
    m(o4 + k, o2) = q * ci.a[k];
  }
  m(o2, o5) = q;
  m(o5, o2) = q;
  Mat o33 = sys.D2().transposed() + sys.D2() - g;
  m.set_block(o3, o3, o33);
  Mat d1t = sys.D1().transposed();
  m.set_block(o3, o4, d1t);
  m.set_block(o4, o3, sys.D1());
  m.set_block(o4, o4, t_j);
  m(o5, o5) = h;
  m.symmetrize();
  return m;
}

namespace {

// Variable handles for one synthesis solve.
struct Vars {
  int t_common = -1;
  std::vector<int> t;  // per cell (all aliases of t_common under common storage)
  int q = -1, h = -1;
  std::vector<int> u, w, r, g;
};

struct Steering {
  std::vector<double> gamma_r;  // per cell, target for R >= gamma U^T U
  std::vector<double> gamma_g;  // per cell, floor for G
  double q_cap = 1e3;
};

void assemble_thm2_symbolic(lmi::LmiProblem& prob, const model::NonlinearSystemSpec& sys,
                            const approx::PwaCellApproximation& ci, int vt_i, int vt_j,
                            int vu, int vw, int vr, int vg, int vq, int vh,
                            double r_fixed, const std::string& label) {
  const std::size_t n = sys.n(), s = sys.s();
  const std::size_t dim = 2 * n + s + 2;
  const std::size_t o1 = 0, o2 = n, o3 = n + 1, o4 = n + 1 + s, o5 = 2 * n + s + 1;
  auto& blk = prob.add_block(dim, lmi::Sense::kPsd, label);

  // O11 = U + U^T - T(i) - R(i)
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      blk.add_term(o1 + i, o1 + j, prob.entry(vu, i, j), 1.0);
      blk.add_term(o1 + i, o1 + j, prob.entry(vu, j, i), 1.0);
    }
  lmi::put_var_sym(prob, blk, o1, vt_i, n, -1.0);
  lmi::put_var_sym(prob, blk, o1, vr, n, -1.0);
  // O13 = U^T C^T + W^T B2^T
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < s; ++k) {
      for (std::size_t a = 0; a < n; ++a)
        blk.add_term(o1 + i, o3 + k, prob.entry(vu, a, i), ci.C(k, a));
      for (std::size_t a = 0; a < sys.m(); ++a)
        blk.add_term(o1 + i, o3 + k, prob.entry(vw, a, i), sys.B2()(k, a));
    }
  // O14 = U^T A^T + W^T B1^T
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t a = 0; a < n; ++a)
        blk.add_term(o1 + i, o4 + j, prob.entry(vu, a, i), ci.A(j, a));
      for (std::size_t a = 0; a < sys.m(); ++a)
        blk.add_term(o1 + i, o4 + j, prob.entry(vw, a, i), sys.B1()(j, a));
    }
  // O22 = 2q - (h + r)
  blk.add_term(o2, o2, prob.entry(vq, 0, 0), 2.0);
  blk.add_term(o2, o2, prob.entry(vh, 0, 0), -1.0);
  blk.add_const(o2, o2, -r_fixed);
  // row 2: q c^T, q a^T, q
  for (std::size_t k = 0; k < s; ++k)
    blk.add_term(o2, o3 + k, prob.entry(vq, 0, 0), ci.c[k]);
  for (std::size_t k = 0; k < n; ++k)
    blk.add_term(o2, o4 + k, prob.entry(vq, 0, 0), ci.a[k]);
  blk.add_term(o2, o5, prob.entry(vq, 0, 0), 1.0);
  // O33 = D2^T + D2 - G
  lmi::put_const_sym(blk, o3, sys.D2().transposed() + sys.D2());
  lmi::put_var_sym(prob, blk, o3, vg, s, -1.0);
  // O34 = D1^T
  lmi::put_const_offdiag(blk, o3, o4, sys.D1().transposed());
  // (4,4) = T(j), (5,5) = h
  lmi::put_var_sym(prob, blk, o4, vt_j, n);
  blk.add_term(o5, o5, prob.entry(vh, 0, 0), 1.0);
}

struct IterateResult {
  lmi::LmiSolution sol;
  lmi::LmiProblem prob;
  Vars vars;
};

IterateResult solve_iterate(const model::NonlinearSystemSpec& sys,
                            const approx::PwaApproximation& pwa,
                            const SynthesisOptions& opts, const Steering& steer,
                            std::uint64_t jitter) {
  const std::size_t N = pwa.cells.size();
  const std::size_t n = sys.n(), m = sys.m(), s = sys.s();
  IterateResult out;
  lmi::LmiProblem& prob = out.prob;
  Vars& vars = out.vars;

  vars.t_common = prob.add_symmetric("T", n);
  vars.q = prob.add_scalar("q");
  vars.h = prob.add_scalar("h");
  vars.t.assign(N, vars.t_common);
  for (std::size_t i = 0; i < N; ++i) {
    vars.u.push_back(prob.add_rectangular("U" + std::to_string(i), n, n));
    vars.w.push_back(prob.add_rectangular("W" + std::to_string(i), m, n));
    vars.r.push_back(prob.add_symmetric("R" + std::to_string(i), n));
    vars.g.push_back(prob.add_symmetric("G" + std::to_string(i), s));
  }

  // (9a): That = diag(T, h) > 0
  {
    auto& blk = prob.add_block(n + 1, lmi::Sense::kPsdStrict, "That");
    lmi::put_var_sym(prob, blk, 0, vars.t_common, n);
    blk.add_term(n, n, prob.entry(vars.h, 0, 0), 1.0);
  }
  // scalar floors / cap
  {
    auto& b1 = prob.add_block(1, lmi::Sense::kPsd, "q_floor");
    b1.add_term(0, 0, prob.entry(vars.q, 0, 0), 1.0);
    b1.add_const(0, 0, -opts.scalar_floor);
    auto& b2 = prob.add_block(1, lmi::Sense::kPsd, "h_floor");
    b2.add_term(0, 0, prob.entry(vars.h, 0, 0), 1.0);
    b2.add_const(0, 0, -opts.scalar_floor);
    auto& b3 = prob.add_block(1, lmi::Sense::kPsd, "q_cap");
    b3.add_term(0, 0, prob.entry(vars.q, 0, 0), -1.0);
    b3.add_const(0, 0, steer.q_cap);
  }
  for (std::size_t i = 0; i < N; ++i) {
    // mild floors keep R, G strictly inside the cone
    auto& br = prob.add_block(n, lmi::Sense::kPsdStrict, "R_floor" + std::to_string(i));
    lmi::put_var_sym(prob, br, 0, vars.r[i], n);
    auto& bg = prob.add_block(s, lmi::Sense::kPsdStrict, "G_floor" + std::to_string(i));
    lmi::put_var_sym(prob, bg, 0, vars.g[i], s);
    if (steer.gamma_g[i] > 0.0) {
      auto& bgf = prob.add_block(s, lmi::Sense::kPsd, "G_steer" + std::to_string(i));
      lmi::put_var_sym(prob, bgf, 0, vars.g[i], s);
      for (std::size_t k = 0; k < s; ++k) bgf.add_const(k, k, -steer.gamma_g[i]);
    }
    if (steer.gamma_r[i] > 0.0) {
      // [[R, g U^T],[g U, I]] >= 0  <=>  R >= g^2 U^T U with g = sqrt(target)
      const double gs = std::sqrt(steer.gamma_r[i]);
      auto& bs = prob.add_block(2 * n, lmi::Sense::kPsd, "R_steer" + std::to_string(i));
      lmi::put_var_sym(prob, bs, 0, vars.r[i], n);
      lmi::put_var_offdiag(prob, bs, 0, n, vars.u[i], n, n, gs, /*transpose=*/true);
      for (std::size_t k = 0; k < n; ++k) bs.add_const(n + k, n + k, 1.0);
    }
  }
  // (9b) per (i, j); the common storage collapses j
  for (std::size_t i = 0; i < N; ++i) {
    assemble_thm2_symbolic(prob, sys, pwa.cells[i], vars.t[i], vars.t[i], vars.u[i],
                           vars.w[i], vars.r[i], vars.g[i], vars.q, vars.h,
                           opts.r_fixed, "thm2[" + std::to_string(i) + "]");
  }

  lmi::SolveOptions sopts = opts.solve;
  sopts.jitter_seed = jitter;
  out.sol = lmi::solve_feasibility(prob, sopts);
  return out;
}

Theorem2Synthesis extract(const model::NonlinearSystemSpec& sys,
                          const approx::PwaApproximation& pwa, const IterateResult& it,
                          double r_fixed) {
  Theorem2Synthesis syn;
  const std::size_t N = pwa.cells.size();
  syn.q = it.prob.value(it.vars.q, it.sol.assignment)(0, 0);
  syn.h = it.prob.value(it.vars.h, it.sol.assignment)(0, 0);
  syn.r = r_fixed;
  for (std::size_t i = 0; i < N; ++i) {
    CellSynthesis cs;
    cs.T = it.prob.value(it.vars.t[i], it.sol.assignment);
    cs.U = it.prob.value(it.vars.u[i], it.sol.assignment);
    cs.W = it.prob.value(it.vars.w[i], it.sol.assignment);
    cs.R = it.prob.value(it.vars.r[i], it.sol.assignment);
    cs.G = it.prob.value(it.vars.g[i], it.sol.assignment);
    auto uinv = linalg::inverse(cs.U);
    if (!uinv) throw std::runtime_error("extract: singular U(i)");
    cs.K = cs.W * (*uinv);
    syn.cells.push_back(std::move(cs));
  }
  (void)sys;
  return syn;
}

}  // namespace

std::vector<SideAudit> side_conditions(const model::NonlinearSystemSpec& sys,
                                       const approx::PwaApproximation& pwa,
                                       const Theorem2Synthesis& syn) {
  const std::size_t N = pwa.cells.size();
  // ||T^-1(j)|| maximized over successor cells
  double tinv_norm = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    auto tinv = linalg::inverse(syn.cells[j].T);
    if (!tinv) throw std::runtime_error("side_conditions: singular T(j)");
    tinv_norm = std::max(tinv_norm, lmi::spectral_norm(*tinv));
  }
  const double nd1 = lmi::spectral_norm(sys.D1());

  std::vector<SideAudit> out;
  for (std::size_t i = 0; i < N; ++i) {
    const auto& cs = syn.cells[i];
    const auto& ci = pwa.cells[i];
    SideAudit a;
    const ClosedLoop cl = closed_loop_matrices(ci, sys.B1(), sys.B2(), cs.K);
    a.gamma1 = 2.0 * ci.eps * lmi::spectral_norm(cl.a_bar_k) * tinv_norm;
    a.gamma2 = ci.eps * tinv_norm * nd1;
    a.gamma3 = ci.eps * ci.eps * tinv_norm;
    a.gamma4 = ci.delta;
    a.gamma_sum = a.gamma1 + a.gamma2 + a.gamma3 + a.gamma4;
    auto uinv = linalg::inverse(cs.U);
    if (!uinv) throw std::runtime_error("side_conditions: singular U(i)");
    Mat l = uinv->transposed() * cs.R * (*uinv);
    l.symmetrize();
    a.lam_l = std::min(linalg::min_eig(l), syn.r / (syn.q * syn.q));
    a.lam_g = linalg::min_eig(cs.G);
    a.pass_c = a.gamma_sum <= a.lam_l;
    a.pass_d = (a.gamma2 + a.gamma4) <= a.lam_g;
    out.push_back(a);
  }
  return out;
}

model::PolyhedralPartition bisect_cells(const model::PolyhedralPartition& p,
                                        const std::vector<std::size_t>& which) {
  std::vector<double> bps;
  int axis = -1;
  for (const auto& c : p.cells()) {
    if (c.axis < 0)
      throw std::invalid_argument("bisect_cells: only slab partitions can be refined");
    axis = c.axis;
    bps.push_back(c.lo);
    bps.push_back(c.hi);
  }
  for (std::size_t idx : which) {
    const auto& c = p.cell(idx);
    bps.push_back(0.5 * (c.lo + c.hi));
  }
  std::sort(bps.begin(), bps.end());
  bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
  return model::grid_partition(axis, bps, p.box());
}

SynthesisOutcome synthesize(const model::NonlinearSystemSpec& sys,
                            const model::PolyhedralPartition& partition,
                            const SynthesisOptions& opts) {
  model::PolyhedralPartition current = partition;
  std::vector<int> depth(partition.size(), 0);

  SynthesisOutcome out{SynthesisOutcome::Status::kFailed, current,
                       approx::PwaApproximation{}, std::nullopt, "", -1, 0};

  for (int refine_round = 0;; ++refine_round) {
    approx::PwaApproximation pwa = approx::build_approximation(sys, current, opts.sampling);
    const std::size_t N = current.size();

    Steering steer;
    steer.gamma_r.assign(N, 0.0);
    steer.gamma_g.assign(N, 0.0);
    steer.q_cap = 1e3;

    double feasible_scale = -1.0;  // largest steering scale that stayed feasible
    std::vector<double> need_r(N, 0.0), need_g(N, 0.0);
    double need_lift = 0.0;
    std::optional<IterateResult> best;
    int round = 0;
    for (; round < opts.max_steering_rounds; ++round) {
      IterateResult it = solve_iterate(sys, pwa, opts, steer, 0);
      for (int retry = 0; !it.sol.feasible() && retry < opts.max_jitter_retries &&
                          round == 0 && steer.gamma_r[0] == 0.0;
           ++retry) {
        it = solve_iterate(sys, pwa, opts, steer, 0x1234u + retry);
      }
      if (!it.sol.feasible()) {
        if (round == 0) {
          out.partition = current;
          out.pwa = std::move(pwa);
          out.failure_reason =
              "theorem-2 LMIs (9a)/(9b) not feasible: " + it.sol.detail;
          out.status = SynthesisOutcome::Status::kFailed;
          return out;
        }
        // steering overshot; back off halfway toward the last feasible level
        for (std::size_t i = 0; i < N; ++i)
          steer.gamma_r[i] = 0.5 * (steer.gamma_r[i] + feasible_scale * need_r[i]);
        continue;
      }

      Theorem2Synthesis syn = extract(sys, pwa, it, opts.r_fixed);
      std::vector<SideAudit> audit = side_conditions(sys, pwa, syn);
      syn.audit = audit;
      syn.steering_rounds = round + 1;
      best = std::move(it);

      bool all_pass = true;
      for (const auto& a : audit)
        if (!a.pass()) all_pass = false;

      if (all_pass || !opts.enforce_side_conditions) {
        // conditioning check on U(i)
        bool retried = false;
        for (std::size_t i = 0; i < N; ++i) {
          if (linalg::cond1(syn.cells[i].U) > opts.kappa_max) {
            retried = true;
            break;
          }
        }
        if (retried) {
          IterateResult it2 = solve_iterate(sys, pwa, opts, steer, 0xbeef);
          if (it2.sol.feasible()) {
            syn = extract(sys, pwa, it2, opts.r_fixed);
            syn.audit = side_conditions(sys, pwa, syn);
            syn.steering_rounds = round + 1;
          }
        }
        // replay (9a)/(9b) over every pair from the returned matrices
        double worst = 1e300;
        for (std::size_t i = 0; i < N; ++i)
          for (std::size_t j = 0; j < N; ++j) {
            const Mat blkv = thm2_block_value(
                sys, pwa.cells[i], syn.cells[i].T, syn.cells[j].T, syn.cells[i].U,
                syn.cells[i].W, syn.cells[i].R, syn.cells[i].G, syn.q, syn.r, syn.h);
            worst = std::min(worst, linalg::min_eig(blkv));
          }
        syn.worst_block_margin = worst;
        double worst_that = 1e300;
        for (std::size_t j = 0; j < N; ++j) {
          Mat that(sys.n() + 1, sys.n() + 1);
          that.set_block(0, 0, syn.cells[j].T);
          that(sys.n(), sys.n()) = syn.h;
          worst_that = std::min(worst_that, linalg::min_eig(that));
        }
        syn.worst_that_margin = worst_that;
        if (worst < -opts.solve.tolerance ||
            worst_that < opts.solve.tau - opts.solve.tolerance) {
          out.failure_reason = "replay of (9a)/(9b) failed";
          out.partition = current;
          out.pwa = std::move(pwa);
          return out;
        }
        out.status = refine_round == 0 ? SynthesisOutcome::Status::kCertified
                                       : SynthesisOutcome::Status::kRefined;
        out.partition = current;
        out.pwa = std::move(pwa);
        out.synthesis = std::move(syn);
        out.refinement_rounds = refine_round;
        return out;
      }

      // escalate steering toward the observed needs
      feasible_scale = (feasible_scale < 0.0) ? 1.0 : feasible_scale;
      bool changed = false;
      need_lift = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        need_r[i] = opts.steering_margin * audit[i].gamma_sum;
        need_g[i] = opts.steering_margin * (audit[i].gamma2 + audit[i].gamma4);
        need_lift = std::max(need_lift, need_r[i]);
        if (need_r[i] > steer.gamma_r[i] * 1.0001) {
          steer.gamma_r[i] = need_r[i];
          changed = true;
        }
        if (need_g[i] > steer.gamma_g[i] * 1.0001) {
          steer.gamma_g[i] = need_g[i];
          changed = true;
        }
      }
      steer.q_cap = std::sqrt(opts.r_fixed / std::max(need_lift, 1e-12));
      if (!changed) break;  // audit failing but targets stable: give up steering
    }

    // side conditions unresolved: refine the failing cells
    if (!best) {
      out.failure_reason = "no feasible iterate";
      out.partition = current;
      return out;
    }
    Theorem2Synthesis syn = extract(sys, pwa, *best, opts.r_fixed);
    std::vector<SideAudit> audit = side_conditions(sys, pwa, syn);
    std::vector<std::size_t> failing;
    for (std::size_t i = 0; i < N; ++i)
      if (!audit[i].pass()) failing.push_back(i);
    if (failing.empty()) failing.push_back(0);  // defensive; should not happen

    for (std::size_t i : failing) {
      if (depth[i] >= opts.refine_limit) {
        out.failure_reason = "refinement limit reached on cell " +
                             current.cell(i).describe();
        out.failing_cell = static_cast<int>(i);
        out.partition = current;
        out.pwa = std::move(pwa);
        return out;
      }
    }
    model::PolyhedralPartition next = bisect_cells(current, failing);
    // track bisection depth through the new cell list
    std::vector<int> ndepth(next.size(), 0);
    for (std::size_t k = 0; k < next.size(); ++k) {
      const auto& nc = next.cell(k);
      for (std::size_t i = 0; i < current.size(); ++i) {
        const auto& oc = current.cell(i);
        if (nc.lo >= oc.lo - 1e-15 && nc.hi <= oc.hi + 1e-15) {
          const bool split = std::find(failing.begin(), failing.end(), i) != failing.end();
          ndepth[k] = depth[i] + (split ? 1 : 0);
          break;
        }
      }
    }
    current = std::move(next);
    depth = std::move(ndepth);
    out.refinement_rounds = refine_round + 1;
  }
}

}  // namespace pwapass::passify
