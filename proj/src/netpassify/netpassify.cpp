#include "pwapass/netpassify.hpp"

#include <algorithm>
#include <cmath>

#include "pwapass/linalg.hpp"
#include "pwapass/lmi_assembly.hpp"
#include "pwapass/rng.hpp"

namespace pwapass::netpassify {

std::vector<int> sample_channel(const GilbertElliottChannel& ch, std::size_t horizon,
                                std::uint64_t seed) {
  if (horizon < 1) throw std::invalid_argument("sample_channel: horizon must be >= 1");
  Rng rng(seed);
  std::vector<int> v(horizon);
  v[0] = rng.bernoulli(ch.stationary_arrival()) ? 1 : 0;
  for (std::size_t k = 1; k < horizon; ++k)
    v[k] = rng.bernoulli(ch.pbar_given(v[k - 1])) ? 1 : 0;
  return v;
}

Mat thm3_block_value(const Mat& b1, const Mat& d1, const Mat& b2, const Mat& d2,
                     const approx::PwaCellApproximation& ci, double pbar,
                     const Mat& t_i, const Mat& t_j, const Mat& t_l, const Mat& u,
                     const Mat& w, const Mat& r_i, const Mat& g, double q, double r,
                     double h, bool corollary) {
  const std::size_t n = ci.A.rows(), s = ci.C.rows();
  const std::size_t o1 = 0, o2 = n, o3 = n + 1, o4 = n + 1 + s, o5 = 2 * n + 1 + s,
                    o6 = 2 * n + 2 + s, o7 = 3 * n + 2 + s;
  const std::size_t dim = 3 * n + s + 3;
  Mat m(dim, dim);

  Mat ut = u.transposed();
  Mat o11 = u + ut - t_i;
  if (!corollary) o11 -= r_i;
  m.set_block(o1, o1, o11);
  Mat o13 = ut * ci.C.transposed() + (w.transposed() * b2.transposed()) * pbar;
  m.set_block(o1, o3, o13);
  m.set_block(o3, o1, o13.transposed());
  Mat o14 = ut * ci.A.transposed() + w.transposed() * b1.transposed();
  m.set_block(o1, o4, o14);
  m.set_block(o4, o1, o14.transposed());
  Mat o16 = ut * ci.A.transposed();
  m.set_block(o1, o6, o16);
  m.set_block(o6, o1, o16.transposed());
  m(o2, o2) = corollary ? (2.0 * q - h) : (2.0 * q - (h + r));
  for (std::size_t k = 0; k < s; ++k) {
    m(o2, o3 + k) = q * ci.c[k];
    m(o3 + k, o2) = q * ci.c[k];
  }
  for (std::size_t k = 0; k < n; ++k) {
    m(o2, o4 + k) = q * ci.a[k];
    m(o4 + k, o2) = q * ci.a[k];
    m(o2, o6 + k) = q * ci.a[k];
    m(o6 + k, o2) = q * ci.a[k];
  }
  m(o2, o5) = q;
  m(o5, o2) = q;
  m(o2, o7) = q;
  m(o7, o2) = q;
  Mat o33 = d2.transposed() + d2;
  if (!corollary) o33 -= g;
  m.set_block(o3, o3, o33);
  m.set_block(o3, o4, d1.transposed());
  m.set_block(o4, o3, d1);
  m.set_block(o3, o6, d1.transposed());
  m.set_block(o6, o3, d1);
  m.set_block(o4, o4, t_j * (1.0 / pbar));
  m(o5, o5) = h / pbar;
  m.set_block(o6, o6, t_l * (1.0 / (1.0 - pbar)));
  m(o7, o7) = h / (1.0 - pbar);
  m.symmetrize();
  return m;
}

namespace {

struct Vars {
  int t = -1, q = -1, h = -1;
  std::vector<int> u, w, r, g;
};

void assemble_thm3_symbolic(lmi::LmiProblem& prob, const Mat& b1, const Mat& d1,
                            const Mat& b2, const Mat& d2,
                            const approx::PwaCellApproximation& ci, double pbar,
                            int vt, int vu, int vw, int vr, int vg, int vq, int vh,
                            double r_fixed, bool corollary, const std::string& label) {
  const std::size_t n = ci.A.rows(), s = ci.C.rows();
  const std::size_t m_in = b1.cols();
  const std::size_t o1 = 0, o2 = n, o3 = n + 1, o4 = n + 1 + s, o5 = 2 * n + 1 + s,
                    o6 = 2 * n + 2 + s, o7 = 3 * n + 2 + s;
  const std::size_t dim = 3 * n + s + 3;
  auto& blk = prob.add_block(dim, lmi::Sense::kPsd, label);

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      blk.add_term(o1 + i, o1 + j, prob.entry(vu, i, j), 1.0);
      blk.add_term(o1 + i, o1 + j, prob.entry(vu, j, i), 1.0);
    }
  lmi::put_var_sym(prob, blk, o1, vt, n, -1.0);
  if (!corollary) lmi::put_var_sym(prob, blk, o1, vr, n, -1.0);

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < s; ++k) {
      for (std::size_t a = 0; a < n; ++a)
        blk.add_term(o1 + i, o3 + k, prob.entry(vu, a, i), ci.C(k, a));
      for (std::size_t a = 0; a < m_in; ++a)
        blk.add_term(o1 + i, o3 + k, prob.entry(vw, a, i), pbar * b2(k, a));
    }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t a = 0; a < n; ++a) {
        blk.add_term(o1 + i, o4 + j, prob.entry(vu, a, i), ci.A(j, a));
        blk.add_term(o1 + i, o6 + j, prob.entry(vu, a, i), ci.A(j, a));
      }
      for (std::size_t a = 0; a < m_in; ++a)
        blk.add_term(o1 + i, o4 + j, prob.entry(vw, a, i), b1(j, a));
    }
  blk.add_term(o2, o2, prob.entry(vq, 0, 0), 2.0);
  blk.add_term(o2, o2, prob.entry(vh, 0, 0), -1.0);
  if (!corollary) blk.add_const(o2, o2, -r_fixed);
  for (std::size_t k = 0; k < s; ++k)
    blk.add_term(o2, o3 + k, prob.entry(vq, 0, 0), ci.c[k]);
  for (std::size_t k = 0; k < n; ++k) {
    blk.add_term(o2, o4 + k, prob.entry(vq, 0, 0), ci.a[k]);
    blk.add_term(o2, o6 + k, prob.entry(vq, 0, 0), ci.a[k]);
  }
  blk.add_term(o2, o5, prob.entry(vq, 0, 0), 1.0);
  blk.add_term(o2, o7, prob.entry(vq, 0, 0), 1.0);
  lmi::put_const_sym(blk, o3, d2.transposed() + d2);
  if (!corollary) lmi::put_var_sym(prob, blk, o3, vg, s, -1.0);
  lmi::put_const_offdiag(blk, o3, o4, d1.transposed());
  lmi::put_const_offdiag(blk, o3, o6, d1.transposed());
  lmi::put_var_sym(prob, blk, o4, vt, n, 1.0 / pbar);
  blk.add_term(o5, o5, prob.entry(vh, 0, 0), 1.0 / pbar);
  lmi::put_var_sym(prob, blk, o6, vt, n, 1.0 / (1.0 - pbar));
  blk.add_term(o7, o7, prob.entry(vh, 0, 0), 1.0 / (1.0 - pbar));
}

struct IterateResult {
  lmi::LmiSolution sol;
  lmi::LmiProblem prob;
  Vars vars;
};

IterateResult solve_iterate(const model::NonlinearSystemSpec& sys,
                            const approx::PwaApproximation& pwa,
                            const GilbertElliottChannel& ch,
                            const passify::SynthesisOptions& opts,
                            const std::vector<double>& gamma_r,
                            const std::vector<double>& gamma_g, double q_cap,
                            std::uint64_t jitter) {
  const std::size_t N = pwa.cells.size();
  const std::size_t n = sys.n(), m = sys.m(), s = sys.s();
  IterateResult out;
  lmi::LmiProblem& prob = out.prob;
  Vars& vars = out.vars;

  vars.t = prob.add_symmetric("T", n);
  vars.q = prob.add_scalar("q");
  vars.h = prob.add_scalar("h");
  for (std::size_t i = 0; i < N; ++i) {
    vars.u.push_back(prob.add_rectangular("U" + std::to_string(i), n, n));
    vars.w.push_back(prob.add_rectangular("W" + std::to_string(i), m, n));
    vars.r.push_back(prob.add_symmetric("R" + std::to_string(i), n));
    vars.g.push_back(prob.add_symmetric("G" + std::to_string(i), s));
  }
  {
    auto& blk = prob.add_block(n + 1, lmi::Sense::kPsdStrict, "That");
    lmi::put_var_sym(prob, blk, 0, vars.t, n);
    blk.add_term(n, n, prob.entry(vars.h, 0, 0), 1.0);
  }
  {
    auto& b1 = prob.add_block(1, lmi::Sense::kPsd, "q_floor");
    b1.add_term(0, 0, prob.entry(vars.q, 0, 0), 1.0);
    b1.add_const(0, 0, -opts.scalar_floor);
    auto& b2 = prob.add_block(1, lmi::Sense::kPsd, "h_floor");
    b2.add_term(0, 0, prob.entry(vars.h, 0, 0), 1.0);
    b2.add_const(0, 0, -opts.scalar_floor);
    auto& b3 = prob.add_block(1, lmi::Sense::kPsd, "q_cap");
    b3.add_term(0, 0, prob.entry(vars.q, 0, 0), -1.0);
    b3.add_const(0, 0, q_cap);
  }
  for (std::size_t i = 0; i < N; ++i) {
    auto& br = prob.add_block(n, lmi::Sense::kPsdStrict, "R_floor" + std::to_string(i));
    lmi::put_var_sym(prob, br, 0, vars.r[i], n);
    auto& bg = prob.add_block(s, lmi::Sense::kPsdStrict, "G_floor" + std::to_string(i));
    lmi::put_var_sym(prob, bg, 0, vars.g[i], s);
    if (gamma_g[i] > 0.0) {
      auto& bgf = prob.add_block(s, lmi::Sense::kPsd, "G_steer" + std::to_string(i));
      lmi::put_var_sym(prob, bgf, 0, vars.g[i], s);
      for (std::size_t k = 0; k < s; ++k) bgf.add_const(k, k, -gamma_g[i]);
    }
    if (gamma_r[i] > 0.0) {
      const double gs = std::sqrt(gamma_r[i]);
      auto& bs = prob.add_block(2 * n, lmi::Sense::kPsd, "R_steer" + std::to_string(i));
      lmi::put_var_sym(prob, bs, 0, vars.r[i], n);
      lmi::put_var_offdiag(prob, bs, 0, n, vars.u[i], n, n, gs, /*transpose=*/true);
      for (std::size_t k = 0; k < n; ++k) bs.add_const(n + k, n + k, 1.0);
    }
  }
  for (std::size_t i = 0; i < N; ++i)
    for (double pbar : {ch.alpha, 1.0 - ch.beta})
      assemble_thm3_symbolic(prob, sys.B1(), sys.D1(), sys.B2(), sys.D2(), pwa.cells[i],
                             pbar, vars.t, vars.u[i], vars.w[i], vars.r[i], vars.g[i],
                             vars.q, vars.h, opts.r_fixed, false,
                             "thm3[" + std::to_string(i) + (pbar == ch.alpha ? ",a]" : ",b]"));

  lmi::SolveOptions sopts = opts.solve;
  sopts.jitter_seed = jitter;
  out.sol = lmi::solve_feasibility(prob, sopts);
  return out;
}

Theorem3Synthesis extract(const approx::PwaApproximation& pwa, const IterateResult& it,
                          double r_fixed) {
  Theorem3Synthesis syn;
  const std::size_t N = pwa.cells.size();
  syn.q = it.prob.value(it.vars.q, it.sol.assignment)(0, 0);
  syn.h = it.prob.value(it.vars.h, it.sol.assignment)(0, 0);
  syn.r = r_fixed;
  for (std::size_t i = 0; i < N; ++i) {
    passify::CellSynthesis cs;
    cs.T = it.prob.value(it.vars.t, it.sol.assignment);
    cs.U = it.prob.value(it.vars.u[i], it.sol.assignment);
    cs.W = it.prob.value(it.vars.w[i], it.sol.assignment);
    cs.R = it.prob.value(it.vars.r[i], it.sol.assignment);
    cs.G = it.prob.value(it.vars.g[i], it.sol.assignment);
    auto uinv = linalg::inverse(cs.U);
    if (!uinv) throw std::runtime_error("extract: singular U(i)");
    cs.K = cs.W * (*uinv);
    syn.cells.push_back(std::move(cs));
  }
  return syn;
}

}  // namespace

std::vector<RhoAudit> side_conditions(const model::NonlinearSystemSpec& sys,
                                      const approx::PwaApproximation& pwa,
                                      const GilbertElliottChannel& ch,
                                      const Theorem3Synthesis& syn) {
  const std::size_t N = pwa.cells.size();
  double tinv_norm = 0.0;  // max over successor cells (j and l)
  for (std::size_t j = 0; j < N; ++j) {
    auto tinv = linalg::inverse(syn.cells[j].T);
    if (!tinv) throw std::runtime_error("side_conditions: singular T");
    tinv_norm = std::max(tinv_norm, lmi::spectral_norm(*tinv));
  }
  const double nd1 = lmi::spectral_norm(sys.D1());

  std::vector<RhoAudit> out;
  for (std::size_t i = 0; i < N; ++i) {
    const auto& cs = syn.cells[i];
    const auto& ci = pwa.cells[i];
    const passify::ClosedLoop cl =
        passify::closed_loop_matrices(ci, sys.B1(), sys.B2(), cs.K);
    const double na_k = lmi::spectral_norm(cl.a_bar_k);
    const double na_o = lmi::spectral_norm(ci.a_bar());
    RhoAudit a;
    for (double pbar : {ch.alpha, 1.0 - ch.beta}) {
      RhoAudit t;
      t.rho1 = 2.0 * pbar * ci.eps * na_k * tinv_norm;
      t.rho2 = pbar * ci.eps * tinv_norm * nd1;
      t.rho3 = pbar * ci.eps * ci.eps * tinv_norm;
      t.rho4 = 2.0 * (1.0 - pbar) * ci.eps * na_o * tinv_norm;
      t.rho5 = (1.0 - pbar) * ci.eps * tinv_norm * nd1;
      t.rho6 = (1.0 - pbar) * ci.eps * ci.eps * tinv_norm;
      t.rho7 = ci.delta;
      t.rho_sum = t.rho1 + t.rho2 + t.rho3 + t.rho4 + t.rho5 + t.rho6 + t.rho7;
      t.rho_g = t.rho2 + t.rho5 + t.rho7;
      if (t.rho_sum > a.rho_sum) {
        const double keep_g = std::max(a.rho_g, t.rho_g);
        a = t;
        a.rho_g = keep_g;
      } else {
        a.rho_g = std::max(a.rho_g, t.rho_g);
      }
    }
    auto uinv = linalg::inverse(cs.U);
    if (!uinv) throw std::runtime_error("side_conditions: singular U(i)");
    Mat l = uinv->transposed() * cs.R * (*uinv);
    l.symmetrize();
    a.lam_l = std::min(linalg::min_eig(l), syn.r / (syn.q * syn.q));
    a.lam_g = linalg::min_eig(cs.G);
    a.pass_c = a.rho_sum <= a.lam_l;
    a.pass_d = a.rho_g <= a.lam_g;
    out.push_back(a);
  }
  return out;
}

NetworkedOutcome synthesize_networked(const model::NonlinearSystemSpec& sys,
                                      const model::PolyhedralPartition& partition,
                                      const GilbertElliottChannel& ch,
                                      const passify::SynthesisOptions& opts) {
  model::PolyhedralPartition current = partition;
  std::vector<int> depth(partition.size(), 0);
  NetworkedOutcome out;
  out.partition = current;

  for (int refine_round = 0;; ++refine_round) {
    approx::PwaApproximation pwa = approx::build_approximation(sys, current, opts.sampling);
    const std::size_t N = current.size();
    std::vector<double> gamma_r(N, 0.0), gamma_g(N, 0.0);
    double q_cap = 1e3;
    std::optional<IterateResult> best;

    bool done = false;
    for (int round = 0; round < opts.max_steering_rounds && !done; ++round) {
      IterateResult it =
          solve_iterate(sys, pwa, ch, opts, gamma_r, gamma_g, q_cap, 0);
      if (!it.sol.feasible()) {
        if (round == 0) {
          out.failure_reason =
              "theorem-3 LMIs (17a)/(17b) not feasible: " + it.sol.detail;
          out.partition = current;
          out.pwa = std::move(pwa);
          return out;
        }
        for (std::size_t i = 0; i < N; ++i) gamma_r[i] *= 0.5;
        continue;
      }
      Theorem3Synthesis syn = extract(pwa, it, opts.r_fixed);
      syn.audit = side_conditions(sys, pwa, ch, syn);
      syn.steering_rounds = round + 1;
      best = std::move(it);

      bool all_pass = true;
      for (const auto& a : syn.audit)
        if (!a.pass()) all_pass = false;

      if (all_pass || !opts.enforce_side_conditions) {
        // full replay over (i, j, l) x pbar
        double worst = 1e300;
        for (std::size_t i = 0; i < N; ++i)
          for (std::size_t j = 0; j < N; ++j)
            for (std::size_t l = 0; l < N; ++l)
              for (double pbar : {ch.alpha, 1.0 - ch.beta}) {
                const Mat blkv = thm3_block_value(
                    sys.B1(), sys.D1(), sys.B2(), sys.D2(), pwa.cells[i], pbar,
                    syn.cells[i].T, syn.cells[j].T, syn.cells[l].T, syn.cells[i].U,
                    syn.cells[i].W, syn.cells[i].R, syn.cells[i].G, syn.q, syn.r,
                    syn.h);
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
          out.failure_reason = "replay of (17a)/(17b) failed";
          out.partition = current;
          out.pwa = std::move(pwa);
          return out;
        }
        out.status = refine_round == 0 ? NetworkedOutcome::Status::kCertified
                                       : NetworkedOutcome::Status::kRefined;
        out.partition = current;
        out.pwa = std::move(pwa);
        out.synthesis = std::move(syn);
        out.refinement_rounds = refine_round;
        return out;
      }

      bool changed = false;
      double need_lift = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        const double nr = opts.steering_margin * syn.audit[i].rho_sum;
        const double ng = opts.steering_margin * syn.audit[i].rho_g;
        need_lift = std::max(need_lift, nr);
        if (nr > gamma_r[i] * 1.0001) {
          gamma_r[i] = nr;
          changed = true;
        }
        if (ng > gamma_g[i] * 1.0001) {
          gamma_g[i] = ng;
          changed = true;
        }
      }
      q_cap = std::sqrt(opts.r_fixed / std::max(need_lift, 1e-12));
      if (!changed) done = true;
    }

    if (!best) {
      out.failure_reason = "no feasible iterate";
      out.partition = current;
      return out;
    }
    Theorem3Synthesis syn = extract(pwa, *best, opts.r_fixed);
    std::vector<RhoAudit> audit = side_conditions(sys, pwa, ch, syn);
    std::vector<std::size_t> failing;
    for (std::size_t i = 0; i < N; ++i)
      if (!audit[i].pass()) failing.push_back(i);
    if (failing.empty()) failing.push_back(0);

    for (std::size_t i : failing) {
      if (depth[i] >= opts.refine_limit) {
        out.failure_reason =
            "refinement limit reached on cell " + current.cell(i).describe();
        out.failing_cell = static_cast<int>(i);
        out.partition = current;
        out.pwa = std::move(pwa);
        return out;
      }
    }
    model::PolyhedralPartition next = passify::bisect_cells(current, failing);
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

std::optional<CorollarySynthesis> synthesize_pwa_networked(
    const PwaSystem& sys, const GilbertElliottChannel& ch,
    const passify::SynthesisOptions& opts) {
  const std::size_t N = sys.pwa.cells.size();
  const std::size_t n = sys.B1.rows(), m = sys.B1.cols();
  lmi::LmiProblem prob;
  const int vt = prob.add_symmetric("T", n);
  const int vq = prob.add_scalar("q");
  const int vh = prob.add_scalar("h");
  std::vector<int> vu, vw;
  for (std::size_t i = 0; i < N; ++i) {
    vu.push_back(prob.add_rectangular("U" + std::to_string(i), n, n));
    vw.push_back(prob.add_rectangular("W" + std::to_string(i), m, n));
  }
  {
    auto& blk = prob.add_block(n + 1, lmi::Sense::kPsdStrict, "That");
    lmi::put_var_sym(prob, blk, 0, vt, n);
    blk.add_term(n, n, prob.entry(vh, 0, 0), 1.0);
  }
  {
    auto& b1 = prob.add_block(1, lmi::Sense::kPsd, "q_floor");
    b1.add_term(0, 0, prob.entry(vq, 0, 0), 1.0);
    b1.add_const(0, 0, -opts.scalar_floor);
    auto& b2 = prob.add_block(1, lmi::Sense::kPsd, "h_floor");
    b2.add_term(0, 0, prob.entry(vh, 0, 0), 1.0);
    b2.add_const(0, 0, -opts.scalar_floor);
  }
  for (std::size_t i = 0; i < N; ++i)
    for (double pbar : {ch.alpha, 1.0 - ch.beta})
      assemble_thm3_symbolic(prob, sys.B1, sys.D1, sys.B2, sys.D2, sys.pwa.cells[i],
                             pbar, vt, vu[i], vw[i], /*vr=*/-1, /*vg=*/-1, vq, vh, 0.0,
                             true, "cor1[" + std::to_string(i) + "]");

  lmi::LmiSolution sol = lmi::solve_feasibility(prob, opts.solve);
  if (!sol.feasible()) return std::nullopt;

  CorollarySynthesis out;
  out.q = prob.value(vq, sol.assignment)(0, 0);
  out.h = prob.value(vh, sol.assignment)(0, 0);
  Mat t = prob.value(vt, sol.assignment);
  double worst = 1e300;
  for (std::size_t i = 0; i < N; ++i) {
    out.T.push_back(t);
    out.U.push_back(prob.value(vu[i], sol.assignment));
    out.W.push_back(prob.value(vw[i], sol.assignment));
    auto uinv = linalg::inverse(out.U.back());
    if (!uinv) return std::nullopt;
    out.K.push_back(out.W.back() * (*uinv));
  }
  const Mat dummy(0, 0);
  for (std::size_t i = 0; i < N; ++i)
    for (double pbar : {ch.alpha, 1.0 - ch.beta}) {
      const Mat blkv =
          thm3_block_value(sys.B1, sys.D1, sys.B2, sys.D2, sys.pwa.cells[i], pbar, t,
                           t, t, out.U[i], out.W[i], Mat(n, n), Mat(sys.D2.rows(),
                           sys.D2.rows()), out.q, 0.0, out.h, true);
      worst = std::min(worst, linalg::min_eig(blkv));
    }
  out.worst_block_margin = worst;
  return out;
}

}  // namespace pwapass::netpassify
