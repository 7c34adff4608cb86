#include "pwapass/sim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "pwapass/linalg.hpp"
#include "pwapass/rng.hpp"

namespace pwapass::sim {

namespace {

struct StorageEval {
  Storage::Kind kind;
  std::vector<Mat> tinv;         // for kTinv
  const std::vector<Mat>* pbar;  // for kPbar

  double value(const Vec& x, std::size_t cell) const {
    if (kind == Storage::Kind::kNone) return 0.0;
    if (kind == Storage::Kind::kTinv) {
      const Vec y = tinv[cell] * x;
      return 0.5 * dot(x, y);
    }
    const Vec xb = model::lift(x);
    const Vec y = (*pbar)[cell] * xb;
    return 0.5 * dot(xb, y);
  }
};

Vec eval_w(const Disturbance& d, std::size_t k, std::size_t s, Rng& noise) {
  Vec w(s, 0.0);
  switch (d.kind) {
    case Disturbance::Kind::kZero:
      break;
    case Disturbance::Kind::kExpr: {
      const std::vector<double> kv{static_cast<double>(k)};
      for (std::size_t i = 0; i < s; ++i) w[i] = d.exprs.at(i).evaluate(kv);
      break;
    }
    case Disturbance::Kind::kNoise:
      for (std::size_t i = 0; i < s; ++i)
        w[i] = noise.uniform(-d.amplitude, d.amplitude);
      break;
  }
  return w;
}

struct Maps {
  std::size_t n, m, s;
  const model::NonlinearSystemSpec* nl = nullptr;
  const PwaDynamics* pd = nullptr;
  const model::PolyhedralPartition* part = nullptr;

  Vec f(const Vec& x, std::size_t cell) const {
    if (nl) return nl->eval_f(x);
    const auto& ca = pd->pwa->cells[cell];
    Vec v = ca.A * x;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += ca.a[i];
    return v;
  }
  Vec h(const Vec& x, std::size_t cell) const {
    if (nl) return nl->eval_h(x);
    const auto& ca = pd->pwa->cells[cell];
    Vec v = ca.C * x;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += ca.c[i];
    return v;
  }
  const Mat& B1() const { return nl ? nl->B1() : pd->B1; }
  const Mat& D1() const { return nl ? nl->D1() : pd->D1; }
  const Mat& B2() const { return nl ? nl->B2() : pd->B2; }
  const Mat& D2() const { return nl ? nl->D2() : pd->D2; }
};

Vec step_state(const Maps& mp, const Vec& x, std::size_t cell, const Vec& u,
               const Vec& w) {
  Vec xn = mp.f(x, cell);
  const Vec bu = mp.B1() * u;
  const Vec dw = mp.D1() * w;
  for (std::size_t i = 0; i < xn.size(); ++i) xn[i] += bu[i] + dw[i];
  return xn;
}

Vec output(const Maps& mp, const Vec& x, std::size_t cell, const Vec& u, const Vec& w) {
  Vec z = mp.h(x, cell);
  const Vec bu = mp.B2() * u;
  const Vec dw = mp.D2() * w;
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += bu[i] + dw[i];
  return z;
}

}  // namespace

SimulationTrace run(const Dynamics& dyn, const model::PolyhedralPartition& partition,
                    const SimulationConfig& config) {
  Maps mp;
  mp.part = &partition;
  if (std::holds_alternative<const model::NonlinearSystemSpec*>(dyn)) {
    mp.nl = std::get<const model::NonlinearSystemSpec*>(dyn);
    mp.n = mp.nl->n();
    mp.m = mp.nl->m();
    mp.s = mp.nl->s();
  } else {
    mp.pd = &std::get<PwaDynamics>(dyn);
    mp.n = mp.pd->B1.rows();
    mp.m = mp.pd->B1.cols();
    mp.s = mp.pd->D2.rows();
  }

  StorageEval storage{config.storage.kind, {}, &config.storage.per_cell};
  if (storage.kind == Storage::Kind::kTinv) {
    for (const Mat& t : config.storage.per_cell) {
      auto inv = linalg::inverse(t);
      if (!inv) throw std::invalid_argument("run: storage T(i) is singular");
      inv->symmetrize();
      storage.tinv.push_back(*inv);
    }
  }

  const bool has_gains = !config.gains.empty();
  if (has_gains && config.gains.size() != partition.size())
    throw std::invalid_argument("run: gain table does not cover the partition");

  SimulationTrace trace;
  Rng noise(config.disturbance.seed);
  Rng chan(config.channel_seed);
  Vec x = config.x0;
  if (!partition.locate(x))
    throw std::invalid_argument("run: x0 outside the analysis region");

  int v_prev = -1;  // -1: no transmission yet (k = 0 uses the stationary law)
  for (std::size_t k = 0; k < config.horizon; ++k) {
    const auto cell = partition.locate(x);
    if (!cell) {
      trace.truncated = true;
      trace.exit_step = k;
      trace.exit_reason = "state left the analysis region";
      break;
    }
    StepRecord rec;
    rec.k = k;
    rec.x = x;
    rec.cell = *cell;
    rec.w = eval_w(config.disturbance, k, mp.s, noise);
    rec.u_prime = has_gains ? (config.gains[*cell] * x) : Vec(mp.m, 0.0);

    double pbar = 1.0;
    if (config.channel) {
      pbar = (v_prev < 0) ? config.channel->stationary_arrival()
                          : config.channel->pbar_given(v_prev);
      rec.v = chan.bernoulli(pbar) ? 1 : 0;
    } else {
      rec.v = 1;
    }
    rec.u = rec.u_prime;
    if (rec.v == 0)
      for (auto& ui : rec.u) ui = 0.0;  // zero-input scheme, exactly zero

    rec.z = output(mp, x, *cell, rec.u, rec.w);
    rec.storage_value = storage.value(x, *cell);

    const Vec x_next = step_state(mp, x, *cell, rec.u, rec.w);
    const auto cell_next = partition.locate(x_next);

    if (config.channel) {
      // both branches of the two-point conditional expectation
      Vec u_on = rec.u_prime;
      Vec u_off(mp.m, 0.0);
      const Vec x_on = step_state(mp, x, *cell, u_on, rec.w);
      const Vec x_off = step_state(mp, x, *cell, u_off, rec.w);
      const auto c_on = partition.locate(x_on);
      const auto c_off = partition.locate(x_off);
      if (!c_on || !c_off || !cell_next) {
        trace.truncated = true;
        trace.exit_step = k;
        trace.exit_reason = "successor branch left the analysis region";
        break;
      }
      const Vec z_on = output(mp, x, *cell, u_on, rec.w);
      const Vec z_off = output(mp, x, *cell, u_off, rec.w);
      const double v0 = rec.storage_value;
      const double g_on = storage.value(x_on, *c_on) - v0 - dot(z_on, rec.w);
      const double g_off = storage.value(x_off, *c_off) - v0 - dot(z_off, rec.w);
      rec.conditional_gap = pbar * g_on + (1.0 - pbar) * g_off;
      rec.gap = (rec.v == 1) ? g_on : g_off;
    } else {
      if (!cell_next) {
        // the step's gap needs V at the successor; stop before recording it
        trace.truncated = true;
        trace.exit_step = k;
        trace.exit_reason = "successor state left the analysis region";
        trace.final_state = x_next;
        break;
      }
      rec.gap = storage.value(x_next, *cell_next) - rec.storage_value - dot(rec.z, rec.w);
    }

    trace.steps.push_back(std::move(rec));
    x = x_next;
    if (config.channel) v_prev = trace.steps.back().v;
    trace.final_state = x;
  }
  return trace;
}

DissipationReport dissipation_report(const SimulationTrace& trace, double tolerance) {
  DissipationReport rep;
  if (trace.steps.empty()) throw std::invalid_argument("dissipation_report: empty trace");
  rep.max_gap = -1e300;
  rep.max_conditional_gap = -1e300;
  for (const auto& st : trace.steps) {
    if (st.gap > rep.max_gap) {
      rep.max_gap = st.gap;
      rep.argmax_step = st.k;
    }
    if (st.gap > tolerance) ++rep.violations;
    if (st.conditional_gap) {
      ++rep.conditional_evaluated;
      rep.max_conditional_gap = std::max(rep.max_conditional_gap, *st.conditional_gap);
      if (*st.conditional_gap > tolerance) ++rep.conditional_violations;
    }
  }
  if (rep.conditional_evaluated == 0) rep.max_conditional_gap = 0.0;
  return rep;
}

void write_csv(const SimulationTrace& trace, std::size_t n, std::size_t m,
               std::size_t s, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_csv: cannot open " + path);
  os << "k";
  for (std::size_t i = 1; i <= n; ++i) os << ",x" << i;
  os << ",cell";
  for (std::size_t i = 1; i <= m; ++i) os << ",u_prime" << i;
  os << ",v";
  for (std::size_t i = 1; i <= m; ++i) os << ",u" << i;
  for (std::size_t i = 1; i <= s; ++i) os << ",w" << i;
  for (std::size_t i = 1; i <= s; ++i) os << ",z" << i;
  os << ",V,gap,cond_gap\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << ',' << buf;
  };
  for (const auto& st : trace.steps) {
    os << st.k;
    for (double v : st.x) put(v);
    os << ',' << st.cell;
    for (double v : st.u_prime) put(v);
    os << ',' << st.v;
    for (double v : st.u) put(v);
    for (double v : st.w) put(v);
    for (double v : st.z) put(v);
    put(st.storage_value);
    put(st.gap);
    if (st.conditional_gap) {
      put(*st.conditional_gap);
    } else {
      os << ",";
    }
    os << "\n";
  }
}

}  // namespace pwapass::sim
