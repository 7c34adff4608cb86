#include <doctest.h>

#include <cmath>

#include "paper_system.hpp"
#include "pwapass/netpassify.hpp"
#include "pwapass/sim.hpp"

using namespace pwapass;
using netpassify::GilbertElliottChannel;

TEST_CASE("channel construction rejects degenerate probabilities") {
  CHECK_THROWS(GilbertElliottChannel(1.0, 0.5));
  CHECK_THROWS(GilbertElliottChannel(0.5, 0.0));
  CHECK_NOTHROW(GilbertElliottChannel(0.95, 0.04));
}

TEST_CASE("channel sampler: determinism, near-perfect channel, stationary law") {
  const auto a = netpassify::sample_channel(GilbertElliottChannel(0.95, 0.04), 1000, 7);
  const auto b = netpassify::sample_channel(GilbertElliottChannel(0.95, 0.04), 1000, 7);
  CHECK(a == b);

  // alpha ~ 1, beta ~ 0: almost no losses
  const auto good =
      netpassify::sample_channel(GilbertElliottChannel(0.999999, 0.000001), 100000, 3);
  std::size_t losses = 0;
  for (int v : good)
    if (v == 0) ++losses;
  CHECK(static_cast<double>(losses) / good.size() <= 1e-4);

  // empirical marginal within 1e-2 of alpha/(alpha+beta) = 0.959595...
  const GilbertElliottChannel ch(0.95, 0.04);
  const auto seq = netpassify::sample_channel(ch, 100000, 11);
  double ones = 0;
  for (int v : seq) ones += v;
  CHECK(std::abs(ones / seq.size() - 0.9595959595959596) <= 1e-2);

  // empirical transition frequencies within 1e-2 of (alpha, 1-beta)
  std::size_t n01 = 0, n0 = 0, n11 = 0, n1 = 0;
  for (std::size_t k = 1; k < seq.size(); ++k) {
    if (seq[k - 1] == 0) {
      ++n0;
      n01 += seq[k];
    } else {
      ++n1;
      n11 += seq[k];
    }
  }
  CHECK(std::abs(static_cast<double>(n01) / n0 - 0.95) <= 1e-2);
  CHECK(std::abs(static_cast<double>(n11) / n1 - 0.96) <= 1e-2);
}

namespace {

struct ScalarSetup {
  model::NonlinearSystemSpec sys;
  model::PolyhedralPartition part;
  approx::PwaApproximation pwa;
};

ScalarSetup scalar_plant(const char* f, const char* h, double b1, double d1,
                         double b2, double d2) {
  using pwapass::expr::Expression;
  model::NonlinearSystemSpec sys(1, 1, 1, {Expression::parse(f)},
                                 {Expression::parse(h)}, Mat{{b1}}, Mat{{d1}},
                                 Mat{{b2}}, Mat{{d2}});
  auto part = model::grid_partition(0, {-1.0, 0.0, 1.0}, Mat{{-1, 1}});
  approx::SamplingOptions so;
  so.samples = 1000;
  auto pwa = approx::build_approximation(sys, part, so);
  return {std::move(sys), std::move(part), std::move(pwa)};
}

}  // namespace

TEST_CASE("thm3 block: size and hand expansion on a scalar instance") {
  auto su = scalar_plant("0.5*x1", "x1", 1.0, 0.2, 0.3, 1.0);
  const auto& ci = su.pwa.cells[0];
  Mat t{{1.5}}, u{{0.8}}, w{{-0.2}}, r{{0.1}}, g{{0.3}};
  const double q = 0.02, rr = 1e-8, h = 0.018, pbar = 0.9;
  const Mat m = netpassify::thm3_block_value(su.sys.B1(), su.sys.D1(), su.sys.B2(),
                                             su.sys.D2(), ci, pbar, t, t, t, u, w, r,
                                             g, q, rr, h);
  // 3n + s + 3 rows with n = s = 1
  REQUIRE(m.rows() == 7);
  CHECK(m(0, 0) == doctest::Approx(2 * 0.8 - 1.5 - 0.1));
  CHECK(m(0, 2) == doctest::Approx(0.8 * 1.0 + pbar * (-0.2) * 0.3));  // U'C' + pbar W'B2'
  CHECK(m(0, 3) == doctest::Approx(0.8 * 0.5 + (-0.2) * 1.0));
  CHECK(m(0, 5) == doctest::Approx(0.8 * 0.5));  // open-loop branch: U'A'
  CHECK(m(1, 1) == doctest::Approx(2 * q - (h + rr)));
  CHECK(m(1, 4) == doctest::Approx(q));
  CHECK(m(1, 6) == doctest::Approx(q));
  CHECK(m(2, 3) == doctest::Approx(0.2));  // D1'
  CHECK(m(2, 5) == doctest::Approx(0.2));
  CHECK(m(3, 3) == doctest::Approx(1.5 / pbar));
  CHECK(m(4, 4) == doctest::Approx(h / pbar));
  CHECK(m(5, 5) == doctest::Approx(1.5 / (1 - pbar)));
  CHECK(m(6, 6) == doctest::Approx(h / (1 - pbar)));
  CHECK(m(3, 5) == 0.0);
}

TEST_CASE("thm3 block: with B2 = 0 the coupling loses its pbar dependence") {
  auto su = scalar_plant("0.5*x1", "x1", 1.0, 0.2, 0.0, 1.0);
  const auto& ci = su.pwa.cells[0];
  Mat t{{1.0}}, u{{1.0}}, w{{2.0}}, r{{0.1}}, g{{0.3}};
  const Mat a = netpassify::thm3_block_value(su.sys.B1(), su.sys.D1(), su.sys.B2(),
                                             su.sys.D2(), ci, 0.9, t, t, t, u, w, r, g,
                                             0.1, 1e-8, 0.1);
  const Mat b = netpassify::thm3_block_value(su.sys.B1(), su.sys.D1(), su.sys.B2(),
                                             su.sys.D2(), ci, 0.5, t, t, t, u, w, r, g,
                                             0.1, 1e-8, 0.1);
  CHECK(a(0, 2) == b(0, 2));
}

TEST_CASE("benchmark cell assembles at the networked dimensions") {
  auto sys = testsys::benchmark_system();
  auto part = model::grid_partition(0, testsys::breakpoints_network(),
                                    testsys::region_box(-0.5, 0.5));
  auto ca = approx::linearize_cell(sys, part, *part.locate({0.03, 0, 0}) >= 0
                                                  ? part.cell(*part.locate({0.03, 0, 0}))
                                                  : part.cell(0));
  Mat t = Mat::identity(3), u = Mat::identity(3), w(1, 3), r = Mat::identity(3),
      g{{1.0}};
  const Mat m = netpassify::thm3_block_value(sys.B1(), sys.D1(), sys.B2(), sys.D2(),
                                             ca, 0.95, t, t, t, u, w, r, g, 0.1, 1e-8,
                                             0.1);
  CHECK(m.rows() == 3 * 3 + 1 + 3);  // 13 for n = 3, s = 1
}

TEST_CASE("rho audit formulas") {
  auto su = scalar_plant("0.5*x1", "x1", 1.0, 0.0, 0.0, 1.0);
  netpassify::Theorem3Synthesis syn;
  passify::CellSynthesis cs;
  cs.T = Mat{{2.0}};  // ||T^-1|| = 0.5
  cs.U = Mat{{1.0}};
  cs.W = Mat{{0.0}};
  cs.R = Mat{{1.0}};
  cs.G = Mat{{1.0}};
  cs.K = Mat{{0.0}};
  syn.cells = {cs, cs};
  syn.q = 0.01;
  syn.r = 1e-8;
  syn.h = 0.01;
  GilbertElliottChannel ch(0.95, 0.04);

  // eps = delta = 0: every rho vanishes and the conditions reduce to
  // L(i) >= 0, G(i) >= 0
  auto audit = netpassify::side_conditions(su.sys, su.pwa, ch, syn);
  for (const auto& a : audit) {
    CHECK(a.rho_sum == 0.0);
    CHECK(a.pass_c);
    CHECK(a.pass_d);
  }

  // pbar = 0.96, eps = 0.01: rho3 = 0.96e-4 * ||T^-1|| by direct substitution
  auto pwa2 = su.pwa;
  pwa2.cells[0].eps = 0.01;
  auto audit2 = netpassify::side_conditions(su.sys, pwa2, ch, syn);
  CHECK(audit2[0].rho3 == doctest::Approx(0.96 * 1e-4 * 0.5).epsilon(1e-9));
  // rho7 = delta independent of the channel
  pwa2.cells[0].delta = 0.123;
  auto audit3 = netpassify::side_conditions(su.sys, pwa2, ch, syn);
  CHECK(audit3[0].rho7 == doctest::Approx(0.123));
}

TEST_CASE("networked synthesis on the linear scalar plant; corollary agrees") {
  auto su = scalar_plant("0.5*x1", "x1", 1.0, 0.3, 0.0, 1.0);
  GilbertElliottChannel ch(0.9, 0.08);
  passify::SynthesisOptions opts;
  opts.sampling.samples = 1000;

  const auto outc = netpassify::synthesize_networked(su.sys, su.part, ch, opts);
  REQUIRE(outc.ok());
  const auto& syn = *outc.synthesis;
  CHECK(syn.worst_block_margin >= -opts.solve.tolerance);
  for (const auto& a : syn.audit) CHECK(a.pass());

  // the eps = delta = 0 run coincides with Corollary 1's conditions: the
  // theorem-3 certificate must satisfy the corollary blocks and vice versa
  netpassify::PwaSystem pwasys;
  pwasys.partition = &su.part;
  pwasys.pwa = su.pwa;
  pwasys.B1 = su.sys.B1();
  pwasys.D1 = su.sys.D1();
  pwasys.B2 = su.sys.B2();
  pwasys.D2 = su.sys.D2();
  const auto cor = netpassify::synthesize_pwa_networked(pwasys, ch, opts);
  REQUIRE(cor);
  CHECK(cor->worst_block_margin >= -opts.solve.tolerance);

  const double tol = opts.solve.tolerance;
  for (std::size_t i = 0; i < su.part.size(); ++i)
    for (double pbar : {ch.alpha, 1 - ch.beta}) {
      // corollary certificate into the theorem-3 blocks with R = G = 0, r = 0
      const Mat cross1 = netpassify::thm3_block_value(
          su.sys.B1(), su.sys.D1(), su.sys.B2(), su.sys.D2(), su.pwa.cells[i], pbar,
          cor->T[i], cor->T[i], cor->T[i], cor->U[i], cor->W[i], Mat(1, 1), Mat(1, 1),
          cor->q, 0.0, cor->h);
      CHECK(lmi::min_eigenvalue(cross1) >= -tol);
      // theorem-3 certificate into the corollary blocks
      const Mat cross2 = netpassify::thm3_block_value(
          su.sys.B1(), su.sys.D1(), su.sys.B2(), su.sys.D2(), su.pwa.cells[i], pbar,
          syn.cells[i].T, syn.cells[i].T, syn.cells[i].T, syn.cells[i].U,
          syn.cells[i].W, Mat(1, 1), Mat(1, 1), syn.q, 0.0, syn.h, /*corollary=*/true);
      CHECK(lmi::min_eigenvalue(cross2) >= -tol);
    }

  // closed-loop PWA form under the returned gains reproduces through the
  // simulator with exact conditional dissipation
  sim::SimulationConfig sc;
  sc.x0 = {0.3};
  sc.horizon = 50;
  sc.channel = ch;
  sc.channel_seed = 5;
  sc.disturbance.kind = sim::Disturbance::Kind::kNoise;
  sc.disturbance.amplitude = 0.02;
  sc.disturbance.seed = 6;
  sc.storage.kind = sim::Storage::Kind::kTinv;
  for (std::size_t i = 0; i < su.part.size(); ++i) {
    sc.gains.push_back(cor->K[i]);
    sc.storage.per_cell.push_back(cor->T[i]);
  }
  sim::PwaDynamics pd{&su.pwa, su.sys.B1(), su.sys.D1(), su.sys.B2(), su.sys.D2()};
  const auto trace = sim::run(pd, su.part, sc);
  REQUIRE(!trace.steps.empty());
  const auto rep = sim::dissipation_report(trace, 1e-9);
  CHECK(rep.conditional_violations == 0);
}
