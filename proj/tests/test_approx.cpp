#include <doctest.h>

#include <cmath>

#include "paper_system.hpp"
#include "pwapass/approx.hpp"

using namespace pwapass;

namespace {
model::PolyhedralPartition wide_partition() {
  return model::grid_partition(0, testsys::breakpoints_wide(),
                               testsys::region_box(-0.82, 0.82));
}
}  // namespace

TEST_CASE("linearize_cell: origin cell and midpoint cell") {
  auto sys = testsys::benchmark_system();
  auto p = wide_partition();

  const auto io = p.locate({0.05, 0, 0});
  REQUIRE(io);
  auto origin = approx::linearize_cell(sys, p, p.cell(*io));
  CHECK(origin.A(0, 0) == doctest::Approx(4.0).epsilon(1e-14));
  for (double ai : origin.a) CHECK(ai == 0.0);  // bit-exact
  for (double ci : origin.c) CHECK(ci == 0.0);

  const auto im = p.locate({0.31, 0, 0});
  REQUIRE(im);
  auto mid = approx::linearize_cell(sys, p, p.cell(*im));
  CHECK(p.cell(*im).lo == doctest::Approx(0.28));
  // 4 cos(0.31) and 4 sin(0.31) - 4 cos(0.31)*0.31, frozen from a
  // high-precision evaluation
  CHECK(mid.A(0, 0) == doctest::Approx(3.8093342795428535).epsilon(1e-13));
  CHECK(mid.a[0] == doctest::Approx(0.039340919115489393).epsilon(1e-10));
  CHECK(mid.a[1] == 0.0);
  CHECK(mid.a[2] == 0.0);
}

TEST_CASE("linear systems linearize exactly with zero residual") {
  using pwapass::expr::Expression;
  std::vector<Expression> f{Expression::parse("0.5*x1+0.25*x2"),
                            Expression::parse("x1")};
  std::vector<Expression> h{Expression::parse("x2")};
  model::NonlinearSystemSpec sys(2, 1, 1, f, h, Mat{{1}, {0}}, Mat{{0}, {1}},
                                 Mat{{0}}, Mat{{1}});
  auto p = model::grid_partition(0, {-1.0, 0.0, 1.0}, Mat{{-1, 1}, {-1, 1}});
  approx::SamplingOptions so;
  so.samples = 2000;
  auto pwa = approx::build_approximation(sys, p, so);
  for (const auto& c : pwa.cells) {
    CHECK(c.A(0, 0) == doctest::Approx(0.5));
    CHECK(c.eps == 0.0);
    CHECK(c.delta == 0.0);
    for (double ai : c.a) CHECK(ai == doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("residual values") {
  auto sys = testsys::benchmark_system();
  auto p = wide_partition();
  const auto io = p.locate({0.05, 0, 0});
  auto ca = approx::linearize_cell(sys, p, p.cell(*io));

  // 4 sin(0.13) - 4*0.13 at the origin-cell edge (frozen oracle value)
  auto [m, nres] = approx::residual(sys, ca, {0.13, 0.7, -0.4});
  CHECK(m[0] == doctest::Approx(-0.0014634295212205828).epsilon(1e-9));
  CHECK(m[1] == doctest::Approx(0.0));
  CHECK(m[2] == doctest::Approx(0.0));
  CHECK(nres[0] == doctest::Approx(0.0));

  // at the expansion point of a non-origin cell the residual vanishes
  const auto im = p.locate({0.31, 0, 0});
  auto cm = approx::linearize_cell(sys, p, p.cell(*im));
  auto [m2, n2] = approx::residual(sys, cm, cm.expansion_point);
  for (double v : m2) CHECK(std::abs(v) < 1e-15);
}

TEST_CASE("bound_residuals on the origin cell matches the Taylor remainder scale") {
  auto sys = testsys::benchmark_system();
  auto p = wide_partition();
  const auto io = p.locate({0.05, 0, 0});
  auto ca = approx::linearize_cell(sys, p, p.cell(*io));
  approx::SamplingOptions so;
  approx::bound_residuals(sys, p, p.cell(*io), ca, so);
  const double raw = ca.eps / so.safety_factor;
  // sup ratio = 4(0.13 - sin 0.13)/0.13 = 0.011257...; the cubic remainder
  // bound 4*0.13^2/6 = 0.011267 caps it
  CHECK(raw <= 0.011266666666666667 + 1e-9);
  CHECK(raw >= 0.0112 * 0.98);
  CHECK(ca.delta == 0.0);  // linear output has no residual
  CHECK_THROWS(approx::bound_residuals(sys, p, p.cell(*io), ca,
                                       approx::SamplingOptions{100, 1.2, 1}));
}

TEST_CASE("residual bounds hold on fresh samples in every cell") {
  auto sys = testsys::benchmark_system();
  auto p = wide_partition();
  approx::SamplingOptions so;
  so.samples = 4000;
  auto pwa = approx::build_approximation(sys, p, so);
  Rng fresh(987654);  // different stream from the bounding pass
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& cell = p.cell(i);
    const auto& ca = pwa.cells[i];
    for (int k = 0; k < 400; ++k) {
      const Vec x = approx::sample_point(p, cell, fresh);
      const double nx = norm2(x);
      if (nx == 0.0) continue;
      auto [m, nres] = approx::residual(sys, ca, x);
      CHECK(norm2(m) <= ca.eps * nx * (1 + 1e-12));
      CHECK(norm2(nres) <= ca.delta * nx + 1e-15);
    }
  }
}

TEST_CASE("lifted consistency") {
  auto sys = testsys::benchmark_system();
  auto p = wide_partition();
  auto ca = approx::linearize_cell(sys, p, p.cell(3));
  Rng rng(4);
  for (int k = 0; k < 50; ++k) {
    Vec x{rng.uniform(p.cell(3).lo, p.cell(3).hi), rng.uniform(-2, 2),
          rng.uniform(-2, 2)};
    const Vec lhs = ca.a_hat() * model::lift(x);
    const Vec ax = ca.A * x;
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(lhs[i] == doctest::Approx(ax[i] + ca.a[i]).epsilon(1e-14));
    CHECK(lhs[3] == 1.0);
  }
  // bottom row of a_hat is [0 ... 0 1]
  const Mat ah = ca.a_hat();
  for (std::size_t j = 0; j < 3; ++j) CHECK(ah(3, j) == 0.0);
  CHECK(ah(3, 3) == 1.0);
}
