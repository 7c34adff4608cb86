#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "paper_system.hpp"
#include "pwapass/sim.hpp"

using namespace pwapass;

namespace {
sim::SimulationConfig base_config(std::size_t n) {
  sim::SimulationConfig sc;
  sc.x0 = Vec(n, 0.0);
  sc.horizon = 20;
  return sc;
}
}  // namespace

TEST_CASE("equilibrium stays put with zero gaps") {
  auto sys = testsys::benchmark_system();
  auto part = model::grid_partition(0, testsys::breakpoints_wide(),
                                    testsys::region_box(-0.82, 0.82));
  auto sc = base_config(3);
  sc.gains.assign(part.size(), Mat(1, 3));  // K = 0 rows, a(i)=0 at the origin cell
  sc.storage.kind = sim::Storage::Kind::kTinv;
  sc.storage.per_cell.assign(part.size(), Mat::identity(3));
  const auto trace = sim::run(&sys, part, sc);
  REQUIRE(trace.steps.size() == 20);
  for (const auto& st : trace.steps) {
    for (double xi : st.x) CHECK(xi == 0.0);
    CHECK(st.gap == 0.0);
  }
  const auto rep = sim::dissipation_report(trace, 1e-9);
  CHECK(rep.max_gap == 0.0);
  CHECK(rep.violations == 0);
}

TEST_CASE("dissipation report flags injected violations") {
  sim::SimulationTrace trace;
  for (int k = 0; k < 5; ++k) {
    sim::StepRecord st;
    st.k = k;
    st.gap = (k == 3) ? 0.5 : -0.1;
    trace.steps.push_back(st);
  }
  const auto rep = sim::dissipation_report(trace, 1e-9);
  CHECK(rep.violations == 1);
  CHECK(rep.argmax_step == 3);
  CHECK(rep.max_gap == doctest::Approx(0.5));
  CHECK_THROWS(sim::dissipation_report(sim::SimulationTrace{}, 1e-9));
}

TEST_CASE("determinism: identical configs give identical traces") {
  auto sys = testsys::benchmark_system();
  auto part = model::grid_partition(0, testsys::breakpoints_wide(),
                                    testsys::region_box(-0.82, 0.82));
  auto sc = base_config(3);
  sc.x0 = {0.2, 0.1, -0.1};
  sc.horizon = 40;
  sc.disturbance.kind = sim::Disturbance::Kind::kNoise;
  sc.disturbance.amplitude = 0.01;
  sc.disturbance.seed = 77;
  sc.channel = netpassify::GilbertElliottChannel(0.95, 0.04);
  sc.channel_seed = 5;
  sc.gains.assign(part.size(), Mat(1, 3));
  for (auto& k : sc.gains) k(0, 0) = -1.8;  // some stabilizing-ish gain
  sc.storage.kind = sim::Storage::Kind::kTinv;
  sc.storage.per_cell.assign(part.size(), Mat::identity(3));

  const auto a = sim::run(&sys, part, sc);
  const auto b = sim::run(&sys, part, sc);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t k = 0; k < a.steps.size(); ++k) {
    for (std::size_t i = 0; i < 3; ++i) CHECK(a.steps[k].x[i] == b.steps[k].x[i]);
    CHECK(a.steps[k].v == b.steps[k].v);
    CHECK(a.steps[k].gap == b.steps[k].gap);
  }
}

TEST_CASE("zero-input law: lost packets apply exactly zero") {
  auto sys = testsys::benchmark_system();
  auto part = model::grid_partition(0, testsys::breakpoints_wide(),
                                    testsys::region_box(-0.82, 0.82));
  auto sc = base_config(3);
  sc.x0 = {0.1, 0.0, 0.0};
  sc.horizon = 200;
  sc.channel = netpassify::GilbertElliottChannel(0.6, 0.4);  // lossy
  sc.channel_seed = 9;
  sc.gains.assign(part.size(), Mat(1, 3));
  for (auto& k : sc.gains) k(0, 0) = -1.9;
  const auto trace = sim::run(&sys, part, sc);
  std::size_t losses = 0;
  for (const auto& st : trace.steps) {
    if (st.v == 0) {
      ++losses;
      for (double ui : st.u) CHECK(ui == 0.0);
    } else {
      for (std::size_t i = 0; i < st.u.size(); ++i) CHECK(st.u[i] == st.u_prime[i]);
    }
    CHECK(st.conditional_gap.has_value());
  }
  CHECK(losses > 0);
}

TEST_CASE("region exit truncates the trace with a status") {
  using pwapass::expr::Expression;
  model::NonlinearSystemSpec sys(1, 1, 1, {Expression::parse("2*x1")},
                                 {Expression::parse("x1")}, Mat{{0}}, Mat{{0}},
                                 Mat{{0}}, Mat{{1}});
  auto part = model::grid_partition(0, {-1.0, 0.0, 1.0}, Mat{{-1, 1}});
  auto sc = base_config(1);
  sc.x0 = {0.3};
  sc.horizon = 50;
  const auto trace = sim::run(&sys, part, sc);
  CHECK(trace.truncated);
  CHECK(trace.steps.size() < 50);
  CHECK(!trace.exit_reason.empty());
}

TEST_CASE("csv export carries the documented header and full precision") {
  auto sys = testsys::benchmark_system();
  auto part = model::grid_partition(0, testsys::breakpoints_wide(),
                                    testsys::region_box(-0.82, 0.82));
  auto sc = base_config(3);
  sc.x0 = {0.1234567890123456, 0.0, 0.0};
  sc.horizon = 3;
  const auto trace = sim::run(&sys, part, sc);
  const std::string path = "test_trace_out.csv";
  sim::write_csv(trace, 3, 1, 1, path);
  std::ifstream is(path);
  std::string header;
  std::getline(is, header);
  CHECK(header ==
        "k,x1,x2,x3,cell,u_prime1,v,u1,w1,z1,V,gap,cond_gap");
  std::string row;
  std::getline(is, row);
  CHECK(row.find("0.12345678901234559") != std::string::npos);
  std::remove(path.c_str());
}
