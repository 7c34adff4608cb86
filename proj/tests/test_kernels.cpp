#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "pwapass/kernels.hpp"
#include "pwapass/rng.hpp"

using namespace pwapass;

namespace {
std::vector<double> random_vec(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}
}  // namespace

TEST_CASE("kernel variants agree on random inputs") {
  Rng rng(123);
  // odd lengths exercise the tail loops
  for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 17u, 64u, 129u}) {
    auto a = random_vec(rng, n);
    auto b = random_vec(rng, n);

    kernels::force_scalar(true);
    const double dot_ref = kernels::dot(a.data(), b.data(), n);
    auto y_ref = b;
    kernels::axpy(0.7, a.data(), y_ref.data(), n);
    auto s_ref = a;
    kernels::scal(-1.25, s_ref.data(), n);

    kernels::force_scalar(false);
    const double dot_active = kernels::dot(a.data(), b.data(), n);
    auto y_active = b;
    kernels::axpy(0.7, a.data(), y_active.data(), n);
    auto s_active = a;
    kernels::scal(-1.25, s_active.data(), n);

    CHECK(dot_active == doctest::Approx(dot_ref).epsilon(1e-13));
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(y_active[i] == doctest::Approx(y_ref[i]).epsilon(1e-13));
      CHECK(s_active[i] == s_ref[i]);
    }
  }
  kernels::force_scalar(false);
}

TEST_CASE("rank1 and matmul variants agree") {
  Rng rng(77);
  for (auto [r, c] : std::vector<std::pair<std::size_t, std::size_t>>{
           {1, 1}, {3, 5}, {9, 9}, {13, 14}}) {
    auto x = random_vec(rng, r);
    auto y = random_vec(rng, c);
    std::vector<double> m_ref(r * c, 0.5), m_act(r * c, 0.5);
    kernels::force_scalar(true);
    kernels::rank1_update(m_ref.data(), r, c, 1.3, x.data(), y.data());
    kernels::force_scalar(false);
    kernels::rank1_update(m_act.data(), r, c, 1.3, x.data(), y.data());
    for (std::size_t i = 0; i < r * c; ++i)
      CHECK(m_act[i] == doctest::Approx(m_ref[i]).epsilon(1e-13));

    auto a = random_vec(rng, r * c);
    auto b = random_vec(rng, c * r);
    std::vector<double> p_ref(r * r), p_act(r * r);
    kernels::force_scalar(true);
    kernels::matmul(a.data(), b.data(), p_ref.data(), r, c, r);
    kernels::force_scalar(false);
    kernels::matmul(a.data(), b.data(), p_act.data(), r, c, r);
    for (std::size_t i = 0; i < r * r; ++i)
      CHECK(p_act[i] == doctest::Approx(p_ref[i]).epsilon(1e-12));
  }
  kernels::force_scalar(false);
}

TEST_CASE("active isa reports a known name") {
  const std::string isa = kernels::active_isa();
  CHECK((isa == "avx2" || isa == "scalar"));
}
