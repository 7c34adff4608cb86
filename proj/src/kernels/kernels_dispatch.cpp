#include "pwapass/kernels.hpp"

#include <atomic>

#include "kernels_detail.hpp"

namespace pwapass::kernels {

namespace {

using detail::axpy_scalar;
using detail::dot_scalar;
using detail::matmul_scalar;
using detail::rank1_scalar;
using detail::scal_scalar;

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scal)(double, double*, std::size_t);
  void (*rank1)(double*, std::size_t, std::size_t, double, const double*, const double*);
  void (*matmul)(const double*, const double*, double*, std::size_t, std::size_t, std::size_t);
  const char* isa;
};

constexpr Table kScalar{dot_scalar, axpy_scalar, scal_scalar, rank1_scalar,
                        matmul_scalar, "scalar"};

#if PWAPASS_X86
constexpr Table kAvx2{detail::dot_avx2, detail::axpy_avx2, detail::scal_avx2,
                      detail::rank1_avx2, detail::matmul_avx2, "avx2"};
#endif

const Table* detect() {
#if PWAPASS_X86
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    return &kAvx2;
  }
#endif
  return &kScalar;
}

std::atomic<const Table*> g_table{nullptr};

const Table& table() {
  const Table* t = g_table.load(std::memory_order_acquire);
  if (!t) {
    t = detect();
    g_table.store(t, std::memory_order_release);
  }
  return *t;
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  return table().dot(a, b, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  table().axpy(alpha, x, y, n);
}
void scal(double alpha, double* x, std::size_t n) { table().scal(alpha, x, n); }
void rank1_update(double* m, std::size_t rows, std::size_t cols, double alpha,
                  const double* x, const double* y) {
  table().rank1(m, rows, cols, alpha, x, y);
}
void matmul(const double* a, const double* b, double* c, std::size_t m,
            std::size_t k, std::size_t n) {
  table().matmul(a, b, c, m, k, n);
}
const char* active_isa() { return table().isa; }

void force_scalar(bool on) {
  g_table.store(on ? &kScalar : detect(), std::memory_order_release);
}

}  // namespace pwapass::kernels
