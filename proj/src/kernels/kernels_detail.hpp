#pragma once

#include <cstddef>

namespace pwapass::kernels::detail {

double dot_scalar(const double* a, const double* b, std::size_t n);
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n);
void scal_scalar(double alpha, double* x, std::size_t n);
void rank1_scalar(double* m, std::size_t rows, std::size_t cols, double alpha,
                  const double* x, const double* y);
void matmul_scalar(const double* a, const double* b, double* c, std::size_t m,
                   std::size_t k, std::size_t n);

#if defined(__x86_64__) || defined(_M_X64)
#define PWAPASS_X86 1
double dot_avx2(const double* a, const double* b, std::size_t n);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
void scal_avx2(double alpha, double* x, std::size_t n);
void rank1_avx2(double* m, std::size_t rows, std::size_t cols, double alpha,
                const double* x, const double* y);
void matmul_avx2(const double* a, const double* b, double* c, std::size_t m,
                 std::size_t k, std::size_t n);
#else
#define PWAPASS_X86 0
#endif

}  // namespace pwapass::kernels::detail
