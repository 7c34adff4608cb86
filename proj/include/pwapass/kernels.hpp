#pragma once

#include <cstddef>

// Low-level dense kernels used by the linear-algebra and LMI solver layers.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. The active variant is chosen once at runtime from CPU features;
// kernels::active_isa() reports which one is in use. The two variants are
// equivalence-tested against each other (same inputs, results match to
// floating-point reassociation noise).
namespace pwapass::kernels {

// sum_i a[i]*b[i]
double dot(const double* a, const double* b, std::size_t n);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);

// x *= alpha
void scal(double alpha, double* x, std::size_t n);

// m (rows x cols, row-major) += alpha * x y^T
void rank1_update(double* m, std::size_t rows, std::size_t cols, double alpha,
                  const double* x, const double* y);

// c = a * b with a (m x k), b (k x n), all row-major; c is overwritten.
void matmul(const double* a, const double* b, double* c, std::size_t m,
            std::size_t k, std::size_t n);

// "avx2" or "scalar"
const char* active_isa();

// Force the scalar reference path (used by the equivalence tests).
void force_scalar(bool on);

}  // namespace pwapass::kernels
