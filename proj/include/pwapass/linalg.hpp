#pragma once

#include <optional>

#include "pwapass/matrix.hpp"

namespace pwapass::linalg {

// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// Eigenvalues come back sorted ascending; if evecs is non-null it receives the
// orthogonal matrix whose COLUMNS are the corresponding eigenvectors.
// Accuracy is on the order of machine epsilon times ||a||.
void eigh(const Mat& a, Vec& evals, Mat* evecs = nullptr);

double min_eig(const Mat& symmetric);
double max_eig(const Mat& symmetric);

// Largest singular value (induced 2-norm); works for rectangular input.
double spectral_norm(const Mat& m);

// In-place Cholesky A = L L^T on the lower triangle. Returns false if A is
// not positive definite (within a pivot tolerance).
bool cholesky(Mat& a);

// Solve A x = b for symmetric positive definite A. Returns nullopt if the
// factorization fails.
std::optional<Vec> cholesky_solve(Mat a, Vec b);

// Solve A x = b by partial-pivot LU for general square A.
std::optional<Vec> lu_solve(Mat a, Vec b);

// Inverse via LU; nullopt when singular.
std::optional<Mat> inverse(const Mat& a);

// 1-norm condition estimate kappa_1 = ||A||_1 * ||A^-1||_1 (exact inverse,
// desk scale). Returns infinity when singular.
double cond1(const Mat& a);

}  // namespace pwapass::linalg
