#pragma once

#include <cassert>

#include "pwapass/lmi.hpp"

// Helpers for writing affine block entries. Convention: every logical
// upper-triangle entry of a block is specified exactly once; add_const /
// add_term mirror it to the lower triangle.
namespace pwapass::lmi {

// Symmetric constant contribution coef*M placed with its top-left corner on
// the diagonal at (r0, r0).
inline void put_const_sym(Block& blk, std::size_t r0, const Mat& m, double coef = 1.0) {
  assert(m.rows() == m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i; j < m.cols(); ++j) blk.add_const(r0 + i, r0 + j, coef * m(i, j));
}

// Constant placed in an off-diagonal region (row range strictly above the
// column range start or vice versa; regions must not straddle the diagonal).
inline void put_const_offdiag(Block& blk, std::size_t r0, std::size_t c0, const Mat& m,
                              double coef = 1.0) {
  assert(r0 + m.rows() <= c0 || c0 + m.cols() <= r0);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) blk.add_const(r0 + i, c0 + j, coef * m(i, j));
}

// Symmetric-variable contribution coef*V on the diagonal at (r0, r0).
inline void put_var_sym(const LmiProblem& p, Block& blk, std::size_t r0, int var,
                        std::size_t dim, double coef = 1.0) {
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = i; j < dim; ++j)
      blk.add_term(r0 + i, r0 + j, p.entry(var, i, j), coef);
}

// coef * op(X) for a rectangular/scalar variable X in an off-diagonal region.
inline void put_var_offdiag(const LmiProblem& p, Block& blk, std::size_t r0, std::size_t c0,
                            int var, std::size_t rows, std::size_t cols, double coef = 1.0,
                            bool transpose = false) {
  assert(r0 + rows <= c0 || c0 + cols <= r0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const int id = transpose ? p.entry(var, j, i) : p.entry(var, i, j);
      blk.add_term(r0 + i, c0 + j, id, coef);
    }
}

// coef * L^T V L for symmetric variable V (d x d) and constant L (d x p),
// placed on the diagonal at (r0, r0). The upper-triangle coefficient
// L(a,i)L(b,j) + [a!=b] L(b,i)L(a,j) is already symmetric in (i,j).
inline void put_quad_sym(const LmiProblem& p, Block& blk, std::size_t r0, const Mat& l,
                         int var, double coef = 1.0) {
  const std::size_t d = l.rows(), cols = l.cols();
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      const int id = p.entry(var, a, b);
      if (id < 0) continue;
      for (std::size_t i = 0; i < cols; ++i)
        for (std::size_t j = i; j < cols; ++j) {
          double v = l(a, i) * l(b, j);
          if (a != b) v += l(b, i) * l(a, j);
          blk.add_term(r0 + i, r0 + j, id, coef * v);
        }
    }
}

// coef * L^T V R for symmetric variable V (d x d), constants L (d x p) and
// R (d x q), in an off-diagonal region at (r0, c0).
inline void put_bilinear_sym(const LmiProblem& p, Block& blk, std::size_t r0, std::size_t c0,
                             const Mat& l, int var, const Mat& r, double coef = 1.0) {
  assert(r0 + l.cols() <= c0 || c0 + r.cols() <= r0);
  const std::size_t d = l.rows();
  assert(r.rows() == d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      const int id = p.entry(var, a, b);
      if (id < 0) continue;
      for (std::size_t i = 0; i < l.cols(); ++i)
        for (std::size_t j = 0; j < r.cols(); ++j) {
          double v = l(a, i) * r(b, j);
          if (a != b) v += l(b, i) * r(a, j);
          blk.add_term(r0 + i, c0 + j, id, coef * v);
        }
    }
}

}  // namespace pwapass::lmi
