#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pwapass/expr.hpp"
#include "pwapass/matrix.hpp"

namespace pwapass::model {

// Discrete-time system
//   x_{k+1} = f(x_k) + B1 u_k + D1 w_k
//   z_k     = h(x_k) + B2 u_k + D2 w_k
// with componentwise expressions for f and h. Construction validates the
// matrix dimensions and that f(0) = 0, h(0) = 0 (within 1e-12), which the
// origin-cell handling of the affine approximation relies on.
class NonlinearSystemSpec {
 public:
  NonlinearSystemSpec(std::size_t n, std::size_t m, std::size_t s,
                      std::vector<expr::Expression> f,
                      std::vector<expr::Expression> h, Mat B1, Mat D1, Mat B2,
                      Mat D2);

  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }
  std::size_t s() const { return s_; }
  const Mat& B1() const { return B1_; }
  const Mat& D1() const { return D1_; }
  const Mat& B2() const { return B2_; }
  const Mat& D2() const { return D2_; }
  const std::vector<expr::Expression>& f_exprs() const { return f_; }
  const std::vector<expr::Expression>& h_exprs() const { return h_; }

  Vec eval_f(const Vec& x) const;
  Vec eval_h(const Vec& x) const;
  // Jacobians of f and h at x (via the folded symbolic partials).
  Mat jacobian_f(const Vec& x) const;
  Mat jacobian_h(const Vec& x) const;

 private:
  std::size_t n_, m_, s_;
  std::vector<expr::Expression> f_, h_;
  std::vector<std::vector<expr::Expression>> df_, dh_;  // folded partials
  Mat B1_, D1_, B2_, D2_;
};

// One polyhedral cell. `E`/`e` is the certificate representation used in the
// S-procedure terms (Ebar = [E e], with Ebar xbar >= 0 on the cell); origin
// cells carry only zero-offset rows there, so e == 0 exactly. Membership
// testing uses the full halfspace description in `E_mem`/`e_mem` (for grid
// slabs that is both interval bounds).
struct Cell {
  int index = -1;
  Mat E;      // certificate rows
  Vec e;      // certificate offsets (exactly zero when contains_origin)
  Mat E_mem;  // membership rows
  Vec e_mem;
  bool contains_origin = false;

  // For grid-built slab cells: partition axis and interval. axis < 0 for
  // manually supplied cells.
  int axis = -1;
  double lo = 0.0, hi = 0.0;

  // Ebar = [E e]
  Mat ebar() const;
  bool contains(const Vec& x, double tol = 1e-12) const;
  std::string describe() const;
};

class PolyhedralPartition {
 public:
  PolyhedralPartition() = default;
  PolyhedralPartition(std::vector<Cell> cells, Mat box);

  const std::vector<Cell>& cells() const { return cells_; }
  const Cell& cell(std::size_t i) const { return cells_.at(i); }
  std::size_t size() const { return cells_.size(); }
  // Analysis-region bounding box, n x 2 (lo, hi per coordinate).
  const Mat& box() const { return box_; }

  // Smallest index i with E_mem(i) x + e_mem(i) >= -1e-12 componentwise.
  // nullopt when x is outside every cell.
  std::optional<std::size_t> locate(const Vec& x) const;

  // Coverage / disjointness spot check by sampling: every sampled in-box,
  // in-region point must belong to at least one cell. Returns the number of
  // uncovered samples.
  std::size_t coverage_violations(std::size_t samples, std::uint64_t seed) const;

 private:
  std::vector<Cell> cells_;
  Mat box_;
};

// Slab partition along one coordinate from sorted breakpoints. Cells touching
// zero get the origin-cell treatment (certificate offset zero on the origin
// side, far bound dropped from the certificate rows). `box` bounds the
// analysis region in the remaining coordinates (n x 2).
PolyhedralPartition grid_partition(int axis, const std::vector<double>& breakpoints,
                                   const Mat& box);

// [x; 1]
Vec lift(const Vec& x);

}  // namespace pwapass::model
