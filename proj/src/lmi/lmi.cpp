#include "pwapass/lmi.hpp"

#include <cmath>
#include <stdexcept>

#include "pwapass/linalg.hpp"

namespace pwapass::lmi {

double spectral_norm(const Mat& m) { return linalg::spectral_norm(m); }

double min_eigenvalue(const Mat& s) {
  if (s.rows() != s.cols())
    throw std::invalid_argument("min_eigenvalue: matrix not square");
  const double scale = std::max(1.0, s.max_abs());
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = i + 1; j < s.cols(); ++j)
      if (std::abs(s(i, j) - s(j, i)) > 1e-12 * scale)
        throw std::invalid_argument("min_eigenvalue: asymmetric input");
  return linalg::min_eig(s);
}

bool schur_psd_check(const Mat& a, const Mat& b, const Mat& c, double tol) {
  if (a.rows() != a.cols() || c.rows() != c.cols() || b.rows() != a.rows() ||
      b.cols() != c.cols())
    throw std::invalid_argument("schur_psd_check: shape mismatch");
  if (linalg::min_eig(c) <= 0.0)
    throw std::invalid_argument("schur_psd_check: C is not positive definite");

  // route 1: the assembled block matrix
  const std::size_t na = a.rows(), nc = c.rows();
  Mat full(na + nc, na + nc);
  full.set_block(0, 0, a);
  full.set_block(0, na, b);
  full.set_block(na, 0, b.transposed());
  full.set_block(na, na, c);
  const bool direct = linalg::min_eig(full) >= -tol;

  // route 2: A - B C^-1 B^T
  auto cinv = linalg::inverse(c);
  if (!cinv) throw std::invalid_argument("schur_psd_check: C is singular");
  Mat sc = a - b * (*cinv) * b.transposed();
  sc.symmetrize();
  const bool via_schur = linalg::min_eig(sc) >= -tol;

  if (direct != via_schur)
    throw std::runtime_error("schur_psd_check: routes disagree near the boundary");
  return direct;
}

void Block::add_const(std::size_t r, std::size_t c, double v) {
  if (r > c) std::swap(r, c);
  constant(r, c) += v;
  if (r != c) constant(c, r) += v;
}

void Block::add_term(std::size_t r, std::size_t c, int scalar_id, double coef) {
  if (scalar_id < 0 || coef == 0.0) return;  // fixed-zero entries contribute nothing
  if (r > c) std::swap(r, c);
  terms.push_back(Term{static_cast<std::uint16_t>(r), static_cast<std::uint16_t>(c),
                       scalar_id, coef});
}

int LmiProblem::add_symmetric(const std::string& name, std::size_t dim,
                              bool elementwise_positive) {
  MatrixVariable v;
  v.name = name;
  v.kind = VarKind::kSymmetric;
  v.rows = v.cols = dim;
  v.active_dim = dim;
  v.base = static_cast<int>(next_);
  v.count = dim * (dim + 1) / 2;
  v.elementwise_positive = elementwise_positive;
  next_ += v.count;
  vars_.push_back(v);
  return static_cast<int>(vars_.size()) - 1;
}

int LmiProblem::add_symmetric_corner(const std::string& name, std::size_t dim,
                                     std::size_t active_dim) {
  if (active_dim > dim)
    throw std::invalid_argument("add_symmetric_corner: active_dim > dim");
  MatrixVariable v;
  v.name = name;
  v.kind = VarKind::kSymmetric;
  v.rows = v.cols = dim;
  v.active_dim = active_dim;
  v.base = static_cast<int>(next_);
  v.count = active_dim * (active_dim + 1) / 2;
  next_ += v.count;
  vars_.push_back(v);
  return static_cast<int>(vars_.size()) - 1;
}

int LmiProblem::add_rectangular(const std::string& name, std::size_t rows,
                                std::size_t cols) {
  MatrixVariable v;
  v.name = name;
  v.kind = VarKind::kRectangular;
  v.rows = rows;
  v.cols = cols;
  v.base = static_cast<int>(next_);
  v.count = rows * cols;
  next_ += v.count;
  vars_.push_back(v);
  return static_cast<int>(vars_.size()) - 1;
}

int LmiProblem::add_scalar(const std::string& name) {
  MatrixVariable v;
  v.name = name;
  v.kind = VarKind::kScalar;
  v.base = static_cast<int>(next_);
  v.count = 1;
  next_ += 1;
  vars_.push_back(v);
  return static_cast<int>(vars_.size()) - 1;
}

int LmiProblem::entry(int var, std::size_t i, std::size_t j) const {
  const MatrixVariable& v = vars_.at(static_cast<std::size_t>(var));
  switch (v.kind) {
    case VarKind::kScalar:
      return v.base;
    case VarKind::kRectangular:
      return v.base + static_cast<int>(i * v.cols + j);
    case VarKind::kSymmetric: {
      if (i > j) std::swap(i, j);
      if (j >= v.active_dim) return -1;  // fixed zero
      return v.base + static_cast<int>(j * (j + 1) / 2 + i);
    }
  }
  return -1;
}

Block& LmiProblem::add_block(std::size_t dim, Sense sense, std::string label) {
  Block b;
  b.dim = dim;
  b.sense = sense;
  b.label = std::move(label);
  b.constant = Mat(dim, dim);
  blocks_.push_back(std::move(b));
  return blocks_.back();
}

Mat LmiProblem::block_value(const Block& b, const Vec& x) const {
  Mat m = b.constant;
  for (const auto& t : b.terms) {
    const double v = t.coef * x[static_cast<std::size_t>(t.var)];
    m(t.r, t.c) += v;
    if (t.r != t.c) m(t.c, t.r) += v;
  }
  return m;
}

double LmiProblem::block_margin(const Block& b, const Vec& x) const {
  Mat m = block_value(b, x);
  if (b.sense == Sense::kNsd) m *= -1.0;
  return linalg::min_eig(m);
}

Mat LmiProblem::value(int var, const Vec& x) const {
  const MatrixVariable& v = vars_.at(static_cast<std::size_t>(var));
  Mat m(v.rows, v.cols);
  for (std::size_t i = 0; i < v.rows; ++i)
    for (std::size_t j = 0; j < v.cols; ++j) {
      const int id = entry(var, i, j);
      m(i, j) = (id >= 0) ? x[static_cast<std::size_t>(id)] : 0.0;
    }
  return m;
}

}  // namespace pwapass::lmi
