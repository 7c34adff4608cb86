#include "pwapass/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pwapass/rng.hpp"

namespace pwapass::model {

NonlinearSystemSpec::NonlinearSystemSpec(std::size_t n, std::size_t m,
                                         std::size_t s,
                                         std::vector<expr::Expression> f,
                                         std::vector<expr::Expression> h,
                                         Mat B1, Mat D1, Mat B2, Mat D2)
    : n_(n), m_(m), s_(s), f_(std::move(f)), h_(std::move(h)),
      B1_(std::move(B1)), D1_(std::move(D1)), B2_(std::move(B2)),
      D2_(std::move(D2)) {
  if (f_.size() != n_) throw std::invalid_argument("system: f must have n components");
  if (h_.size() != s_) throw std::invalid_argument("system: h must have s components");
  auto check = [&](const Mat& M, std::size_t r, std::size_t c, const char* name) {
    if (M.rows() != r || M.cols() != c)
      throw std::invalid_argument(std::string("system: bad shape for ") + name);
  };
  check(B1_, n_, m_, "B1");
  check(D1_, n_, s_, "D1");
  check(B2_, s_, m_, "B2");
  check(D2_, s_, s_, "D2");
  for (const auto& ex : f_)
    if (ex.max_variable() > static_cast<int>(n_))
      throw std::invalid_argument("system: f references a variable beyond x" +
                                  std::to_string(n_));
  for (const auto& ex : h_)
    if (ex.max_variable() > static_cast<int>(n_))
      throw std::invalid_argument("system: h references a variable beyond x" +
                                  std::to_string(n_));

  const Vec zero(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i)
    if (std::abs(f_[i].evaluate(zero)) > 1e-12)
      throw std::invalid_argument("system: f(0) != 0 in component " +
                                  std::to_string(i + 1));
  for (std::size_t i = 0; i < s_; ++i)
    if (std::abs(h_[i].evaluate(zero)) > 1e-12)
      throw std::invalid_argument("system: h(0) != 0 in component " +
                                  std::to_string(i + 1));

  df_.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    df_[i].reserve(n_);
    for (std::size_t j = 0; j < n_; ++j)
      df_[i].push_back(f_[i].differentiate(static_cast<int>(j)).fold());
  }
  dh_.resize(s_);
  for (std::size_t i = 0; i < s_; ++i) {
    dh_[i].reserve(n_);
    for (std::size_t j = 0; j < n_; ++j)
      dh_[i].push_back(h_[i].differentiate(static_cast<int>(j)).fold());
  }
}

Vec NonlinearSystemSpec::eval_f(const Vec& x) const {
  Vec out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = f_[i].evaluate(x);
  return out;
}

Vec NonlinearSystemSpec::eval_h(const Vec& x) const {
  Vec out(s_);
  for (std::size_t i = 0; i < s_; ++i) out[i] = h_[i].evaluate(x);
  return out;
}

Mat NonlinearSystemSpec::jacobian_f(const Vec& x) const {
  Mat J(n_, n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) J(i, j) = df_[i][j].evaluate(x);
  return J;
}

Mat NonlinearSystemSpec::jacobian_h(const Vec& x) const {
  Mat J(s_, n_);
  for (std::size_t i = 0; i < s_; ++i)
    for (std::size_t j = 0; j < n_; ++j) J(i, j) = dh_[i][j].evaluate(x);
  return J;
}

Mat Cell::ebar() const {
  Mat eb(E.rows(), E.cols() + 1);
  for (std::size_t i = 0; i < E.rows(); ++i) {
    for (std::size_t j = 0; j < E.cols(); ++j) eb(i, j) = E(i, j);
    eb(i, E.cols()) = e[i];
  }
  return eb;
}

bool Cell::contains(const Vec& x, double tol) const {
  for (std::size_t i = 0; i < E_mem.rows(); ++i) {
    double v = e_mem[i];
    for (std::size_t j = 0; j < E_mem.cols(); ++j) v += E_mem(i, j) * x[j];
    if (v < -tol) return false;
  }
  return true;
}

std::string Cell::describe() const {
  std::ostringstream os;
  if (axis >= 0) {
    os << lo << " <= x" << (axis + 1) << " < " << hi;
  } else {
    os << "cell #" << index << " (" << E_mem.rows() << " rows)";
  }
  if (contains_origin) os << " [origin]";
  return os.str();
}

PolyhedralPartition::PolyhedralPartition(std::vector<Cell> cells, Mat box)
    : cells_(std::move(cells)), box_(std::move(box)) {
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    cells_[i].index = static_cast<int>(i);
    if (cells_[i].contains_origin) {
      for (double v : cells_[i].e)
        if (v != 0.0)
          throw std::invalid_argument(
              "partition: origin cell with nonzero certificate offset");
    }
  }
}

std::optional<std::size_t> PolyhedralPartition::locate(const Vec& x) const {
  for (std::size_t i = 0; i < cells_.size(); ++i)
    if (cells_[i].contains(x)) return i;
  return std::nullopt;
}

std::size_t PolyhedralPartition::coverage_violations(std::size_t samples,
                                                     std::uint64_t seed) const {
  Rng rng(seed);
  const std::size_t n = box_.rows();
  std::size_t misses = 0;
  for (std::size_t k = 0; k < samples; ++k) {
    Vec x(n);
    for (std::size_t j = 0; j < n; ++j) x[j] = rng.uniform(box_(j, 0), box_(j, 1));
    if (!locate(x)) ++misses;
  }
  return misses;
}

PolyhedralPartition grid_partition(int axis, const std::vector<double>& breakpoints,
                                   const Mat& box) {
  if (breakpoints.size() < 2)
    throw std::invalid_argument("grid_partition: need at least two breakpoints");
  for (std::size_t i = 1; i < breakpoints.size(); ++i)
    if (!(breakpoints[i - 1] < breakpoints[i]))
      throw std::invalid_argument("grid_partition: breakpoints must be strictly increasing");
  const std::size_t n = box.rows();
  if (axis < 0 || static_cast<std::size_t>(axis) >= n)
    throw std::invalid_argument("grid_partition: axis out of range");
  const double first = breakpoints.front(), last = breakpoints.back();
  if (first < 0.0 && last > 0.0) {
    bool has_zero = false;
    for (double b : breakpoints)
      if (b == 0.0) has_zero = true;
    if (!has_zero)
      throw std::invalid_argument(
          "grid_partition: region straddles the origin, 0 must be a breakpoint");
  }

  std::vector<Cell> cells;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    const double lo = breakpoints[i], hi = breakpoints[i + 1];
    Cell c;
    c.axis = axis;
    c.lo = lo;
    c.hi = hi;
    c.contains_origin = (lo == 0.0) || (hi == 0.0);

    // membership: lo <= x_axis <= hi (half-open realized by locate's
    // lowest-index tie-break)
    c.E_mem = Mat(2, n);
    c.e_mem = Vec(2, 0.0);
    c.E_mem(0, axis) = 1.0;
    c.e_mem[0] = -lo;
    c.E_mem(1, axis) = -1.0;
    c.e_mem[1] = hi;

    if (c.contains_origin) {
      // only the zero-offset side survives in the certificate rows
      c.E = Mat(1, n);
      c.e = Vec(1, 0.0);
      c.E(0, axis) = (lo == 0.0) ? 1.0 : -1.0;
    } else {
      c.E = c.E_mem;
      c.e = c.e_mem;
    }
    cells.push_back(std::move(c));
  }
  return PolyhedralPartition(std::move(cells), box);
}

Vec lift(const Vec& x) {
  Vec xb = x;
  xb.push_back(1.0);
  return xb;
}

}  // namespace pwapass::model
