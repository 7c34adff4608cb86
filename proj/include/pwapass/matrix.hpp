#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "pwapass/kernels.hpp"

namespace pwapass {

using Vec = std::vector<double>;

// Small dense row-major matrix. Everything in this project is desk scale
// (dimensions of a few dozen at most), so the representation favors clarity.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), d_(rows * cols, 0.0) {}
  Mat(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    d_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      assert(r.size() == cols_);
      d_.insert(d_.end(), r.begin(), r.end());
    }
  }

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Mat zero(std::size_t r, std::size_t c) { return Mat(r, c); }
  static Mat column(const Vec& v) {
    Mat m(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return d_.empty(); }

  double& operator()(std::size_t i, std::size_t j) {
    assert(i < rows_ && j < cols_);
    return d_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    assert(i < rows_ && j < cols_);
    return d_[i * cols_ + j];
  }

  double* data() { return d_.data(); }
  const double* data() const { return d_.data(); }

  Mat transposed() const {
    Mat t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Mat& operator+=(const Mat& o) {
    assert(rows_ == o.rows_ && cols_ == o.cols_);
    kernels::axpy(1.0, o.data(), data(), d_.size());
    return *this;
  }
  Mat& operator-=(const Mat& o) {
    assert(rows_ == o.rows_ && cols_ == o.cols_);
    kernels::axpy(-1.0, o.data(), data(), d_.size());
    return *this;
  }
  Mat& operator*=(double a) {
    kernels::scal(a, data(), d_.size());
    return *this;
  }

  friend Mat operator+(Mat a, const Mat& b) { return a += b; }
  friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
  friend Mat operator*(Mat a, double s) { return a *= s; }
  friend Mat operator*(double s, Mat a) { return a *= s; }

  friend Mat operator*(const Mat& a, const Mat& b) {
    assert(a.cols_ == b.rows_);
    Mat c(a.rows_, b.cols_);
    kernels::matmul(a.data(), b.data(), c.data(), a.rows_, a.cols_, b.cols_);
    return c;
  }

  Vec operator*(const Vec& v) const {
    assert(cols_ == v.size());
    Vec out(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
      out[i] = kernels::dot(&d_[i * cols_], v.data(), cols_);
    return out;
  }

  void set_block(std::size_t r0, std::size_t c0, const Mat& b) {
    for (std::size_t i = 0; i < b.rows_; ++i)
      for (std::size_t j = 0; j < b.cols_; ++j) (*this)(r0 + i, c0 + j) = b(i, j);
  }
  Mat block(std::size_t r0, std::size_t c0, std::size_t r, std::size_t c) const {
    Mat b(r, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
    return b;
  }

  void symmetrize() {
    assert(rows_ == cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = i + 1; j < cols_; ++j) {
        const double v = 0.5 * ((*this)(i, j) + (*this)(j, i));
        (*this)(i, j) = v;
        (*this)(j, i) = v;
      }
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : d_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  Vec d_;
};

inline double dot(const Vec& a, const Vec& b) {
  assert(a.size() == b.size());
  return kernels::dot(a.data(), b.data(), a.size());
}

inline double norm2(const Vec& v) {
  double s = kernels::dot(v.data(), v.data(), v.size());
  return std::sqrt(s);
}

}  // namespace pwapass
