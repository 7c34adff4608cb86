#include "pwapass/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace pwapass::linalg {

void eigh(const Mat& a, Vec& evals, Mat* evecs) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("eigh: matrix not square");
  Mat s = a;
  s.symmetrize();
  Mat v = Mat::identity(n);

  // cyclic Jacobi with threshold sweeps
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += s(p, q) * s(p, q);
    const double scale = s.max_abs();
    if (off <= (scale * scale) * 1e-32 + 1e-300) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = s(p, q);
        if (std::abs(apq) <= scale * 1e-17) continue;
        const double app = s(p, p), aqq = s(q, q);
        const double theta = 0.5 * (aqq - app) / apq;
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double skp = s(k, p), skq = s(k, q);
          s(k, p) = c * skp - sn * skq;
          s(k, q) = sn * skp + c * skq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double spk = s(p, k), sqk = s(q, k);
          s(p, k) = c * spk - sn * sqk;
          s(q, k) = sn * spk + c * sqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  evals.resize(n);
  for (std::size_t i = 0; i < n; ++i) evals[i] = s(i, i);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return evals[i] < evals[j]; });
  Vec sorted(n);
  for (std::size_t i = 0; i < n; ++i) sorted[i] = evals[order[i]];
  evals = sorted;
  if (evecs) {
    *evecs = Mat(n, n);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) (*evecs)(i, j) = v(i, order[j]);
  }
}

double min_eig(const Mat& symmetric) {
  Vec ev;
  eigh(symmetric, ev);
  return ev.empty() ? 0.0 : ev.front();
}

double max_eig(const Mat& symmetric) {
  Vec ev;
  eigh(symmetric, ev);
  return ev.empty() ? 0.0 : ev.back();
}

double spectral_norm(const Mat& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  // Gram matrix on the smaller side; sigma_max = sqrt(lambda_max(M^T M)).
  Mat g;
  if (m.rows() >= m.cols()) {
    g = m.transposed() * m;
  } else {
    g = m * m.transposed();
  }
  const double l = max_eig(g);
  return l > 0.0 ? std::sqrt(l) : 0.0;
}

bool cholesky(Mat& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("cholesky: matrix not square");
  double scale = a.max_abs();
  if (scale == 0.0) return false;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j) - kernels::dot(&a(j, 0), &a(j, 0), j);
    if (d <= scale * 1e-300 || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    a(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      const double v = (a(i, j) - kernels::dot(&a(i, 0), &a(j, 0), j)) / ljj;
      a(i, j) = v;
    }
  }
  return true;
}

std::optional<Vec> cholesky_solve(Mat a, Vec b) {
  const std::size_t n = a.rows();
  if (!cholesky(a)) return std::nullopt;
  // forward: L y = b
  for (std::size_t i = 0; i < n; ++i) {
    b[i] = (b[i] - kernels::dot(&a(i, 0), b.data(), i)) / a(i, i);
  }
  // backward: L^T x = y
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= a(k, ii) * b[k];
    b[ii] = s / a(ii, ii);
  }
  return b;
}

namespace {
bool lu_factor(Mat& a, std::vector<std::size_t>& piv) {
  const std::size_t n = a.rows();
  piv.resize(n);
  std::iota(piv.begin(), piv.end(), 0);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::abs(a(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(a(i, k)) > best) {
        best = std::abs(a(i, k));
        p = i;
      }
    }
    if (best < 1e-300) return false;
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
      std::swap(piv[k], piv[p]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double m = a(i, k) / a(k, k);
      a(i, k) = m;
      if (m != 0.0) kernels::axpy(-m, &a(k, k + 1), &a(i, k + 1), n - k - 1);
    }
  }
  return true;
}
}  // namespace

std::optional<Vec> lu_solve(Mat a, Vec b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n)
    throw std::invalid_argument("lu_solve: dimension mismatch");
  std::vector<std::size_t> piv;
  if (!lu_factor(a, piv)) return std::nullopt;
  Vec x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[piv[i]];
  for (std::size_t i = 1; i < n; ++i)
    x[i] -= kernels::dot(&a(i, 0), x.data(), i);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= a(ii, k) * x[k];
    x[ii] = s / a(ii, ii);
  }
  return x;
}

std::optional<Mat> inverse(const Mat& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("inverse: matrix not square");
  Mat lu = a;
  std::vector<std::size_t> piv;
  if (!lu_factor(lu, piv)) return std::nullopt;
  Mat inv(n, n);
  for (std::size_t col = 0; col < n; ++col) {
    Vec x(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) x[i] = (piv[i] == col) ? 1.0 : 0.0;
    for (std::size_t i = 1; i < n; ++i)
      x[i] -= kernels::dot(&lu(i, 0), x.data(), i);
    for (std::size_t ii = n; ii-- > 0;) {
      double s = x[ii];
      for (std::size_t k = ii + 1; k < n; ++k) s -= lu(ii, k) * x[k];
      x[ii] = s / lu(ii, ii);
    }
    for (std::size_t i = 0; i < n; ++i) inv(i, col) = x[i];
  }
  return inv;
}

double cond1(const Mat& a) {
  auto inv = inverse(a);
  if (!inv) return std::numeric_limits<double>::infinity();
  auto norm1 = [](const Mat& m) {
    double best = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < m.rows(); ++i) s += std::abs(m(i, j));
      best = std::max(best, s);
    }
    return best;
  };
  return norm1(a) * norm1(*inv);
}

}  // namespace pwapass::linalg
