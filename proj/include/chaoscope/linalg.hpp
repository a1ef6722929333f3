#pragma once

#include "chaoscope/common.hpp"

#include <cmath>
#include <type_traits>

namespace chaoscope {

template <typename Derived>
double inf_norm(const Eigen::MatrixBase<Derived>& a) {
  if (a.size() == 0) return 0.0;
  return a.cwiseAbs().rowwise().sum().maxCoeff();
}

template <typename Derived>
double inf_norm(const Eigen::SparseMatrixBase<Derived>& a) {
  Vec rows = Vec::Zero(a.rows());
  const auto& m = a.derived();
  for (Index k = 0; k < m.outerSize(); ++k)
    for (typename Derived::InnerIterator it(m, k); it; ++it) rows(it.row()) += std::abs(it.value());
  return rows.size() ? rows.maxCoeff() : 0.0;
}

// e^{tau A} X by a scaled, truncated Taylor series. The interval is split so
// that each step has |h| ||A||_inf <= 1, and each step's series stops once the
// latest term is below tol relative to the partial sum (max-abs norm).
template <typename MatrixA, typename DerivedX>
Mat expm_action(const MatrixA& a, double tau, const Eigen::MatrixBase<DerivedX>& x, double tol = 1e-12) {
  Mat result = x;
  const double norm = std::abs(tau) * inf_norm(a);
  if (norm == 0.0) return result;
  const int steps = std::max(1, static_cast<int>(std::ceil(norm)));
  const double h = tau / steps;
  for (int s = 0; s < steps; ++s) {
    Mat term = result;
    for (int k = 1; k <= 200; ++k) {
      term = (h / k) * (a * term);
      result += term;
      const double tn = term.cwiseAbs().maxCoeff();
      if (tn <= tol * result.cwiseAbs().maxCoeff() || tn == 0.0) break;
    }
  }
  return result;
}

// e^{tau A} as a dense matrix.
template <typename MatrixA>
Mat expm(const MatrixA& a, double tau, double tol = 1e-12) {
  return expm_action(a, tau, Mat::Identity(a.rows(), a.cols()), tol);
}

// Operator 2-norm by power iteration on A^T A, stopped on the eigen-residual.
template <typename MatrixA>
double op_norm(const MatrixA& a, double tol = 1e-10, int max_iter = 200000) {
  const Index n = a.cols();
  if (n == 0) return 0.0;
  Vec v = Vec::Ones(n) / std::sqrt(static_cast<double>(n));
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const Vec av = a * v;
    const Vec w = a.transpose() * av;
    lambda = av.squaredNorm();
    if (lambda == 0.0) {
      // v lies in the kernel; restart from a vector with full support if A is nonzero.
      if (it == 0) {
        v = Vec::LinSpaced(n, 1.0, 2.0).normalized();
        continue;
      }
      return 0.0;
    }
    const double res = (w - lambda * v).norm();
    const double wn = w.norm();
    v = w / wn;
    if (res <= tol * lambda) break;
  }
  const Vec av = a * v;
  return std::sqrt(std::max(lambda, av.squaredNorm()));
}

namespace detail {

template <typename F, typename T>
T simpson_rec(F& f, double a, double b, const T& fa, const T& fm, const T& fb, const T& whole, double abs_tol,
              int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const T flm = f(lm), frm = f(rm);
  const T left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const T right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const T diff = left + right - whole;
  double err;
  if constexpr (std::is_arithmetic_v<T>)
    err = std::abs(diff);
  else
    err = diff.cwiseAbs().maxCoeff();
  if (depth <= 0 || err <= 15.0 * abs_tol) return left + right + diff / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * abs_tol, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * abs_tol, depth - 1);
}

}  // namespace detail

// Adaptive Simpson quadrature for scalar or Eigen-vector valued integrands.
// The absolute target is rel_tol times a coarse estimate of the integral.
template <typename F>
auto adaptive_simpson(F f, double a, double b, double rel_tol, int max_depth = 40) {
  using T = std::decay_t<decltype(f(a))>;
  if (a == b) return T(f(a) * 0.0);
  const double m = 0.5 * (a + b);
  const T fa = f(a), fm = f(m), fb = f(b);
  const T whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  double scale;
  if constexpr (std::is_arithmetic_v<T>)
    scale = std::abs(whole);
  else
    scale = whole.cwiseAbs().maxCoeff();
  const double abs_tol = rel_tol * std::max(scale, 1e-300);
  return detail::simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

}  // namespace chaoscope
