#pragma once

#include "chaoscope/constants.hpp"
#include "chaoscope/matrix_core.hpp"

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace chaoscope {

// Linear-drift system dX = xi X dt + dB from X_0 = 0, whose law at time T is
// centered Gaussian with covariance Sigma_T = int_0^T e^{s xi} e^{s xi^T} ds.
// The independent projection is a Brownian motion, so the reference law is N(0, T I).
struct GaussianModel {
  InteractionMatrix xi;
  double T = 0.0;
  double rho = 0.0;  // operator norm of xi
  Mat sigma;
  int series_order = 0;
  double tail_bound = 0.0;
};

struct EntropyPair {
  SubsetState v;
  double exact = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool in_window = true;  // T <= log 2 / (2 rho), where the lower bound is asserted
};

inline double h_function(double x) { return x - std::log1p(x); }

// Gamma_m = sum_r binom(m, r) xi^r (xi^T)^{m-r}
template <typename Derived>
Mat gamma_m(const Eigen::MatrixBase<Derived>& xi, int m) {
  require(m >= 0, ErrorCode::invalid_argument, "order must be nonnegative");
  const Index n = xi.rows();
  std::vector<Mat> p(static_cast<std::size_t>(m + 1)), q(static_cast<std::size_t>(m + 1));
  p[0] = q[0] = Mat::Identity(n, n);
  for (int r = 1; r <= m; ++r) {
    p[static_cast<std::size_t>(r)] = p[static_cast<std::size_t>(r - 1)] * xi;
    q[static_cast<std::size_t>(r)] = q[static_cast<std::size_t>(r - 1)] * xi.transpose();
  }
  Mat g = Mat::Zero(n, n);
  double binom = 1.0;
  for (int r = 0; r <= m; ++r) {
    g += binom * p[static_cast<std::size_t>(r)] * q[static_cast<std::size_t>(m - r)];
    binom = binom * (m - r) / (r + 1);
  }
  return g;
}

// Mean of Tr((A^v)^2) over the k-subsets v of [n], A symmetric.
template <typename Derived>
double avg_trace_sq(const Eigen::MatrixBase<Derived>& a, int k) {
  const double n = static_cast<double>(a.rows());
  require(k >= 1 && k <= a.rows(), ErrorCode::invalid_argument, "k must lie in [1, n]");
  const double diag_sq = a.diagonal().squaredNorm();
  if (a.rows() == 1) return diag_sq;
  const double w1 = k * (k - 1.0) / (n * (n - 1.0));
  const double w2 = k * (n - k) / (n * (n - 1.0));
  return w1 * a.squaredNorm() + w2 * diag_sq;
}

// Relative entropy of N(0, cov1) with respect to N(0, cov0).
template <typename D0, typename D1>
double gaussian_kl(const Eigen::MatrixBase<D0>& cov0, const Eigen::MatrixBase<D1>& cov1) {
  require(cov0.rows() == cov0.cols() && cov1.rows() == cov1.cols() && cov0.rows() == cov1.rows(),
          ErrorCode::length_mismatch, "covariances must be square and of equal size");
  const Mat c0 = cov0, c1 = cov1;
  const double scale = std::max(c0.cwiseAbs().maxCoeff(), c1.cwiseAbs().maxCoeff());
  require((c0 - c0.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale &&
              (c1 - c1.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
          ErrorCode::invalid_covariance, "covariances must be symmetric");
  const Eigen::LLT<Mat> l0(c0), l1(c1);
  require(l0.info() == Eigen::Success && l1.info() == Eigen::Success, ErrorCode::invalid_covariance,
          "covariances must be positive definite");
  const double logdet0 = 2.0 * l0.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double logdet1 = 2.0 * l1.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double tr = l0.solve(c1).trace();
  return 0.5 * (tr - static_cast<double>(c0.rows()) + logdet0 - logdet1);
}

double operator_norm(const InteractionMatrix& xi);

// Series evaluation of Sigma_T, summed until the certified tail
// sum_{m>M} T^m (2 rho)^m / (m+1)! (times T) drops below tol.
GaussianModel sigma_T(const InteractionMatrix& xi, double T, double tol = 1e-14);
// Composite Simpson quadrature of e^{s xi} e^{s xi^T} on `intervals` panels.
Mat sigma_T_quadrature(const InteractionMatrix& xi, double T, int intervals = 400);

double exact_entropy(const GaussianModel& model, const SubsetState& v);
EntropyPair entropy_bounds(const GaussianModel& model, const SubsetState& v);
double small_time_window(double rho);

// D_T(xi) = sum_i (sum_{m>=2} T^m/(m+1)! (xi^m)_ii)^2
double d_T(const InteractionMatrix& xi, double T, double tol = 1e-15);

struct AverageEntropy {
  int k = 0;
  double T = 0.0;
  std::string mode;
  double value = 0.0;
  std::optional<double> std_error;
  std::int64_t count = 0;
};

inline constexpr std::int64_t enumerate_limit = 1000000;

AverageEntropy avg_entropy_enumerate(const GaussianModel& model, int k, int threads = 1);
AverageEntropy avg_entropy_sample(const GaussianModel& model, int k, std::int64_t reps, std::uint64_t seed,
                                  int threads = 1);

// Two-sided bracket for the k-subset average entropy, with explicit constants.
struct AverageSandwich {
  double lower = 0.0;
  double upper = 0.0;
  double w1 = 0.0, w2 = 0.0;
  double sum_sq = 0.0;      // sum_ij xi_ij^2
  double row_sq_sq = 0.0;   // sum_i (sum_j xi_ij^2)^2
  double d = 0.0;           // D_T(xi)
};
AverageSandwich average_sandwich(const GaussianModel& model, int k);

// Upper coefficient c with h(x) <= c x^2 on [e^{-2 rho T} - 1, infinity).
double h_upper_coefficient(double rho, double T);

// Constants under which the percolation bound dominates the Gaussian entropies:
// sigma = 1, gamma = 2T (quadratic transport inequality of N(0, tI), t <= T),
// M = max_i (Sigma_T)_ii, C0 = 0.
ModelConstants certification_constants(const GaussianModel& model);

void write_entropy_table(std::ostream& out, const std::vector<EntropyPair>& rows);
std::string average_json(const AverageEntropy& a);

}  // namespace chaoscope
