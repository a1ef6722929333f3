#include "chaoscope/gaussian.hpp"

#include "chaoscope/linalg.hpp"
#include "chaoscope/rng.hpp"

#include <json.hpp>

#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

namespace chaoscope {

double operator_norm(const InteractionMatrix& xi) { return op_norm(xi.dense()); }

GaussianModel sigma_T(const InteractionMatrix& xi, double T, double tol) {
  require(T > 0.0 && std::isfinite(T), ErrorCode::invalid_argument, "horizon T must be positive and finite");
  require(tol > 0.0, ErrorCode::invalid_argument, "tolerance must be positive");
  GaussianModel g;
  g.xi = xi;
  g.T = T;
  const Mat x = xi.dense();
  const Index n = x.rows();
  g.rho = op_norm(x);
  const double y = 2.0 * g.rho * T;

  // Pick M so that sum_{m>M} y^m/(m+1)! <= tol; beyond m + 3 > y the terms
  // decay at least geometrically with ratio y/(m+3).
  int M = 0;
  double term = 1.0;  // y^M / (M+1)!
  double tail = 0.0;
  for (M = 0; M < 400; ++M) {
    const double next = term * y / (M + 2);
    const double ratio = y / (M + 3);
    tail = ratio < 1.0 ? next / (1.0 - ratio) : std::numeric_limits<double>::infinity();
    if (M >= 1 && tail <= tol) break;
    term = next;
  }
  if (y == 0.0) {
    M = 0;
    tail = 0.0;
  }
  g.series_order = M;
  g.tail_bound = tail;

  // T^m/(m+1)! Gamma_m = T^m/(m+1) sum_r (xi^r/r!)(xi^T)^{m-r}/(m-r)!
  std::vector<Mat> p(static_cast<std::size_t>(M + 1)), q(static_cast<std::size_t>(M + 1));
  p[0] = q[0] = Mat::Identity(n, n);
  for (int r = 1; r <= M; ++r) {
    p[static_cast<std::size_t>(r)] = p[static_cast<std::size_t>(r - 1)] * x / r;
    q[static_cast<std::size_t>(r)] = q[static_cast<std::size_t>(r - 1)] * x.transpose() / r;
  }
  Mat s = Mat::Identity(n, n);
  double tm = 1.0;
  for (int m = 1; m <= M; ++m) {
    tm *= T;
    Mat gm = Mat::Zero(n, n);
    for (int r = 0; r <= m; ++r) gm += p[static_cast<std::size_t>(r)] * q[static_cast<std::size_t>(m - r)];
    s += tm / (m + 1) * gm;
  }
  s *= T;
  g.sigma = 0.5 * (s + s.transpose());
  return g;
}

Mat sigma_T_quadrature(const InteractionMatrix& xi, double T, int intervals) {
  require(T > 0.0, ErrorCode::invalid_argument, "horizon T must be positive");
  require(intervals >= 2, ErrorCode::invalid_argument, "need at least two panels");
  if (intervals % 2) ++intervals;
  const Mat x = xi.dense();
  const double h = T / intervals;
  Mat acc = Mat::Zero(x.rows(), x.cols());
  for (int k = 0; k <= intervals; ++k) {
    const Mat e = expm(x, k * h);
    const double w = (k == 0 || k == intervals) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc += w * e * e.transpose();
  }
  return acc * (h / 3.0);
}

namespace {

Vec shifted_eigenvalues(const GaussianModel& model, const SubsetState& v) {
  require(!v.empty(), ErrorCode::empty_subset, "entropy needs a nonempty subset");
  require(v.universe() == model.sigma.rows(), ErrorCode::length_mismatch, "subset universe differs from model size");
  const auto& idx = v.members();
  const auto k = static_cast<Index>(idx.size());
  Mat b(k, k);
  for (Index a = 0; a < k; ++a)
    for (Index c = 0; c < k; ++c) b(a, c) = model.sigma(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(c)]);
  b /= model.T;
  b -= Mat::Identity(k, k);
  const Eigen::SelfAdjointEigenSolver<Mat> es(b, Eigen::EigenvaluesOnly);
  require(es.info() == Eigen::Success, ErrorCode::invalid_covariance, "eigenvalue solver failed");
  const Vec lam = es.eigenvalues();
  require(lam.minCoeff() > -1.0, ErrorCode::invalid_covariance, "covariance submatrix is not positive definite");
  return lam;
}

double entropy_from_eigs(const Vec& lam) {
  double s = 0.0;
  for (Index i = 0; i < lam.size(); ++i) s += h_function(lam(i));
  return 0.5 * s;
}

std::vector<std::vector<int>> k_subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> c(static_cast<std::size_t>(k));
  std::iota(c.begin(), c.end(), 0);
  for (;;) {
    out.push_back(c);
    int i = k - 1;
    while (i >= 0 && c[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++c[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

double binomial(int n, int k) {
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

}  // namespace

double exact_entropy(const GaussianModel& model, const SubsetState& v) {
  return entropy_from_eigs(shifted_eigenvalues(model, v));
}

double small_time_window(double rho) {
  return rho > 0.0 ? std::log(2.0) / (2.0 * rho) : std::numeric_limits<double>::infinity();
}

EntropyPair entropy_bounds(const GaussianModel& model, const SubsetState& v) {
  const Vec lam = shifted_eigenvalues(model, v);
  const double tr = lam.squaredNorm();
  EntropyPair e;
  e.v = v;
  e.exact = entropy_from_eigs(lam);
  e.lower = tr / 6.0;
  e.upper = std::exp(6.0 * model.rho * model.T) * tr;
  e.in_window = model.T <= small_time_window(model.rho);
  return e;
}

double d_T(const InteractionMatrix& xi, double T, double tol) {
  require(T > 0.0, ErrorCode::invalid_argument, "horizon T must be positive");
  const Mat x = xi.dense();
  const double rho = op_norm(x);
  const double y = rho * T;
  Vec diag = Vec::Zero(x.rows());
  Mat pw = x;
  double c = T / 2.0;  // T^m/(m+1)! at m = 1
  for (int m = 2; m < 400; ++m) {
    pw = pw * x;
    c *= T / (m + 1);
    diag += c * pw.diagonal();
    // remaining terms bounded entrywise by sum_{j>m} y^j/(j+1)!
    const double next = c * rho * std::pow(rho, m) * T / (m + 2);
    const double ratio = y / (m + 3);
    if (ratio < 1.0 && next / (1.0 - ratio) <= tol) break;
    if (pw.cwiseAbs().maxCoeff() == 0.0) break;
  }
  return diag.squaredNorm();
}

AverageEntropy avg_entropy_enumerate(const GaussianModel& model, int k, int threads) {
  const int n = static_cast<int>(model.sigma.rows());
  require(k >= 1 && k <= n, ErrorCode::invalid_argument, "k must lie in [1, n]");
  require(binomial(n, k) <= static_cast<double>(enumerate_limit), ErrorCode::engine_too_large,
          "too many subsets to enumerate; use sample mode");
  const auto subsets = k_subsets(n, k);
  std::vector<double> vals(subsets.size());
  parallel_for(subsets.size(), threads,
               [&](std::size_t i) { vals[i] = exact_entropy(model, SubsetState(n, subsets[i])); });
  AverageEntropy a;
  a.k = k;
  a.T = model.T;
  a.mode = "enumerate";
  a.count = static_cast<std::int64_t>(vals.size());
  a.value = pairwise_sum(vals) / static_cast<double>(vals.size());
  return a;
}

AverageEntropy avg_entropy_sample(const GaussianModel& model, int k, std::int64_t reps, std::uint64_t seed,
                                  int threads) {
  const int n = static_cast<int>(model.sigma.rows());
  require(k >= 1 && k <= n, ErrorCode::invalid_argument, "k must lie in [1, n]");
  require(reps >= 2, ErrorCode::invalid_argument, "need at least two samples");
  std::vector<double> vals(static_cast<std::size_t>(reps));
  parallel_for(vals.size(), threads, [&](std::size_t r) {
    Stream rng(seed, r);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = 0; i < k; ++i) {
      const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    perm.resize(static_cast<std::size_t>(k));
    vals[r] = exact_entropy(model, SubsetState(n, perm));
  });
  const double mean = pairwise_sum(vals) / static_cast<double>(reps);
  std::vector<double> dev(vals.size());
  for (std::size_t r = 0; r < vals.size(); ++r) dev[r] = (vals[r] - mean) * (vals[r] - mean);
  AverageEntropy a;
  a.k = k;
  a.T = model.T;
  a.mode = "sample";
  a.count = reps;
  a.value = mean;
  a.std_error = std::sqrt(pairwise_sum(dev) / static_cast<double>(reps - 1) / static_cast<double>(reps));
  return a;
}

AverageSandwich average_sandwich(const GaussianModel& model, int k) {
  const Mat x = model.xi.dense();
  const double n = static_cast<double>(x.rows());
  require(k >= 1 && k <= x.rows(), ErrorCode::invalid_argument, "k must lie in [1, n]");
  const double T = model.T, rho = model.rho;
  AverageSandwich s;
  s.w1 = x.rows() > 1 ? k * (k - 1.0) / (n * (n - 1.0)) : 0.0;
  s.w2 = x.rows() > 1 ? k * (n - k) / (n * (n - 1.0)) : 0.0;
  s.sum_sq = x.squaredNorm();
  s.row_sq_sq = x.rowwise().squaredNorm().squaredNorm();
  s.d = d_T(model.xi, T);
  const double T2 = T * T, T4 = T2 * T2;
  s.lower = (T2 / 2.0 * s.sum_sq * s.w1 + (4.0 * s.d + T4 / 9.0 * s.row_sq_sq) * s.w2) / 6.0;
  const double e4 = std::exp(4.0 * rho * T);
  s.upper = std::exp(6.0 * rho * T) *
            (16.0 * T2 * e4 * s.sum_sq * s.w1 + (8.0 * s.d + 32.0 * T4 * e4 * s.row_sq_sq) * s.w2);
  return s;
}

double h_upper_coefficient(double rho, double T) {
  const double alpha = std::exp(-2.0 * rho * T) - 1.0;
  const double alpha_minus = std::max(-alpha, 0.0);
  return 0.5 + alpha_minus / (3.0 * std::pow(1.0 + alpha, 3));
}

ModelConstants certification_constants(const GaussianModel& model) {
  ModelConstants c;
  c.sigma = 1.0;
  c.gamma = 2.0 * model.T;
  c.M = model.sigma.diagonal().maxCoeff();
  c.C0 = 0.0;
  c.T = model.T;
  return c;
}

void write_entropy_table(std::ostream& out, const std::vector<EntropyPair>& rows) {
  out << "v,exact,lower,upper\n" << std::setprecision(17);
  for (const auto& r : rows) out << r.v.to_string() << ',' << r.exact << ',' << r.lower << ',' << r.upper << '\n';
}

std::string average_json(const AverageEntropy& a) {
  nlohmann::json j{{"k", a.k}, {"T", a.T}, {"mode", a.mode}, {"value", a.value}, {"count", a.count}};
  if (a.std_error) j["stderr"] = *a.std_error;
  return j.dump();
}

}  // namespace chaoscope
