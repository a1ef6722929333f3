#include "chaoscope/sde.hpp"

#include "chaoscope/rng.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace chaoscope {

DriftSpec DriftSpec::linear(int d) {
  DriftSpec s;
  s.kind = Kind::linear;
  s.name = "linear";
  s.d = d;
  return s;
}

DriftSpec DriftSpec::zero(int d) {
  DriftSpec s;
  s.d = d;
  return s;
}

DriftSpec DriftSpec::named(const std::string& name, int d) {
  require(d >= 1, ErrorCode::invalid_argument, "dimension must be positive");
  if (name == "linear") return linear(d);
  if (name == "zero") return zero(d);
  DriftSpec s;
  s.kind = Kind::custom;
  s.name = name;
  s.d = d;
  auto sin_f = [](double x) { return std::sin(x); };
  auto cos_f = [](double x) { return std::cos(x); };
  auto neg_sin = [](double x) { return -std::sin(x); };
  auto ident = [](double x) { return x; };
  auto one = [](double) { return 1.0; };
  auto neg = [](double x) { return -x; };
  if (name == "kuramoto" || name == "kuramoto-ou") {
    // sin(y - x) = cos(x) sin(y) - sin(x) cos(y)
    s.pair = {{cos_f, sin_f}, {neg_sin, cos_f}};
    s.bounded = true;
    if (name == "kuramoto-ou") s.b0 = neg;
  } else if (name == "relax") {
    s.b0 = neg;
    s.pair = {{one, ident}, {neg, one}};
  } else {
    throw Error(ErrorCode::invalid_argument, "unknown drift '" + name + "'");
  }
  return s;
}

std::vector<std::string> DriftSpec::registered() { return {"linear", "zero", "kuramoto", "kuramoto-ou", "relax"}; }

int SimConfig::steps() const {
  require(dt > 0.0 && T > 0.0, ErrorCode::invalid_argument, "dt and T must be positive");
  require(samples >= 1, ErrorCode::invalid_argument, "need at least one sample");
  require(sigma >= 0.0, ErrorCode::invalid_argument, "sigma must be nonnegative");
  const double r = T / dt;
  const auto n = static_cast<long long>(std::llround(r));
  require(n >= 1 && std::abs(r - static_cast<double>(n)) <= 1e-9 * r, ErrorCode::invalid_argument,
          "T must be an integer multiple of dt");
  return static_cast<int>(n);
}

namespace {

Mat apply_elementwise(const Mat& x, const DriftSpec::Fn& f) { return x.unaryExpr([&](double v) { return f(v); }); }

void draw_normals(Stream& rng, Mat& z) {
  for (Index i = 0; i < z.rows(); ++i)
    for (Index c = 0; c < z.cols(); ++c) z(i, c) = rng.normal();
}

void store(Mat& out, std::size_t s, const Mat& x) {
  for (Index i = 0; i < x.rows(); ++i)
    for (Index c = 0; c < x.cols(); ++c) out(static_cast<Index>(s), i * x.cols() + c) = x(i, c);
}

bool is_zero(const InteractionMatrix& xi) { return xi.nonzeros() == 0; }

bool is_stochastic(const InteractionMatrix& xi) {
  return ((xi.row_sums().array() - 1.0).abs() <= sum_tolerance).all();
}

}  // namespace

Mat simulate_particles(const InteractionMatrix& xi, const DriftSpec& drift, const SimConfig& cfg) {
  const int steps = cfg.steps();
  const Index n = xi.size(), d = drift.d;
  const Mat xd = xi.dense();
  const double noise = cfg.sigma * std::sqrt(cfg.dt);
  Mat out(cfg.samples, n * d);
  parallel_for(static_cast<std::size_t>(cfg.samples), cfg.threads, [&](std::size_t s) {
    Stream rng(cfg.seed, s);
    Mat x = Mat::Zero(n, d), z(n, d), drift_val(n, d);
    for (int k = 0; k < steps; ++k) {
      draw_normals(rng, z);
      switch (drift.kind) {
        case DriftSpec::Kind::linear: drift_val.noalias() = xd * x; break;
        case DriftSpec::Kind::zero: drift_val.setZero(); break;
        case DriftSpec::Kind::custom:
          drift_val = drift.b0 ? apply_elementwise(x, drift.b0) : Mat::Zero(n, d);
          for (const auto& [f, g] : drift.pair)
            drift_val.array() += apply_elementwise(x, f).array() * (xd * apply_elementwise(x, g)).array();
          break;
      }
      x += cfg.dt * drift_val + noise * z;
    }
    store(out, s, x);
  });
  return out;
}

Mat simulate_projection(const InteractionMatrix& xi, const DriftSpec& drift, const SimConfig& cfg) {
  const int steps = cfg.steps();
  const Index n = xi.size(), d = drift.d;
  const double noise = cfg.sigma * std::sqrt(cfg.dt);
  const auto S = static_cast<std::size_t>(cfg.samples);
  Mat out(cfg.samples, n * d);

  if (drift.kind != DriftSpec::Kind::custom) {
    // Linear drift: every E[Y^j] vanishes, so the projection is sigma * B.
    parallel_for(S, cfg.threads, [&](std::size_t s) {
      Stream rng(cfg.seed, s);
      Mat y = Mat::Zero(n, d), z(n, d);
      const Mat zero_drift = Mat::Zero(n, d);
      for (int k = 0; k < steps; ++k) {
        draw_normals(rng, z);
        y += cfg.dt * zero_drift + noise * z;
      }
      store(out, s, y);
    });
    return out;
  }

  const bool interacting = !is_zero(xi);
  require(!interacting || is_stochastic(xi), ErrorCode::not_applicable,
          "projection of a nonlinear drift needs row sums of xi equal to one (or xi = 0); "
          "otherwise the mean-field terms <Q^j_t, b> are not determined by a single McKean-Vlasov law");

  // All coordinates share one McKean-Vlasov law; the ensemble estimates it.
  std::vector<Stream> rng;
  rng.reserve(S);
  for (std::size_t s = 0; s < S; ++s) rng.emplace_back(cfg.seed, s);
  std::vector<Mat> y(S, Mat::Zero(n, d));
  std::vector<double> pool(S * static_cast<std::size_t>(n));
  const std::size_t K = drift.pair.size();
  for (int k = 0; k < steps; ++k) {
    // field(kk, c) = pooled mean of g_kk over all samples and particles, coordinate c
    Mat field = Mat::Zero(static_cast<Index>(K), d);
    if (interacting)
      for (std::size_t kk = 0; kk < K; ++kk)
        for (Index c = 0; c < d; ++c) {
          for (std::size_t s = 0; s < S; ++s)
            for (Index i = 0; i < n; ++i) pool[s * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = drift.pair[kk].second(y[s](i, c));
          field(static_cast<Index>(kk), c) = pairwise_sum(pool) / static_cast<double>(pool.size());
        }
    parallel_for(S, cfg.threads, [&](std::size_t s) {
      Mat z(n, d);
      draw_normals(rng[s], z);
      Mat drift_val = drift.b0 ? apply_elementwise(y[s], drift.b0) : Mat::Zero(n, d);
      for (std::size_t kk = 0; kk < K; ++kk) {
        const Mat fx = apply_elementwise(y[s], drift.pair[kk].first);
        for (Index c = 0; c < d; ++c)
          drift_val.col(c).array() += fx.col(c).array() * (interacting ? field(static_cast<Index>(kk), c) : 0.0);
      }
      y[s] += cfg.dt * drift_val + noise * z;
    });
  }
  for (std::size_t s = 0; s < S; ++s) store(out, s, y[s]);
  return out;
}

CovarianceEstimate sample_covariance(const Mat& samples) {
  const Index S = samples.rows(), p = samples.cols();
  require(S >= 2, ErrorCode::invalid_argument, "need at least two samples");
  CovarianceEstimate e;
  e.mean = samples.colwise().mean().transpose();
  const Mat xc = samples.rowwise() - e.mean.transpose();
  e.cov = xc.transpose() * xc / static_cast<double>(S - 1);
  e.std_error = Mat(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = i; j < p; ++j) {
      const Vec prod = xc.col(i).cwiseProduct(xc.col(j));
      const double m = prod.mean();
      const double var = (prod.array() - m).square().sum() / static_cast<double>(S - 1);
      e.std_error(i, j) = e.std_error(j, i) = std::sqrt(var / static_cast<double>(S));
    }
  return e;
}

Mat euler_covariance(const InteractionMatrix& xi, double dt, double T, double sigma) {
  SimConfig cfg;
  cfg.dt = dt;
  cfg.T = T;
  const int steps = cfg.steps();
  const Index n = xi.size();
  const Mat a = Mat::Identity(n, n) + dt * xi.dense();
  Mat s = Mat::Zero(n, n);
  for (int k = 0; k < steps; ++k) s = a * s * a.transpose() + sigma * sigma * dt * Mat::Identity(n, n);
  return s;
}

double gaussian_entropy_from_samples(const Mat& samples, const SubsetState& v, double T) {
  require(!v.empty(), ErrorCode::empty_subset, "entropy needs a nonempty subset");
  require(T > 0.0, ErrorCode::invalid_argument, "T must be positive");
  require(v.universe() == samples.cols(), ErrorCode::length_mismatch, "subset universe differs from sample width");
  const auto k = static_cast<Index>(v.size());
  require(samples.rows() >= 10 * k * k, ErrorCode::invalid_argument, "need at least 10 |v|^2 samples");
  Mat sub(samples.rows(), k);
  for (Index a = 0; a < k; ++a) sub.col(a) = samples.col(v.members()[static_cast<std::size_t>(a)]);
  const Mat cov = sample_covariance(sub).cov + 1e-8 * Mat::Identity(k, k);
  const Eigen::SelfAdjointEigenSolver<Mat> es(cov / T - Mat::Identity(k, k), Eigen::EigenvaluesOnly);
  const Vec lam = es.eigenvalues();
  require(lam.minCoeff() > -1.0, ErrorCode::invalid_covariance, "empirical covariance is not positive definite");
  double h = 0.0;
  for (Index i = 0; i < k; ++i) h += lam(i) - std::log1p(lam(i));
  return 0.5 * h;
}

void write_samples_csv(std::ostream& out, const Mat& samples, int d) {
  const Index n = samples.cols() / d;
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < d; ++c) out << (i || c ? "," : "") << "x" << i << (d > 1 ? "_" + std::to_string(c) : "");
  out << '\n' << std::setprecision(17);
  for (Index s = 0; s < samples.rows(); ++s) {
    for (Index j = 0; j < samples.cols(); ++j) out << (j ? "," : "") << samples(s, j);
    out << '\n';
  }
}

}  // namespace chaoscope
