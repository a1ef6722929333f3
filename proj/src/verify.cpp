#include "chaoscope/verify.hpp"

#include "chaoscope/bounds.hpp"
#include "chaoscope/gaussian.hpp"
#include "chaoscope/percolation.hpp"
#include "chaoscope/rng.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace chaoscope {

namespace {

constexpr std::uint64_t payload_stream = 1ull << 40;

class Tracker {
 public:
  Tracker(std::string suite, std::string check, int instance, double tol) {
    rec_.suite = std::move(suite);
    rec_.check = std::move(check);
    rec_.instance = instance;
    rec_.tolerance = tol;
    rec_.min_slack = std::numeric_limits<double>::infinity();
  }

  // Records rhs - lhs, relative to max(1, |rhs|) when `relative`.
  template <typename Where>
  void add(double lhs, double rhs, Where where, bool relative = true) {
    double s = rhs - lhs;
    if (relative) s /= std::max(1.0, std::abs(rhs));
    ++rec_.count;
    if (s < rec_.min_slack || std::isnan(s)) {
      rec_.min_slack = std::isnan(s) ? -std::numeric_limits<double>::infinity() : s;
      rec_.worst = where();
    }
  }

  CheckRecord done() const { return rec_; }

 private:
  CheckRecord rec_;
};

std::string vstr(const SubsetState& v) { return "v={" + v.to_string() + "}"; }

struct Payloads {
  double kappa;
  Vec x;
  Mat G;
};

Payloads random_payloads(std::uint64_t seed, int r, Index n) {
  Stream rng(seed, payload_stream + static_cast<std::uint64_t>(r));
  Payloads p;
  p.kappa = 0.5 + rng.uniform();
  p.x = Vec(n);
  for (Index i = 0; i < n; ++i) p.x(i) = rng.uniform();
  p.G = Mat(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) p.G(i, j) = rng.uniform();
  return p;
}

// Horizon drawn inside the small-time window; capped at 1 when xi = 0 makes the window unbounded.
double window_horizon(double rho, Stream& rng) {
  return (0.05 + 0.95 * rng.uniform()) * std::min(1.0, small_time_window(rho));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

bool VerifyReport::pass() const {
  for (const auto& c : checks)
    if (!c.pass()) return false;
  return true;
}

std::int64_t VerifyReport::evaluations() const {
  std::int64_t s = 0;
  for (const auto& c : checks) s += c.count;
  return s;
}

double VerifyReport::min_slack() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& c : checks) m = std::min(m, c.min_slack);
  return m;
}

void VerifyReport::append(const VerifyReport& other) {
  checks.insert(checks.end(), other.checks.begin(), other.checks.end());
  seconds += other.seconds;
}

nlohmann::json VerifyReport::to_json() const {
  nlohmann::json j;
  j["pass"] = pass();
  j["evaluations"] = evaluations();
  j["seconds"] = seconds;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks)
    j["checks"].push_back({{"suite", c.suite},
                           {"check", c.check},
                           {"instance", c.instance},
                           {"count", c.count},
                           {"min_slack", c.min_slack},
                           {"tolerance", c.tolerance},
                           {"worst", c.worst},
                           {"pass", c.pass()}});
  return j;
}

InteractionMatrix verify_instance(std::uint64_t seed, int r, int max_n, bool stochastic) {
  Stream rng(seed, static_cast<std::uint64_t>(r));
  const int n = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_n - 1)));
  const double density = 0.3 + 0.7 * rng.uniform();
  return sample_random_interaction(n, rng.next_u64(), density, stochastic);
}

VerifyReport verify_generator(int instances, std::uint64_t seed, int max_n) {
  const auto t0 = std::chrono::steady_clock::now();
  VerifyReport rep;
  constexpr double tol = 1e-9;
  for (int r = 0; r < instances; ++r) {
    const InteractionMatrix xi = verify_instance(seed, r, max_n, false);
    const int n = static_cast<int>(xi.size());
    const auto p = random_payloads(seed, r, n);
    const PercolationModel model(xi, p.kappa);
    const ExactEngine eng(model);
    const Mat xd = xi.dense();
    const Vec xix = xd * p.x;
    const Vec xigd = xd * Vec(p.G.diagonal());
    const Mat cross = xd * p.G + p.G * xd.transpose();
    const double kap = p.kappa;

    std::vector<Tracker> trackers;
    std::vector<Vec> lhs;
    for (const char* name : {"size^1", "size^2", "size^3", "linear^0", "linear^1", "linear^2", "quadratic^0",
                             "quadratic^1"}) {
      Functional f = Functional::parse(name);
      f.x = p.x;
      f.G = p.G;
      lhs.push_back(eng.apply_generator(f.tabulate(xi).values));
      trackers.emplace_back("generator", std::string("A[") + name + "]", r, tol);
    }
    for (std::uint64_t m = 0; m < eng.states(); ++m) {
      const SubsetState v = SubsetState::from_mask(n, m);
      const double k = v.size();
      const Vec one = v.indicator();
      const double lx = one.dot(p.x), lxix = one.dot(xix), lgd = one.dot(xigd);
      const double lg = one.dot(p.G * one), lcross = one.dot(cross * one);
      const auto idx = static_cast<Index>(m);
      auto where = [&] { return vstr(v); };
      for (int l = 1; l <= 3; ++l)
        trackers[static_cast<std::size_t>(l - 1)].add(lhs[static_cast<std::size_t>(l - 1)](idx),
                                                      kap * k * (std::pow(k + 1, l) - std::pow(k, l)), where);
      for (int l = 0; l <= 2; ++l)
        trackers[static_cast<std::size_t>(3 + l)].add(
            lhs[static_cast<std::size_t>(3 + l)](idx),
            kap * std::pow(k + 1, l) * lxix + kap * k * (std::pow(k + 1, l) - std::pow(k, l)) * lx, where);
      trackers[6].add(lhs[6](idx), kap * lgd + kap * lcross, where);
      trackers[7].add(lhs[7](idx), kap * (k + 1) * (lgd + lcross) + kap * k * lg, where);
    }
    for (const auto& t : trackers) rep.checks.push_back(t.done());
  }
  rep.seconds = seconds_since(t0);
  return rep;
}

VerifyReport verify_expectations(int instances, std::uint64_t seed, const std::vector<double>& times, int max_n) {
  const auto t0 = std::chrono::steady_clock::now();
  VerifyReport rep;
  constexpr double tol = 1e-8;
  for (int r = 0; r < instances; ++r) {
    const InteractionMatrix xi = verify_instance(seed, r, max_n, false);
    const int n = static_cast<int>(xi.size());
    const auto p = random_payloads(seed, r, n);
    const PercolationModel model(xi, p.kappa);
    const ExactEngine eng(model);
    const Payload payload{p.x, p.G};
    for (Family fam : all_families) {
      Tracker tr("expectations", "E[" + family_name(fam) + "]", r, tol);
      for (double t : times) {
        const ExpectationBound eb(model, fam, t, payload);
        const Vec exact = eng.expectation(eb.target().tabulate(xi).values, t, 1e-12);
        for (std::uint64_t m = 0; m < eng.states(); ++m) {
          const SubsetState v = SubsetState::from_mask(n, m);
          tr.add(exact(static_cast<Index>(m)), eb(v), [&] { return vstr(v) + " t=" + std::to_string(t); });
        }
      }
      rep.checks.push_back(tr.done());
    }
  }
  rep.seconds = seconds_since(t0);
  return rep;
}

VerifyReport verify_gaussian(int instances, std::uint64_t seed, int max_n) {
  const auto t0 = std::chrono::steady_clock::now();
  VerifyReport rep;
  constexpr double tol = 1e-12;
  for (int r = 0; r < instances; ++r) {
    const InteractionMatrix xi = verify_instance(seed, r, max_n, true);
    const int n = static_cast<int>(xi.size());
    Stream rng(seed, payload_stream + static_cast<std::uint64_t>(r));
    const double rho = operator_norm(xi);
    const double T = window_horizon(rho, rng);
    const GaussianModel g = sigma_T(xi, T);
    const double delta = xi.delta();
    Tracker lower("gaussian", "lower<=exact", r, tol), upper("gaussian", "exact<=upper", r, tol),
        clique("gaussian", "clique<=exact", r, tol), mx("gaussian", "exact<=max", r, tol),
        window("gaussian", "eigenvalue-window", r, tol);
    const Eigen::SelfAdjointEigenSolver<Mat> es(g.sigma / T - Mat::Identity(n, n), Eigen::EigenvaluesOnly);
    const Vec lam = es.eigenvalues();
    window.add(std::exp(-2.0 * g.rho * T) - 1.0, lam.minCoeff(), [] { return std::string("min eigenvalue"); });
    window.add(lam.maxCoeff(), std::exp(2.0 * g.rho * T) - 1.0, [] { return std::string("max eigenvalue"); });
    for (std::uint64_t m = 1; m < (std::uint64_t{1} << n); ++m) {
      const SubsetState v = SubsetState::from_mask(n, m);
      const EntropyPair e = entropy_bounds(g, v);
      auto where = [&] { return vstr(v) + " T=" + std::to_string(T); };
      lower.add(e.lower, e.exact, where);
      upper.add(e.exact, e.upper, where);
      clique.add(T * T / 12.0 * entry_sq_sum(xi, v), e.exact, where);
      const double k = v.size();
      mx.add(e.exact, std::exp(10.0 * g.rho * T) * delta * delta * k * k, where);
    }
    for (auto* t : {&lower, &upper, &clique, &mx, &window}) rep.checks.push_back(t->done());
  }
  rep.seconds = seconds_since(t0);
  return rep;
}

VerifyReport verify_gaussian_average(int instances, std::uint64_t seed, int max_n) {
  const auto t0 = std::chrono::steady_clock::now();
  VerifyReport rep;
  constexpr double tol = 1e-12;
  for (int r = 0; r < instances; ++r) {
    const InteractionMatrix xi = verify_instance(seed, r, max_n, false);
    const int n = static_cast<int>(xi.size());
    Stream rng(seed, payload_stream + static_cast<std::uint64_t>(r));
    const double T = window_horizon(operator_norm(xi), rng);
    const GaussianModel g = sigma_T(xi, T);
    Tracker lo("gaussian-average", "lower<=average", r, tol), up("gaussian-average", "average<=upper", r, tol);
    for (int k = 1; k <= std::min(4, n); ++k) {
      const double avg = avg_entropy_enumerate(g, k).value;
      const AverageSandwich s = average_sandwich(g, k);
      auto where = [&] { return "k=" + std::to_string(k) + " T=" + std::to_string(T); };
      lo.add(s.lower, avg, where);
      up.add(avg, s.upper, where);
    }
    rep.checks.push_back(lo.done());
    rep.checks.push_back(up.done());
  }
  // Lower-triangular example xi_{i0} = 1 for i >= 1: no closed loops, so D_T vanishes.
  const int n = 6;
  Mat tri = Mat::Zero(n, n);
  for (int i = 1; i < n; ++i) tri(i, 0) = 1.0;
  Tracker dz("gaussian-average", "triangular D_T = 0", -1, 0.0);
  dz.add(d_T(InteractionMatrix::from_dense(tri), 0.3), 0.0, [] { return std::string("n=6 T=0.3"); }, false);
  rep.checks.push_back(dz.done());
  rep.seconds = seconds_since(t0);
  return rep;
}

VerifyReport verify_certification(int instances, std::uint64_t seed, int max_n, double max_T) {
  const auto t0 = std::chrono::steady_clock::now();
  VerifyReport rep;
  constexpr double tol = 1e-9;
  for (int r = 0; r < instances; ++r) {
    const InteractionMatrix xi = verify_instance(seed, r, max_n, false);
    const int n = static_cast<int>(xi.size());
    Stream rng(seed, payload_stream + static_cast<std::uint64_t>(r));
    const double T = max_T * (0.1 + 0.9 * rng.uniform());
    const GaussianModel g = sigma_T(xi, T);
    const ModelConstants c = certification_constants(g);
    const PercolationModel model(xi, c.gamma / (c.sigma * c.sigma));
    Tracker tr("bounds", "exact<=percolation-bound", r, tol);
    for (std::uint64_t m = 1; m < (std::uint64_t{1} << n); ++m) {
      const SubsetState v = SubsetState::from_mask(n, m);
      const BoundReport b = percolation_entropy_bound(model, v, c, std::nullopt, false, 0.0, false);
      tr.add(exact_entropy(g, v), *b.explicit_value, [&] { return vstr(v) + " T=" + std::to_string(T); });
    }
    rep.checks.push_back(tr.done());
  }
  rep.seconds = seconds_since(t0);
  return rep;
}

VerifyReport run_suite(const std::string& suite, int instances, std::uint64_t seed) {
  require(instances >= 1, ErrorCode::invalid_argument, "need at least one instance");
  VerifyReport rep;
  const bool all = suite == "all";
  bool known = all;
  if (all || suite == "generator") {
    rep.append(verify_generator(instances, seed));
    known = true;
  }
  if (all || suite == "expectations") {
    rep.append(verify_expectations(instances, seed, {0.1, 0.5, 1.0, 2.0}));
    known = true;
  }
  if (all || suite == "gaussian") {
    rep.append(verify_gaussian(instances, seed));
    rep.append(verify_gaussian_average(instances, seed));
    known = true;
  }
  if (all || suite == "bounds") {
    rep.append(verify_certification(instances, seed));
    known = true;
  }
  require(known, ErrorCode::invalid_argument, "unknown suite '" + suite + "'");
  return rep;
}

}  // namespace chaoscope
