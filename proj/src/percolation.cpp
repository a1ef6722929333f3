#include "chaoscope/percolation.hpp"

#include "chaoscope/linalg.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <queue>

namespace chaoscope {

namespace {

// Poisson(m) probabilities p_0..p_K with P(N > K) <= tol, by the ratio recursion in log space.
std::vector<double> poisson_weights(double m, double tol) {
  std::vector<double> w;
  double logp = -m, cdf = 0.0;
  const double cap = m + 60.0 * std::sqrt(m) + 200.0;
  for (int k = 0;; ++k) {
    if (k > 0) logp += std::log(m / k);
    const double p = std::exp(logp);
    w.push_back(p);
    cdf += p;
    if ((k >= m && 1.0 - cdf <= tol) || k > cap) break;
  }
  // renormalise so constants are reproduced exactly
  for (double& p : w) p /= cdf;
  return w;
}

void check_tol(double tol) { require(tol > 0.0, ErrorCode::invalid_argument, "tolerance must be positive"); }

}  // namespace

PercolationModel::PercolationModel(InteractionMatrix xi_, double kappa_) : xi(std::move(xi_)), kappa(kappa_) {
  require(kappa > 0.0 && std::isfinite(kappa), ErrorCode::invalid_argument, "kappa must be positive");
}

SubsetFunction::SubsetFunction(int n_, Vec values_) : n(n_), values(std::move(values_)) {
  require(n >= 0 && n <= 30, ErrorCode::engine_too_large, "subset functions need n <= 30");
  require(values.size() == (Index{1} << n), ErrorCode::length_mismatch, "subset function needs 2^n values");
}

SubsetFunction SubsetFunction::tabulate(int n, const std::function<double(const SubsetState&)>& f) {
  require(n >= 0 && n <= 30, ErrorCode::engine_too_large, "subset functions need n <= 30");
  Vec vals(Index{1} << n);
  for (Index m = 0; m < vals.size(); ++m) vals(m) = f(SubsetState::from_mask(n, static_cast<std::uint64_t>(m)));
  return SubsetFunction(n, std::move(vals));
}

Functional Functional::parse(const std::string& name) {
  Functional f;
  std::string base = name;
  int power = -1;
  if (auto caret = name.find('^'); caret != std::string::npos) {
    base = name.substr(0, caret);
    try {
      power = std::stoi(name.substr(caret + 1));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::parse_error, "bad power in functional '" + name + "'");
    }
    require(power >= 0, ErrorCode::parse_error, "negative power in functional '" + name + "'");
  }
  if (base == "size") {
    f.kind = Kind::size;
    f.power = power < 0 ? 1 : power;
  } else if (base == "linear") {
    f.kind = Kind::linear;
    f.power = power < 0 ? 0 : power;
  } else if (base == "quadratic") {
    f.kind = Kind::quadratic;
    f.power = power < 0 ? 0 : power;
  } else if (base == "C" && power < 0) {
    f.kind = Kind::C;
  } else if (base == "Chat" && power < 0) {
    f.kind = Kind::Chat;
  } else {
    throw Error(ErrorCode::parse_error, "unknown functional '" + name + "'");
  }
  return f;
}

std::string Functional::name() const {
  switch (kind) {
    case Kind::size: return "size^" + std::to_string(power);
    case Kind::linear: return "linear^" + std::to_string(power);
    case Kind::quadratic: return "quadratic^" + std::to_string(power);
    case Kind::C: return "C";
    case Kind::Chat: return "Chat";
  }
  return "?";
}

double Functional::operator()(const InteractionMatrix& xi, const SubsetState& v) const {
  const double k = v.size();
  switch (kind) {
    case Kind::size: return std::pow(k, power);
    case Kind::linear: {
      require(x.size() == xi.size(), ErrorCode::length_mismatch, "linear functional needs x of length n");
      double s = 0.0;
      for (int i : v.members()) s += x(i);
      return s * std::pow(k, power);
    }
    case Kind::quadratic: {
      require(G.rows() == xi.size() && G.cols() == xi.size(), ErrorCode::length_mismatch,
              "quadratic functional needs an n x n G");
      double s = 0.0;
      for (int i : v.members())
        for (int j : v.members()) s += G(i, j);
      return s * std::pow(k, power);
    }
    case Kind::C: return v.empty() ? 0.0 : C_of_v(xi, v, constants);
    case Kind::Chat: return v.empty() ? 0.0 : Chat_of_v(xi, v, constants, h3);
  }
  return 0.0;
}

SubsetFunction Functional::tabulate(const InteractionMatrix& xi) const {
  return SubsetFunction::tabulate(static_cast<int>(xi.size()), [&](const SubsetState& v) { return (*this)(xi, v); });
}

ExactEngine::ExactEngine(const PercolationModel& model, int max_n) : n_(model.size()) {
  require(n_ <= max_n && n_ <= 30, ErrorCode::engine_too_large,
          "exact engine limited to n <= " + std::to_string(std::min(max_n, 30)) + ", got " + std::to_string(n_));
  const std::size_t S = states();
  const auto n = static_cast<std::size_t>(n_);
  const Mat xi = model.xi.dense();
  rates_.assign(S * n, 0.0);
  out_rate_ = Vec::Zero(static_cast<Index>(S));
  for (std::size_t m = 1; m < S; ++m) {
    const int b = std::countr_zero(m);
    const std::size_t prev = m & (m - 1);
    for (std::size_t j = 0; j < n; ++j)
      rates_[m * n + j] = rates_[prev * n + j] + model.kappa * xi(b, static_cast<Index>(j));
  }
  for (std::size_t m = 0; m < S; ++m) {
    double out = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (!(m >> j & 1u)) out += rates_[m * n + j];
    out_rate_(static_cast<Index>(m)) = out;
  }
  lambda_ = out_rate_.maxCoeff();
}

Vec ExactEngine::apply_generator(const Vec& f) const {
  require(f.size() == static_cast<Index>(states()), ErrorCode::length_mismatch, "function length must be 2^n");
  const auto n = static_cast<std::size_t>(n_);
  Vec out(f.size());
  for (std::size_t m = 0; m < states(); ++m) {
    double acc = 0.0;
    const double fm = f(static_cast<Index>(m));
    for (std::size_t j = 0; j < n; ++j)
      if (!(m >> j & 1u)) {
        const double r = rates_[m * n + j];
        if (r != 0.0) acc += r * (f(static_cast<Index>(m | (std::size_t{1} << j))) - fm);
      }
    out(static_cast<Index>(m)) = acc;
  }
  return out;
}

Vec ExactEngine::step(const Vec& f) const { return f + apply_generator(f) / lambda_; }

Vec ExactEngine::expectation(const Vec& f, double t, double tol) const {
  check_tol(tol);
  require(t >= 0.0, ErrorCode::invalid_argument, "time must be nonnegative");
  require(f.size() == static_cast<Index>(states()), ErrorCode::length_mismatch, "function length must be 2^n");
  if (lambda_ == 0.0 || t == 0.0) return f;
  const auto w = poisson_weights(lambda_ * t, tol);
  Vec pk = f;
  Vec out = w[0] * f;
  for (std::size_t k = 1; k < w.size(); ++k) {
    pk = step(pk);
    out += w[k] * pk;
  }
  return out;
}

Vec ExactEngine::integrated(const Vec& f, double T, double discount, double tol) const {
  check_tol(tol);
  require(T >= 0.0 && discount >= 0.0, ErrorCode::invalid_argument, "horizon and discount must be nonnegative");
  require(f.size() == static_cast<Index>(states()), ErrorCode::length_mismatch, "function length must be 2^n");
  const double mu = lambda_ + discount;
  if (T == 0.0) return Vec::Zero(f.size());
  if (mu == 0.0) return T * f;
  if (lambda_ == 0.0) return f * (-std::expm1(-discount * T) / discount);
  // int_0^T e^{-rs} Pois(k; lambda s) ds = (lambda/mu)^k / mu * P(Pois(mu T) >= k + 1)
  const auto w = poisson_weights(mu * T, tol);
  const double ratio = lambda_ / mu;
  double cdf = 0.0, geo = 1.0 / mu;
  Vec pk = f;
  Vec out = Vec::Zero(f.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    cdf += w[k];
    const double c = geo * std::max(0.0, 1.0 - cdf);
    if (k > 0) pk = step(pk);
    out += c * pk;
    geo *= ratio;
  }
  return out;
}

SubsetFunction generator_apply(const PercolationModel& model, const SubsetFunction& f, int max_n) {
  ExactEngine eng(model, max_n);
  require(f.n == model.size(), ErrorCode::length_mismatch, "function universe differs from model size");
  return SubsetFunction(f.n, eng.apply_generator(f.values));
}

double exact_expectation(const PercolationModel& model, const SubsetFunction& f, const SubsetState& v, double t,
                         double tol, int max_n) {
  check_tol(tol);
  ExactEngine eng(model, max_n);
  require(f.n == model.size() && v.universe() == model.size(), ErrorCode::length_mismatch,
          "function or subset universe differs from model size");
  return eng.expectation(f.values, t, tol)(static_cast<Index>(v.mask()));
}

double exact_cardinality_expectation(const PercolationModel& model, const Vec& f_of_size, int k0, double t,
                                     double tol) {
  check_tol(tol);
  const int n = model.size();
  require(f_of_size.size() == n + 1, ErrorCode::length_mismatch, "need f(0..n)");
  require(k0 >= 0 && k0 <= n, ErrorCode::invalid_argument, "initial size out of range");
  const Mat xi = model.xi.dense();
  const double c = n > 1 ? xi(0, 1) : 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      require(i == j || xi(i, j) == c, ErrorCode::not_applicable, "cardinality chain needs constant off-diagonal xi");
  Vec birth(n + 1);
  for (int k = 0; k <= n; ++k) birth(k) = model.kappa * c * k * (n - k);
  const double lambda = birth.maxCoeff();
  if (lambda == 0.0 || t == 0.0) return f_of_size(k0);
  const auto w = poisson_weights(lambda * t, tol);
  Vec pk = f_of_size, out = w[0] * f_of_size;
  for (std::size_t m = 1; m < w.size(); ++m) {
    Vec next = pk;
    for (int k = 0; k < n; ++k) next(k) += birth(k) / lambda * (pk(k + 1) - pk(k));
    pk = next;
    out += w[m] * pk;
  }
  return out(k0);
}

SubsetState Trajectory::at(double t) const {
  std::vector<int> m = initial.members();
  for (std::size_t k = 0; k < times.size() && times[k] <= t; ++k) m.push_back(added[k]);
  return SubsetState(initial.universe(), std::move(m));
}

Trajectory simulate(const PercolationModel& model, const SubsetState& v, double t, Stream& rng) {
  require(t >= 0.0, ErrorCode::invalid_argument, "time must be nonnegative");
  const int n = model.size();
  require(v.universe() == n, ErrorCode::length_mismatch, "subset universe differs from model size");
  const auto& xi = model.xi.sparse();
  Trajectory tr{v, {}, {}};
  std::vector<char> in(static_cast<std::size_t>(n), 0);
  Vec s = Vec::Zero(n);
  auto add = [&](int i) {
    in[static_cast<std::size_t>(i)] = 1;
    for (SparseRM::InnerIterator it(xi, i); it; ++it) s(it.col()) += it.value();
  };
  for (int i : v.members()) add(i);
  double now = 0.0;
  for (;;) {
    double total = 0.0;
    for (int j = 0; j < n; ++j)
      if (!in[static_cast<std::size_t>(j)]) total += s(j);
    if (total <= 0.0) break;
    now += rng.exponential(model.kappa * total);
    if (now > t) break;
    const double target = rng.uniform() * total;
    double acc = 0.0;
    int pick = -1;
    for (int j = 0; j < n; ++j) {
      if (in[static_cast<std::size_t>(j)] || s(j) <= 0.0) continue;
      pick = j;
      acc += s(j);
      if (acc > target) break;
    }
    tr.times.push_back(now);
    tr.added.push_back(pick);
    add(pick);
  }
  return tr;
}

Trajectory simulate(const PercolationModel& model, const SubsetState& v, double t, std::uint64_t seed) {
  Stream rng(seed, 0);
  return simulate(model, v, t, rng);
}

Trajectory fpp_simulate(const PercolationModel& model, const SubsetState& v, double t, Stream& rng) {
  require(t >= 0.0, ErrorCode::invalid_argument, "time must be nonnegative");
  require(model.xi.is_symmetric(), ErrorCode::not_applicable, "first-passage percolation needs symmetric xi");
  const int n = model.size();
  require(v.universe() == n, ErrorCode::length_mismatch, "subset universe differs from model size");
  const auto& xi = model.xi.sparse();
  // One clock per undirected edge, drawn in (row, column) order.
  std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (SparseRM::InnerIterator it(xi, i); it; ++it) {
      const int j = static_cast<int>(it.col());
      if (j <= i || it.value() <= 0.0) continue;
      const double tau = rng.exponential(model.kappa * it.value());
      adj[static_cast<std::size_t>(i)].emplace_back(j, tau);
      adj[static_cast<std::size_t>(j)].emplace_back(i, tau);
    }
  std::vector<double> dist(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (int i : v.members()) {
    dist[static_cast<std::size_t>(i)] = 0.0;
    pq.emplace(0.0, i);
  }
  Trajectory tr{v, {}, {}};
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[static_cast<std::size_t>(u)] || d > t) continue;
    if (d > 0.0 || !v.contains(u)) {
      tr.times.push_back(d);
      tr.added.push_back(u);
    }
    for (auto [w, tau] : adj[static_cast<std::size_t>(u)])
      if (d + tau < dist[static_cast<std::size_t>(w)]) {
        dist[static_cast<std::size_t>(w)] = d + tau;
        pq.emplace(d + tau, w);
      }
  }
  return tr;
}

Trajectory fpp_simulate(const PercolationModel& model, const SubsetState& v, double t, std::uint64_t seed) {
  Stream rng(seed, 0);
  return fpp_simulate(model, v, t, rng);
}

namespace {

SubsetState final_state(const PercolationModel& model, const SubsetState& v, double t, Stream& rng, McEngine e) {
  const Trajectory tr = e == McEngine::fpp ? fpp_simulate(model, v, t, rng) : simulate(model, v, t, rng);
  return tr.at(t);
}

}  // namespace

McEstimate mc_expectation(const PercolationModel& model, const Functional& f, const SubsetState& v, double t,
                          std::int64_t reps, std::uint64_t seed, int threads, McEngine engine) {
  require(reps >= 2, ErrorCode::invalid_argument, "need at least two replications");
  if (engine == McEngine::fpp)
    require(model.xi.is_symmetric(), ErrorCode::not_applicable, "first-passage percolation needs symmetric xi");
  std::vector<double> vals(static_cast<std::size_t>(reps));
  parallel_for(vals.size(), threads, [&](std::size_t r) {
    Stream rng(seed, r);
    vals[r] = f(model.xi, final_state(model, v, t, rng, engine));
  });
  const double mean = pairwise_sum(vals) / static_cast<double>(reps);
  std::vector<double> dev(vals.size());
  for (std::size_t r = 0; r < vals.size(); ++r) dev[r] = (vals[r] - mean) * (vals[r] - mean);
  const double var = pairwise_sum(dev) / static_cast<double>(reps - 1);
  return {f.name(), v, t, mean, std::sqrt(var / static_cast<double>(reps)), reps, seed};
}

std::vector<std::uint64_t> sample_final_states(const PercolationModel& model, const SubsetState& v, double t,
                                               std::int64_t reps, std::uint64_t seed, int threads, McEngine engine) {
  require(reps >= 1, ErrorCode::invalid_argument, "need at least one replication");
  std::vector<std::uint64_t> out(static_cast<std::size_t>(reps));
  parallel_for(out.size(), threads, [&](std::size_t r) {
    Stream rng(seed, r);
    out[r] = final_state(model, v, t, rng, engine).mask();
  });
  return out;
}

Family parse_family(const std::string& s) {
  for (Family f : all_families)
    if (family_name(f) == s) return f;
  throw Error(ErrorCode::parse_error, "unknown bound family '" + s + "'");
}

std::string family_name(Family f) {
  switch (f) {
    case Family::ia: return "ia";
    case Family::ib: return "ib";
    case Family::ic: return "ic";
    case Family::iia: return "iia";
    case Family::iib: return "iib";
    case Family::iic: return "iic";
    case Family::iiia: return "iiia";
    case Family::iiib: return "iiib";
  }
  return "?";
}

ExpectationBound::ExpectationBound(const PercolationModel& model, Family family, double t, const Payload& payload)
    : family_(family), kappa_(model.kappa), t_(t), payload_(payload) {
  require(t >= 0.0, ErrorCode::invalid_argument, "time must be nonnegative");
  const auto rep = validate(model.xi, false);
  require(rep.rows_ok, ErrorCode::precondition_failed, "expectation bounds need row sums of xi at most one");
  const Index n = model.xi.size();
  const Mat xi = model.xi.dense();
  const double kt = kappa_ * t;
  const Mat id = Mat::Identity(n, n);
  auto need_x = [&] {
    require(payload.x.size() == n, ErrorCode::length_mismatch, "payload x must have length n");
    require((payload.x.array() >= 0).all(), ErrorCode::invalid_argument, "payload x must be nonnegative");
  };
  auto need_G = [&] {
    require(payload.G.rows() == n && payload.G.cols() == n, ErrorCode::length_mismatch, "payload G must be n x n");
    require((payload.G.array() >= 0).all(), ErrorCode::invalid_argument, "payload G must be nonnegative");
  };
  auto G_at = [&](double s) {
    const Mat e = expm(xi, kappa_ * s);
    return Mat(e * payload.G * e.transpose());
  };
  switch (family) {
    case Family::ia:
    case Family::ib:
    case Family::ic: break;
    case Family::iia:
      need_x();
      w_ = expm_action(xi, kt, payload.x);
      break;
    case Family::iib:
      need_x();
      w_ = std::exp(kt) * expm_action(xi, kt, Vec((id + xi) * payload.x));
      break;
    case Family::iic:
      need_x();
      w_ = std::exp(2.0 * kt) * expm_action(xi, kt, Vec((id + xi) * ((id + xi) * payload.x)));
      break;
    case Family::iiia: {
      need_G();
      q_ = G_at(t);
      auto integrand = [&](double s) -> Vec {
        const Vec d = G_at(s).diagonal();
        return xi * expm_action(xi, kappa_ * (t - s), d);
      };
      w_ = kappa_ * adaptive_simpson(integrand, 0.0, t, 1e-8);
      break;
    }
    case Family::iiib: {
      need_G();
      const Mat gt = G_at(t);
      q_ = std::exp(kt) * (xi * gt + gt * xi.transpose() + gt);
      auto integrand = [&](double s) -> Vec {
        const Mat gs = G_at(s);
        const Vec d = (xi * gs + gs * xi.transpose() + 2.0 * gs).diagonal();
        return expm_action(xi, kappa_ * (t - s), Vec((id + xi) * (xi * d)));
      };
      w_ = kappa_ * std::exp(kt) * adaptive_simpson(integrand, 0.0, t, 1e-8);
      break;
    }
  }
}

double ExpectationBound::operator()(const SubsetState& v) const {
  const double k = v.size();
  const double kt = kappa_ * t_;
  auto lin = [&] {
    double s = 0.0;
    for (int i : v.members()) s += w_(i);
    return s;
  };
  auto quad = [&] {
    double s = 0.0;
    for (int i : v.members())
      for (int j : v.members()) s += q_(i, j);
    return s;
  };
  switch (family_) {
    case Family::ia: return std::exp(kt) * k;
    case Family::ib: return 2.0 * std::exp(2.0 * kt) * k * k;
    case Family::ic: return 8.0 * std::exp(3.0 * kt) * k * k * k;
    case Family::iia: return lin();
    case Family::iib: return k * lin();
    case Family::iic: return 2.0 * k * k * lin();
    case Family::iiia: return quad() + lin();
    case Family::iiib: return k * (quad() + lin());
  }
  return 0.0;
}

Functional ExpectationBound::target() const {
  Functional f;
  switch (family_) {
    case Family::ia: f.kind = Functional::Kind::size; f.power = 1; break;
    case Family::ib: f.kind = Functional::Kind::size; f.power = 2; break;
    case Family::ic: f.kind = Functional::Kind::size; f.power = 3; break;
    case Family::iia: f.kind = Functional::Kind::linear; f.power = 0; break;
    case Family::iib: f.kind = Functional::Kind::linear; f.power = 1; break;
    case Family::iic: f.kind = Functional::Kind::linear; f.power = 2; break;
    case Family::iiia: f.kind = Functional::Kind::quadratic; f.power = 0; break;
    case Family::iiib: f.kind = Functional::Kind::quadratic; f.power = 1; break;
  }
  f.x = payload_.x;
  f.G = payload_.G;
  return f;
}

double expectation_bound(const PercolationModel& model, Family family, const SubsetState& v, double t,
                         const Payload& payload) {
  require(v.universe() == model.size(), ErrorCode::length_mismatch, "subset universe differs from model size");
  return ExpectationBound(model, family, t, payload)(v);
}

double yule_second_moment(int k, double rate, double t) {
  require(k >= 0 && rate >= 0.0 && t >= 0.0, ErrorCode::invalid_argument, "need k >= 0, rate >= 0, t >= 0");
  const double p = std::exp(-rate * t);
  return k * (1.0 - p) / (p * p) + static_cast<double>(k) * k / (p * p);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& tr) {
  out << "time,added_index\n" << std::setprecision(17);
  for (std::size_t k = 0; k < tr.times.size(); ++k) out << tr.times[k] << ',' << tr.added[k] << '\n';
}

std::string estimate_json(const McEstimate& e) {
  nlohmann::json j;
  j["functional"] = e.functional;
  j["v"] = e.v.members();
  j["t"] = e.t;
  j["mean"] = e.mean;
  j["stderr"] = e.std_error;
  j["reps"] = e.reps;
  j["seed"] = e.seed;
  return j.dump();
}

}  // namespace chaoscope
