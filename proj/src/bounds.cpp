#include "chaoscope/bounds.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace chaoscope {

namespace {

std::string join(const std::vector<Index>& xs) {
  std::string s;
  for (std::size_t k = 0; k < xs.size() && k < 10; ++k) s += (k ? "," : "") + std::to_string(xs[k]);
  if (xs.size() > 10) s += ",...";
  return s;
}

void require_sums(const InteractionMatrix& xi) {
  const auto r = validate(xi, true);
  require(r.rows_ok, ErrorCode::precondition_failed, "row-sum violation at rows " + join(r.bad_rows));
  require(r.columns_ok.value_or(true), ErrorCode::precondition_failed,
          "column-sum violation at columns " + join(r.bad_columns));
}

void require_k(const InteractionMatrix& xi, int k) {
  require(k >= 1 && k <= xi.size(), ErrorCode::invalid_argument,
          "k must lie in [1, n]; got k=" + std::to_string(k) + ", n=" + std::to_string(xi.size()));
}

nlohmann::json constants_json(const ModelConstants& c) {
  nlohmann::json j{{"gamma", c.gamma}, {"M", c.M}, {"sigma", c.sigma}, {"C0", c.C0}, {"T", c.T}};
  if (c.eta) j["eta"] = *c.eta;
  return j;
}

BoundReport make(const std::string& id, double structural, double prefactor, nlohmann::json inputs) {
  BoundReport r;
  r.theorem = id;
  r.structural = structural;
  r.prefactor = prefactor;
  r.inputs = std::move(inputs);
  return r;
}

}  // namespace

std::optional<bool> BoundReport::verdict() const {
  if (!oracle) return std::nullopt;
  return *oracle <= explicit_value.value_or(structural);
}

nlohmann::json BoundReport::to_json() const {
  nlohmann::json j{{"theorem", theorem}, {"structural", structural}, {"prefactor", prefactor}, {"inputs", inputs}};
  j["explicit"] = explicit_value ? nlohmann::json(*explicit_value) : nlohmann::json(nullptr);
  if (oracle) {
    j["oracle"] = *oracle;
    j["verdict"] = *verdict() ? "pass" : "fail";
  }
  return j;
}

std::string BoundReport::csv_header() { return "theorem,structural,explicit,prefactor,oracle,verdict"; }

std::string BoundReport::csv_row() const {
  std::ostringstream os;
  os.precision(17);
  os << theorem << ',' << structural << ',';
  if (explicit_value) os << *explicit_value;
  os << ',' << prefactor << ',';
  if (oracle) os << *oracle;
  os << ',';
  if (oracle) os << (*verdict() ? "pass" : "fail");
  return os.str();
}

void check_constants(const ModelConstants& c) {
  require(c.gamma > 0.0 && c.M > 0.0 && c.sigma > 0.0, ErrorCode::invalid_argument,
          "gamma, M and sigma must be positive");
  require(c.C0 >= 0.0 && c.T >= 0.0, ErrorCode::invalid_argument, "C0 and T must be nonnegative");
  if (c.eta) require(*c.eta > 0.0, ErrorCode::invalid_argument, "eta must be positive");
}

double h3_bound(const ModelConstants& c, double delta, bool uniform) {
  check_constants(c);
  require(delta >= 0.0, ErrorCode::invalid_argument, "delta must be nonnegative");
  const double s2 = c.sigma * c.sigma;
  const double d2 = 27.0 * delta * delta;
  if (!uniform) return 8.0 * std::exp(3.0 * c.gamma * c.T) * (c.C0 + c.M / (3.0 * c.gamma * s2)) * d2;
  require(c.eta.has_value(), ErrorCode::invalid_argument, "uniform mode needs eta");
  require(s2 > 12.0 * *c.eta * c.gamma, ErrorCode::precondition_failed, "uniform mode needs sigma^2 > 12 eta gamma");
  // sup_T of C0 e^{-aT} + (M/sigma^2) int_0^T e^{-at} dt with a = r - 3 gamma > 0
  const double a = s2 / (4.0 * *c.eta) - 3.0 * c.gamma;
  return 8.0 * std::max(c.C0, c.M / (s2 * a)) * d2;
}

BoundReport percolation_entropy_bound(const PercolationModel& model, const SubsetState& v,
                                      const ModelConstants& c, const std::optional<SubsetFunction>& H0,
                                      bool use_chat, double h3, bool uniform, double tol, int max_n) {
  check_constants(c);
  require(c.T > 0.0, ErrorCode::invalid_argument, "horizon T must be positive");
  require(v.universe() == model.size(), ErrorCode::length_mismatch, "subset universe differs from model size");
  double r = 0.0;
  if (uniform) {
    require(c.eta.has_value(), ErrorCode::invalid_argument, "uniform mode needs eta");
    r = c.sigma * c.sigma / (4.0 * *c.eta);
  }
  ExactEngine eng(model, max_n);
  Functional src;
  src.kind = use_chat ? Functional::Kind::Chat : Functional::Kind::C;
  src.constants = c;
  src.h3 = h3;
  const auto mask = static_cast<Index>(v.mask());
  const Vec integral = eng.integrated(src.tabulate(model.xi).values, c.T, r, tol);
  double value = integral(mask);
  double initial = 0.0;
  if (H0) {
    require(H0->n == model.size(), ErrorCode::length_mismatch, "H0 universe differs from model size");
    initial = std::exp(-r * c.T) * eng.expectation(H0->values, c.T, tol)(mask);
    value += initial;
  }
  auto rep = make("feynman-kac", value, 1.0,
                  {{"v", v.members()},
                   {"kappa", model.kappa},
                   {"constants", constants_json(c)},
                   {"source", use_chat ? "Chat" : "C"},
                   {"h3", h3},
                   {"uniform", uniform},
                   {"initial_term", initial},
                   {"source_integral", integral(mask)}});
  rep.explicit_value = value;
  return rep;
}

BoundReport max_entropy_bound(const InteractionMatrix& xi, int k, const ModelConstants& c) {
  require_k(xi, k);
  const double dk = xi.delta() * k;
  return make("max", (dk + 1.0) * dk * dk, dk + 1.0, {{"k", k}, {"delta", xi.delta()}, {"constants", constants_json(c)}});
}

BoundReport avg_entropy_bound(const InteractionMatrix& xi, int k, const ModelConstants& c) {
  require_k(xi, k);
  require_sums(xi);
  const double n = static_cast<double>(xi.size());
  const double dk = xi.delta() * k;
  const double s = xi.row_max().squaredNorm();
  return make("avg", (dk + 1.0) * k * k / n * s, dk + 1.0,
              {{"k", k}, {"delta", xi.delta()}, {"sum_delta_i_sq", s}, {"constants", constants_json(c)}});
}

BoundReport weighted_avg_bound(const InteractionMatrix& xi, int k, const Vec& pi, const ModelConstants& c) {
  require_k(xi, k);
  require(pi.size() == xi.size(), ErrorCode::length_mismatch, "pi must have length n");
  require((pi.array() >= 0.0).all(), ErrorCode::precondition_failed, "pi must be nonnegative");
  require(pi.sum() <= 1.0 + sum_tolerance, ErrorCode::precondition_failed, "pi must have total mass at most one");
  const Vec pxi = xi.sparse().transpose() * pi;
  for (Index j = 0; j < pi.size(); ++j)
    require(pxi(j) <= pi(j) + sum_tolerance, ErrorCode::precondition_failed,
            "pi^T xi <= pi^T fails at coordinate " + std::to_string(j));
  const double dk = xi.delta() * k;
  const double s = pi.dot(xi.row_max().cwiseAbs2());
  return make("weighted", (dk + 1.0) * k * k * s, dk + 1.0,
              {{"k", k}, {"delta", xi.delta()}, {"sum_pi_delta_i_sq", s}, {"constants", constants_json(c)}});
}

BoundReport sharper_avg_bound(const InteractionMatrix& xi, int k, const ModelConstants& c) {
  require_k(xi, k);
  require_sums(xi);
  const double n = static_cast<double>(xi.size());
  const double dk = xi.delta() * k;
  const double sq = xi.sparse().squaredNorm();
  const double p = p_xi(xi);
  return make("sharper", (dk + 1.0) * (k * k / (n * n) * sq + k / n * p), dk + 1.0,
              {{"k", k}, {"delta", xi.delta()}, {"sum_xi_sq", sq}, {"p_xi", p}, {"constants", constants_json(c)}});
}

BoundReport setwise_bound(const InteractionMatrix& xi, const SubsetState& v, const ModelConstants& c) {
  require(!v.empty(), ErrorCode::empty_subset, "setwise bound needs a nonempty subset");
  require_sums(xi);
  const double pre = xi.delta() * v.size() + 1.0;
  return make("setwise", q_xi(xi, v), pre, {{"v", v.members()}, {"delta", xi.delta()}, {"constants", constants_json(c)}});
}

BoundReport reversed_variant(const BoundReport& r) {
  BoundReport out = r;
  out.theorem = r.theorem + "-reversed";
  out.structural = r.structural / r.prefactor;
  out.prefactor = 1.0;
  out.explicit_value.reset();
  return out;
}

double lsi_convex(double eta0, double sigma, double lambda) {
  require(lambda > 0.0, ErrorCode::not_applicable, "convexity modulus lambda must be positive");
  require(sigma > 0.0 && eta0 >= 0.0, ErrorCode::invalid_argument, "need sigma > 0 and eta0 >= 0");
  return std::max(eta0 / 4.0, sigma * sigma / lambda);
}

double lsi_torus(double lambda, double div_k_sup, double sigma) {
  require(lambda >= 1.0, ErrorCode::invalid_argument, "density ratio bound lambda must be >= 1");
  require(sigma > 0.0 && div_k_sup >= 0.0, ErrorCode::invalid_argument, "need sigma > 0 and ||div K|| >= 0");
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double s = std::sqrt(2.0 * std::log(lambda));
  const double cap = 2.0 * sigma * sigma * pi2;
  require(div_k_sup < cap / (1.0 + s), ErrorCode::not_applicable, "||div K|| violates the smallness condition");
  return lambda * lambda / (8.0 * pi2) / (1.0 - s * div_k_sup / (2.0 * (cap - div_k_sup)));
}

}  // namespace chaoscope
