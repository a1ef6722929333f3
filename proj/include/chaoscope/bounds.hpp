#pragma once

#include "chaoscope/constants.hpp"
#include "chaoscope/matrix_core.hpp"
#include "chaoscope/percolation.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace chaoscope {

struct BoundReport {
  std::string theorem;
  double structural = 0.0;
  std::optional<double> explicit_value;
  // The (delta k + 1) or (delta |v| + 1) factor contained in `structural`.
  double prefactor = 1.0;
  nlohmann::json inputs = nlohmann::json::object();
  std::optional<double> oracle;

  // Compares the oracle against the explicit value when present, else the structural one.
  std::optional<bool> verdict() const;
  nlohmann::json to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

void check_constants(const ModelConstants& c);

// Explicit level of the three-particle entropies: finite horizon
// 8 e^{3 gamma T}(C0 + M/(3 gamma sigma^2)) * 27 delta^2, or its uniform-in-time analogue.
double h3_bound(const ModelConstants& c, double delta, bool uniform);

// E_v[H0(X_T)] + int_0^T E_v[C(X_t)] dt (C replaced by Chat when use_chat), computed
// on the exact engine. In uniform mode both terms carry the weight e^{-sigma^2 t / 4 eta}.
BoundReport percolation_entropy_bound(const PercolationModel& model, const SubsetState& v,
                                      const ModelConstants& c, const std::optional<SubsetFunction>& H0,
                                      bool use_chat, double h3, bool uniform, double tol = 1e-10,
                                      int max_n = default_exact_limit);

BoundReport max_entropy_bound(const InteractionMatrix& xi, int k, const ModelConstants& c);
BoundReport avg_entropy_bound(const InteractionMatrix& xi, int k, const ModelConstants& c);
BoundReport weighted_avg_bound(const InteractionMatrix& xi, int k, const Vec& pi, const ModelConstants& c);
BoundReport sharper_avg_bound(const InteractionMatrix& xi, int k, const ModelConstants& c);
BoundReport setwise_bound(const InteractionMatrix& xi, const SubsetState& v, const ModelConstants& c);
BoundReport reversed_variant(const BoundReport& r);

// Log-Sobolev constants of the two worked examples.
double lsi_convex(double eta0, double sigma, double lambda);
double lsi_torus(double lambda, double div_k_sup, double sigma);

}  // namespace chaoscope
