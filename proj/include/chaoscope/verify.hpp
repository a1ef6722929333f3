#pragma once

#include "chaoscope/matrix_core.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace chaoscope {

// One inequality family checked on one instance: the minimum of (rhs - lhs)
// over every point where it was evaluated.
struct CheckRecord {
  std::string suite;
  std::string check;
  int instance = 0;
  std::int64_t count = 0;
  double min_slack = 0.0;
  double tolerance = 0.0;
  std::string worst;  // where min_slack was attained
  bool pass() const { return min_slack >= -tolerance; }
};

struct VerifyReport {
  std::vector<CheckRecord> checks;
  double seconds = 0.0;

  bool pass() const;
  std::int64_t evaluations() const;
  double min_slack() const;
  void append(const VerifyReport& other);
  nlohmann::json to_json() const;
};

// Random instance r of a suite: n in [2, max_n], density and scale drawn from (seed, r).
InteractionMatrix verify_instance(std::uint64_t seed, int r, int max_n, bool stochastic);

// Pointwise generator inequalities for polynomial, linear and quadratic functions, all v.
VerifyReport verify_generator(int instances, std::uint64_t seed, int max_n = 10);
// Exact expectations against the eight closed-form bounds, all v, each t.
VerifyReport verify_expectations(int instances, std::uint64_t seed, const std::vector<double>& times,
                                 int max_n = 10);
// Gaussian entropy sandwich, clique lower bound and max upper bound, all v, T in the small-time window.
VerifyReport verify_gaussian(int instances, std::uint64_t seed, int max_n = 10);
// Explicit-constant bracket on the k-subset average entropy, k <= 4.
VerifyReport verify_gaussian_average(int instances, std::uint64_t seed, int max_n = 10);
// Percolation bound with certification constants dominates the exact Gaussian entropies.
VerifyReport verify_certification(int instances, std::uint64_t seed, int max_n = 8, double max_T = 0.5);

VerifyReport run_suite(const std::string& suite, int instances, std::uint64_t seed);

}  // namespace chaoscope
