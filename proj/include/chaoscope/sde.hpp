#pragma once

#include "chaoscope/matrix_core.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace chaoscope {

// Drift of dX^i = (b0(X^i) + sum_j xi_ij b(X^i, X^j)) dt + sigma dB^i, applied
// coordinatewise in dimension d. Custom pair interactions are given in
// separated form b(x, y) = sum_k f_k(x) g_k(y), which lets both the particle
// system and the mean-field terms be evaluated in linear time.
struct DriftSpec {
  enum class Kind { linear, zero, custom };
  using Fn = std::function<double(double)>;

  static DriftSpec linear(int d = 1);
  static DriftSpec zero(int d = 1);
  // Registered custom drifts: "kuramoto" (b = sin(y - x)), "kuramoto-ou" (same with b0 = -x),
  // "relax" (b0 = -x, b = y - x).
  static DriftSpec named(const std::string& name, int d = 1);
  static std::vector<std::string> registered();

  Kind kind = Kind::zero;
  std::string name = "zero";
  int d = 1;
  Fn b0;                                // null means zero
  std::vector<std::pair<Fn, Fn>> pair;  // (f_k, g_k)
  bool bounded = false;
};

struct SimConfig {
  double dt = 1e-2;
  double T = 1.0;
  std::int64_t samples = 1000;
  std::uint64_t seed = 0;
  double sigma = 1.0;
  int threads = 1;

  int steps() const;
};

// Terminal samples, one row per sample, column i*d + c for particle i, coordinate c.
Mat simulate_particles(const InteractionMatrix& xi, const DriftSpec& drift, const SimConfig& cfg);
Mat simulate_projection(const InteractionMatrix& xi, const DriftSpec& drift, const SimConfig& cfg);

struct CovarianceEstimate {
  Vec mean;
  Mat cov;
  Mat std_error;  // entrywise standard error of cov
};
CovarianceEstimate sample_covariance(const Mat& samples);

// Exact covariance of the Euler-Maruyama chain for the linear drift (d = 1).
Mat euler_covariance(const InteractionMatrix& xi, double dt, double T, double sigma = 1.0);

double gaussian_entropy_from_samples(const Mat& samples, const SubsetState& v, double T);

void write_samples_csv(std::ostream& out, const Mat& samples, int d = 1);

}  // namespace chaoscope
