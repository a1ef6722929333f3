#pragma once

#include <optional>

namespace chaoscope {

// Constants of the interacting diffusion entering the entropy bounds.
// gamma: transport-type constant, M: drift second-moment bound, sigma: noise,
// eta: log-Sobolev constant (uniform-in-time mode only), C0: initial h3 level,
// T: time horizon.
struct ModelConstants {
  double gamma = 1.0;
  double M = 1.0;
  double sigma = 1.0;
  std::optional<double> eta;
  double C0 = 0.0;
  double T = 1.0;
};

}  // namespace chaoscope
