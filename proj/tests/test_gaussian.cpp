#include <doctest.h>

#include "chaoscope/gaussian.hpp"
#include "chaoscope/linalg.hpp"

#include <cmath>
#include <bit>
#include <numeric>
#include <sstream>

using namespace chaoscope;

namespace {

InteractionMatrix xi3() {
  Mat m(3, 3);
  m << 0.0, 0.3, 0.2, 0.1, 0.0, 0.5, 0.4, 0.2, 0.0;
  return InteractionMatrix::from_dense(m);
}

// Mean of Tr((A^v)^2) by enumerating all k-subsets.
double brute_avg_trace(const Mat& a, int k) {
  const int n = static_cast<int>(a.rows());
  double total = 0.0;
  long count = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    if (std::popcount(mask) != k) continue;
    double tr = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if ((mask >> i & 1) && (mask >> j & 1)) tr += a(i, j) * a(i, j);
    total += tr;
    ++count;
  }
  return total / static_cast<double>(count);
}

}  // namespace

TEST_CASE("h and Gaussian relative entropy") {
  CHECK(h_function(0.0) == 0.0);
  CHECK(h_function(1.0) == doctest::Approx(1 - std::log(2.0)));
  Mat c0 = Mat::Identity(1, 1), c1 = 2 * Mat::Identity(1, 1);
  CHECK(gaussian_kl(c0, c1) == doctest::Approx(0.15342640972002735).epsilon(1e-14));
  CHECK(gaussian_kl(c1, c1) == doctest::Approx(0.0));
  Mat bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(gaussian_kl(Mat::Identity(2, 2), bad), Error);
  Mat asym(2, 2);
  asym << 1, 0.1, 0, 1;
  CHECK_THROWS_AS(gaussian_kl(Mat::Identity(2, 2), asym), Error);
}

TEST_CASE("Gamma_m is the m-th derivative of e^{s xi} e^{s xi^T} at 0") {
  const Mat x = xi3().dense();
  CHECK(gamma_m(x, 0) == Mat::Identity(3, 3));
  CHECK((gamma_m(x, 1) - (x + x.transpose())).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((gamma_m(x, 2) - (x * x + 2 * x * x.transpose() + x.transpose() * x.transpose())).cwiseAbs().maxCoeff() <
        1e-15);
}

TEST_CASE("Sigma_T: frozen reference and quadrature route") {
  const auto g = sigma_T(xi3(), 0.7);
  Mat ref(3, 3);
  ref << 0.73201418277271335, 0.12872376850036893, 0.169412807366283, 0.12872376850036893, 0.74894967113626409,
      0.1922744666910263, 0.169412807366283, 0.1922744666910263, 0.74773473375345612;
  CHECK((g.sigma - ref).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(g.tail_bound <= 1e-14);
  CHECK((sigma_T_quadrature(xi3(), 0.7) - ref).cwiseAbs().maxCoeff() < 1e-11);
  CHECK(exact_entropy(g, SubsetState(3, {0, 2})) == doctest::Approx(0.028549897896957277).epsilon(1e-11));
}

TEST_CASE("Sigma_T series and quadrature agree on random instances") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto xi = sample_random_interaction(6, seed, 0.6);
    for (double T : {0.1, 0.5, 2.0}) {
      const auto g = sigma_T(xi, T);
      const Mat q = sigma_T_quadrature(xi, T, 800);
      CHECK((g.sigma - q).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, q.cwiseAbs().maxCoeff()));
      CHECK(g.sigma.isApprox(g.sigma.transpose(), 0.0));
    }
  }
}

TEST_CASE("xi = 0 gives Sigma_T = T I and zero entropy") {
  const auto g = sigma_T(InteractionMatrix::from_dense(Mat::Zero(4, 4)), 1.5);
  CHECK(g.sigma == 1.5 * Mat::Identity(4, 4));
  CHECK(exact_entropy(g, SubsetState::full(4)) == 0.0);
  CHECK(std::isinf(small_time_window(0.0)));
}

TEST_CASE("two-site symmetric closed form") {
  Mat m = Mat::Zero(2, 2);
  m(0, 1) = m(1, 0) = 0.5;
  const auto g = sigma_T(InteractionMatrix::from_dense(m), 0.5);
  CHECK(exact_entropy(g, SubsetState::full(2)) == doctest::Approx(0.031795559994737986).epsilon(1e-12));
  CHECK(g.rho == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("entropy agrees with the relative-entropy formula") {
  const auto g = sigma_T(sample_random_interaction(5, 3, 0.7), 0.4);
  const SubsetState v(5, {0, 2, 3});
  Mat sub(3, 3);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) sub(a, b) = g.sigma(v.members()[a], v.members()[b]);
  CHECK(exact_entropy(g, v) == doctest::Approx(gaussian_kl(0.4 * Mat::Identity(3, 3), sub)).epsilon(1e-11));
}

TEST_CASE("entropy is monotone under inclusion") {
  const auto g = sigma_T(sample_random_interaction(6, 9, 0.6), 0.5);
  for (std::uint64_t mask = 1; mask < 64; ++mask)
    for (int j = 0; j < 6; ++j)
      if (!(mask >> j & 1u))
        CHECK(exact_entropy(g, SubsetState::from_mask(6, mask)) <=
              exact_entropy(g, SubsetState::from_mask(6, mask | 1u << j)) + 1e-15);
}

TEST_CASE("sandwich inside the small-time window") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto xi = sample_random_interaction(6, seed, 0.6, true);
    const double T = 0.9 * small_time_window(operator_norm(xi));
    const auto g = sigma_T(xi, T);
    for (std::uint64_t mask = 1; mask < 64; ++mask) {
      const auto e = entropy_bounds(g, SubsetState::from_mask(6, mask));
      CHECK(e.in_window);
      CHECK(e.lower <= e.exact + 1e-15);
      CHECK(e.exact <= e.upper + 1e-15);
    }
  }
}

TEST_CASE("avg_trace_sq matches enumeration") {
  for (int n : {1, 2, 5, 9}) {
    Mat a = Mat::Random(n, n);
    a = (a + a.transpose()).eval();
    for (int k = 1; k <= n; ++k) CHECK(avg_trace_sq(a, k) == doctest::Approx(brute_avg_trace(a, k)).epsilon(1e-12));
  }
}

TEST_CASE("D_T: frozen reference and triangular case") {
  CHECK(d_T(xi3(), 0.9) == doctest::Approx(0.0013742962974958505).epsilon(1e-11));
  // strictly lower triangular xi is nilpotent with zero-diagonal powers
  CHECK(d_T(build_sequential(6), 1.0) == 0.0);
  const Mat x = build_sequential(6).dense();
  CHECK(x.rowwise().squaredNorm().squaredNorm() != 0.0);
}

TEST_CASE("average entropy: enumeration, frozen value and sampling") {
  const auto g = sigma_T(xi3(), 0.7);
  const auto a = avg_entropy_enumerate(g, 2);
  CHECK(a.count == 3);
  CHECK(a.value == doctest::Approx(0.027332879605228455).epsilon(1e-11));
  const auto g8 = sigma_T(sample_random_interaction(8, 2, 0.6), 0.5);
  const auto e = avg_entropy_enumerate(g8, 3, 2);
  const auto s = avg_entropy_sample(g8, 3, 20000, 5, 2);
  REQUIRE(s.std_error.has_value());
  CHECK(std::abs(s.value - e.value) < 4 * *s.std_error);
  CHECK(average_json(s) == average_json(avg_entropy_sample(g8, 3, 20000, 5, 1)));
}

TEST_CASE("average sandwich brackets the enumerated average") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto xi = sample_random_interaction(7, seed, 0.6);
    const double T = 0.9 * small_time_window(operator_norm(xi));
    const auto g = sigma_T(xi, T);
    for (int k = 1; k <= 4; ++k) {
      const auto s = average_sandwich(g, k);
      const double avg = avg_entropy_enumerate(g, k).value;
      CHECK(s.lower <= avg);
      CHECK(avg <= s.upper);
    }
  }
}

TEST_CASE("h upper coefficient") {
  CHECK(h_upper_coefficient(0.0, 1.0) == 0.5);
  const double c = h_upper_coefficient(1.0, 0.3);
  for (double x = std::exp(-0.6) - 1 + 1e-9; x < 5; x += 0.01) CHECK(h_function(x) <= c * x * x + 1e-15);
}

TEST_CASE("certification constants and table output") {
  const auto g = sigma_T(xi3(), 0.7);
  const auto c = certification_constants(g);
  CHECK(c.gamma == doctest::Approx(1.4));
  CHECK(c.M == doctest::Approx(0.74894967113626409).epsilon(1e-12));
  CHECK(c.sigma == 1.0);
  std::ostringstream os;
  write_entropy_table(os, {entropy_bounds(g, SubsetState(3, {0, 1}))});
  CHECK(os.str().rfind("v,exact,lower,upper\n0 1,", 0) == 0);
}

TEST_CASE("zero interaction has an unbounded window but needs a finite horizon") {
  const auto zero = InteractionMatrix::from_dense(Mat::Zero(3, 3));
  CHECK(std::isinf(small_time_window(operator_norm(zero))));
  CHECK_THROWS_AS(sigma_T(zero, small_time_window(0.0)), Error);
  const auto g = sigma_T(zero, 0.7);
  CHECK((g.sigma - 0.7 * Mat::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(exact_entropy(g, SubsetState(3, {0, 2})) == 0.0);
}
