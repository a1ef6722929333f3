#include <doctest.h>

#include "chaoscope/linalg.hpp"
#include "chaoscope/percolation.hpp"

#include <cmath>
#include <sstream>

using namespace chaoscope;

namespace {

// Reference 3x3 instance shared with tests/oracles/reference_values.py.
InteractionMatrix xi3() {
  Mat m(3, 3);
  m << 0.0, 0.3, 0.2, 0.1, 0.0, 0.5, 0.4, 0.2, 0.0;
  return InteractionMatrix::from_dense(m);
}

// Full 2^n x 2^n generator, built state by state from the jump rates.
Mat dense_generator(const PercolationModel& model) {
  const int n = model.size();
  const Index S = Index{1} << n;
  Mat a = Mat::Zero(S, S);
  for (Index m = 0; m < S; ++m)
    for (int j = 0; j < n; ++j) {
      if (m >> j & 1) continue;
      double r = 0.0;
      for (int i = 0; i < n; ++i)
        if (m >> i & 1) r += model.kappa * model.xi(i, j);
      a(m, m | (Index{1} << j)) += r;
      a(m, m) -= r;
    }
  return a;
}

SubsetFunction size_pow(int n, int p) {
  return SubsetFunction::tabulate(n, [p](const SubsetState& v) { return std::pow(v.size(), p); });
}

}  // namespace

TEST_CASE("functional names parse") {
  CHECK(Functional::parse("size").power == 1);
  CHECK(Functional::parse("size^3").power == 3);
  CHECK(Functional::parse("linear").kind == Functional::Kind::linear);
  CHECK(Functional::parse("quadratic^1").name() == "quadratic^1");
  CHECK(Functional::parse("Chat").kind == Functional::Kind::Chat);
  CHECK_THROWS_AS(Functional::parse("C^2"), Error);
  CHECK_THROWS_AS(Functional::parse("size^x"), Error);
  CHECK_THROWS_AS(Functional::parse("cubic"), Error);
}

TEST_CASE("generator matches the dense jump-rate matrix") {
  const PercolationModel model(sample_random_interaction(6, 2, 0.5), 1.7);
  const auto f = SubsetFunction::tabulate(6, [](const SubsetState& v) { return std::sin(1.0 + v.mask()); });
  const Vec direct = dense_generator(model) * f.values;
  CHECK((generator_apply(model, f).values - direct).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("two-site closed form") {
  Mat m = Mat::Zero(2, 2);
  m(0, 1) = 0.6;
  const PercolationModel model(InteractionMatrix::from_dense(m), 1.5);
  const SubsetState v(2, {0});
  for (double t : {0.0, 0.3, 1.0, 5.0})
    CHECK(exact_expectation(model, size_pow(2, 1), v, t) ==
          doctest::Approx(2.0 - std::exp(-1.5 * 0.6 * t)).epsilon(1e-12));
  // site 1 never infects site 0
  CHECK(exact_expectation(model, size_pow(2, 1), SubsetState(2, {1}), 3.0) == doctest::Approx(1.0));
}

TEST_CASE("t = 0 returns F(v) and the full set is absorbing") {
  const PercolationModel model(sample_random_interaction(5, 8, 0.7), 2.0);
  const auto f = size_pow(5, 2);
  for (std::uint64_t mask : {1u, 10u, 31u}) {
    const auto v = SubsetState::from_mask(5, mask);
    CHECK(exact_expectation(model, f, v, 0.0) == f(v));
  }
  CHECK(exact_expectation(model, f, SubsetState::full(5), 4.0) == doctest::Approx(25.0).epsilon(1e-14));
}

TEST_CASE("frozen reference values on the 3-site instance") {
  const PercolationModel model(xi3(), 1.3);
  CHECK(exact_expectation(model, size_pow(3, 2), SubsetState(3, {0}), 0.8) ==
        doctest::Approx(2.7881834305572086).epsilon(1e-11));

  ModelConstants c;
  c.M = 0.7;
  c.sigma = 1.2;
  Functional C;
  C.kind = Functional::Kind::C;
  C.constants = c;
  ExactEngine eng(model);
  const Vec tab = C.tabulate(model.xi).values;
  CHECK(eng.integrated(tab, 1.1, 0.0, 1e-14)(2) == doctest::Approx(0.07376730359811363).epsilon(1e-11));
  CHECK(eng.integrated(tab, 1.1, 0.4, 1e-14)(2) == doctest::Approx(0.055051842663631764).epsilon(1e-11));
}

TEST_CASE("uniformization agrees with a dense matrix exponential") {
  const PercolationModel model(sample_random_interaction(7, 5, 0.5), 2.5);
  ExactEngine eng(model);
  const auto f = SubsetFunction::tabulate(7, [](const SubsetState& v) { return std::cos(0.3 * v.mask()); });
  const Mat a = dense_generator(model);
  for (double t : {0.05, 0.7, 3.0}) {
    const Vec direct = expm_action(a, t, f.values, 1e-15);
    CHECK((eng.expectation(f.values, t, 1e-14) - direct).cwiseAbs().maxCoeff() < 1e-11);
  }
}

TEST_CASE("exact time integral agrees with adaptive quadrature") {
  const PercolationModel model(sample_random_interaction(5, 12, 0.6), 1.1);
  ExactEngine eng(model);
  const Vec f = size_pow(5, 2).values;
  for (double r : {0.0, 0.9}) {
    const Vec exact = eng.integrated(f, 2.0, r, 1e-14);
    const Vec quad = adaptive_simpson([&](double s) -> Vec { return std::exp(-r * s) * eng.expectation(f, s, 1e-14); },
                                      0.0, 2.0, 1e-12);
    CHECK((exact - quad).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK(eng.integrated(f, 0.0, 0.0, 1e-12).isZero());
}

TEST_CASE("expectations of monotone functionals grow in t") {
  const PercolationModel model(sample_random_interaction(6, 21, 0.5), 1.0);
  ExactEngine eng(model);
  const Vec f = size_pow(6, 3).values;
  Vec prev = f;
  for (double t = 0.25; t <= 3.0; t += 0.25) {
    const Vec cur = eng.expectation(f, t, 1e-13);
    CHECK(((cur - prev).array() >= -1e-12).all());
    prev = cur;
  }
}

TEST_CASE("exact engine refuses large n") {
  const PercolationModel model(build_mean_field(17), 1.0);
  try {
    ExactEngine eng(model);
    FAIL("expected engine_too_large");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::engine_too_large);
  }
}

TEST_CASE("cardinality chain matches the full engine on mean-field xi") {
  const PercolationModel model(build_mean_field(8), 1.4);
  Vec fs(9);
  for (int k = 0; k <= 8; ++k) fs(k) = k * k;
  for (double t : {0.2, 1.0, 3.0})
    for (int k : {1, 3}) {
      std::vector<int> m(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) m[static_cast<std::size_t>(i)] = i;
      CHECK(exact_cardinality_expectation(model, fs, k, t) ==
            doctest::Approx(exact_expectation(model, size_pow(8, 2), SubsetState(8, m), t)).epsilon(1e-11));
    }
  CHECK_THROWS_AS(exact_cardinality_expectation(PercolationModel(xi3(), 1.0), Vec::Zero(4), 1, 1.0), Error);
}

TEST_CASE("Yule second moment") {
  CHECK(yule_second_moment(2, 1.0, std::log(2.0)) == doctest::Approx(20.0).epsilon(1e-14));
  CHECK(yule_second_moment(3, 2.0, 0.0) == 9.0);
}

TEST_CASE("expectation bounds: frozen reference values") {
  const PercolationModel model(xi3(), 1.3);
  Payload p;
  p.x = Vec(3);
  p.x << 0.5, 1.0, 2.0;
  Mat x = xi3().dense();
  p.G = x.cwiseAbs2();
  const SubsetState v(3, {0, 1});
  CHECK(expectation_bound(model, Family::iiia, v, 0.6, p) == doctest::Approx(0.5869067107162309).epsilon(1e-7));
  CHECK(expectation_bound(model, Family::iiib, v, 0.6, p) == doctest::Approx(7.661918323622158).epsilon(1e-7));
  CHECK(expectation_bound(model, Family::iic, v, 0.6, p) == doctest::Approx(345.97306853060644).epsilon(1e-11));
}

TEST_CASE("expectation bounds: polynomial families") {
  const PercolationModel model(build_mean_field(6), 0.5);
  const SubsetState v(6, {0, 1, 2, 3});
  CHECK(expectation_bound(model, Family::ia, v, 2.0, {}) == doctest::Approx(4 * std::exp(1.0)));
  CHECK(expectation_bound(model, Family::ib, v, 2.0, {}) == doctest::Approx(32 * std::exp(2.0)));
  CHECK(expectation_bound(model, Family::ic, v, 2.0, {}) == doctest::Approx(512 * std::exp(3.0)));
}

TEST_CASE("expectation bounds hold and are tight at t = 0") {
  const PercolationModel model(sample_random_interaction(6, 31, 0.6), 1.0);
  Payload p;
  p.x = Vec::LinSpaced(6, 0.1, 1.0);
  p.G = Mat::Constant(6, 6, 0.2) + Mat::Identity(6, 6);
  ExactEngine eng(model);
  for (Family fam : all_families)
    for (double t : {0.0, 0.5, 2.0}) {
      const ExpectationBound bound(model, fam, t, p);
      const Vec lhs = eng.expectation(bound.target().tabulate(model.xi).values, t, 1e-13);
      for (std::uint64_t mask = 1; mask < 64; ++mask) {
        const auto v = SubsetState::from_mask(6, mask);
        CHECK(lhs(static_cast<Index>(mask)) <= bound(v) * (1 + 1e-8));
      }
    }
  // (iia) and (iiia) are equalities at t = 0
  const SubsetState v(6, {1, 4});
  const ExpectationBound iia(model, Family::iia, 0.0, p);
  CHECK(iia(v) == doctest::Approx(iia.target()(model.xi, v)));
}

TEST_CASE("expectation bounds require row sums at most one") {
  Mat m = Mat::Zero(2, 2);
  m(0, 1) = 1.5;
  const PercolationModel model(InteractionMatrix::from_dense(m), 1.0);
  CHECK_THROWS_AS(expectation_bound(model, Family::ia, SubsetState(2, {0}), 1.0, {}), Error);
}

TEST_CASE("trajectories") {
  const PercolationModel model(build_mean_field(5), 1.0);
  const auto tr = simulate(model, SubsetState(5, {2}), 10.0, 42);
  REQUIRE(tr.times.size() == tr.added.size());
  for (std::size_t k = 1; k < tr.times.size(); ++k) CHECK(tr.times[k] > tr.times[k - 1]);
  CHECK(tr.at(0.0).members() == std::vector<int>{2});
  CHECK(tr.at(10.0).size() == 1 + static_cast<int>(tr.times.size()));
  const auto again = simulate(model, SubsetState(5, {2}), 10.0, 42);
  CHECK(again.times == tr.times);
  CHECK(again.added == tr.added);
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  CHECK(os.str().rfind("time,added_index\n", 0) == 0);
}

TEST_CASE("Monte Carlo agrees with the exact engine") {
  const PercolationModel model(build_scaled_adjacency(Graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}, {0, 2}}), 0.4),
                               1.3);
  const SubsetState v(5, {0});
  const double t = 1.2;
  const double exact = exact_expectation(model, size_pow(5, 2), v, t);
  for (McEngine e : {McEngine::gillespie, McEngine::fpp}) {
    const auto est = mc_expectation(model, Functional::parse("size^2"), v, t, 40000, 17, 2, e);
    CHECK(std::abs(est.mean - exact) < 4.0 * est.std_error);
  }
}

TEST_CASE("Monte Carlo output does not depend on the thread count") {
  const PercolationModel model(sample_random_interaction(8, 3, 0.5), 2.0);
  const SubsetState v(8, {0, 5});
  const auto a = mc_expectation(model, Functional::parse("size^2"), v, 1.0, 3000, 9, 1);
  const auto b = mc_expectation(model, Functional::parse("size^2"), v, 1.0, 3000, 9, 4);
  CHECK(estimate_json(a) == estimate_json(b));
  CHECK(sample_final_states(model, v, 1.0, 500, 9, 1) == sample_final_states(model, v, 1.0, 500, 9, 3));
  CHECK_THROWS_AS(mc_expectation(model, Functional::parse("size"), v, 1.0, 100, 1, 1, McEngine::fpp), Error);
}
