#include <doctest.h>

#include "chaoscope/verify.hpp"

using namespace chaoscope;

TEST_CASE("verification suites pass on small ensembles") {
  const auto gen = verify_generator(4, 1, 7);
  CHECK(gen.pass());
  CHECK(gen.evaluations() > 0);
  CHECK(verify_expectations(2, 2, {0.1, 1.0}, 6).pass());
  CHECK(verify_gaussian(4, 3, 7).pass());
  CHECK(verify_gaussian_average(3, 4, 7).pass());
  CHECK(verify_certification(2, 5, 6, 0.5).pass());
}

TEST_CASE("report bookkeeping") {
  VerifyReport r;
  CHECK(r.pass());
  r.checks.push_back({"s", "c", 0, 10, 0.5, 1e-9, "v=0"});
  r.checks.push_back({"s", "d", 1, 5, -2e-9, 1e-9, "v=1"});
  CHECK_FALSE(r.pass());
  CHECK(r.evaluations() == 15);
  CHECK(r.min_slack() == -2e-9);
  const auto j = r.to_json();
  CHECK(j["pass"] == false);
  CHECK(j["checks"].size() == 2);
}

TEST_CASE("instances are reproducible") {
  const auto a = verify_instance(9, 3, 10, false), b = verify_instance(9, 3, 10, false);
  CHECK(Mat(a.sparse()) == Mat(b.sparse()));
  CHECK(validate(a, true).ok());
}

TEST_CASE("unknown suite") { CHECK_THROWS_AS(run_suite("nope", 1, 1), Error); }
