#pragma once

#include "chaoscope/constants.hpp"
#include "chaoscope/matrix_core.hpp"
#include "chaoscope/rng.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace chaoscope {

// Growth process on subsets of [n]: from v, vertex j (not in v) joins at rate
// kappa * sum_{i in v} xi_ij.
struct PercolationModel {
  PercolationModel(InteractionMatrix xi_, double kappa_);
  int size() const { return static_cast<int>(xi.size()); }

  InteractionMatrix xi;
  double kappa;
};

inline constexpr int default_exact_limit = 16;

// A real function on all 2^n subsets, indexed by bitmask.
struct SubsetFunction {
  SubsetFunction() = default;
  SubsetFunction(int n_, Vec values_);
  static SubsetFunction tabulate(int n, const std::function<double(const SubsetState&)>& f);
  double operator()(const SubsetState& v) const { return values(static_cast<Index>(v.mask())); }

  int n = 0;
  Vec values;
};

// Named functionals of the subset process:
//   size^p       |v|^p
//   linear^p     <1_v, x> |v|^p
//   quadratic^p  <1_v, G 1_v> |v|^p
//   C, Chat      the entropy-source terms (need constants, and h3 for Chat)
struct Functional {
  enum class Kind { size, linear, quadratic, C, Chat };

  static Functional parse(const std::string& name);
  std::string name() const;
  double operator()(const InteractionMatrix& xi, const SubsetState& v) const;
  SubsetFunction tabulate(const InteractionMatrix& xi) const;

  Kind kind = Kind::size;
  int power = 1;
  Vec x;
  Mat G;
  ModelConstants constants;
  double h3 = 0.0;
};

// Dense generator on the subset lattice. Memory is 2^n * n doubles.
class ExactEngine {
 public:
  explicit ExactEngine(const PercolationModel& model, int max_n = default_exact_limit);

  int size() const { return n_; }
  std::size_t states() const { return std::size_t{1} << n_; }
  double uniformization_rate() const { return lambda_; }

  Vec apply_generator(const Vec& f) const;
  // e^{tA} f for every starting state.
  Vec expectation(const Vec& f, double t, double tol) const;
  // int_0^T e^{-r s} e^{sA} f ds for every starting state.
  Vec integrated(const Vec& f, double T, double discount, double tol) const;

 private:
  Vec step(const Vec& f) const;

  int n_;
  std::vector<double> rates_;  // rates_[mask * n + j], zero when j is in mask
  Vec out_rate_;
  double lambda_ = 0.0;
};

SubsetFunction generator_apply(const PercolationModel& model, const SubsetFunction& f,
                               int max_n = default_exact_limit);
double exact_expectation(const PercolationModel& model, const SubsetFunction& f, const SubsetState& v, double t,
                         double tol = 1e-12, int max_n = default_exact_limit);

// E_v[f(|X_t|)] for xi with constant off-diagonal entries, where |X_t| is itself
// a birth chain with rate kappa * c * k (n - k). f has n + 1 entries.
double exact_cardinality_expectation(const PercolationModel& model, const Vec& f_of_size, int k0, double t,
                                     double tol = 1e-12);

struct Trajectory {
  SubsetState initial;
  std::vector<double> times;
  std::vector<int> added;

  SubsetState at(double t) const;
};

Trajectory simulate(const PercolationModel& model, const SubsetState& v, double t, Stream& rng);
Trajectory simulate(const PercolationModel& model, const SubsetState& v, double t, std::uint64_t seed);
// First-passage percolation with i.i.d. exponential edge clocks of rate kappa*xi_ij;
// requires symmetric xi.
Trajectory fpp_simulate(const PercolationModel& model, const SubsetState& v, double t, Stream& rng);
Trajectory fpp_simulate(const PercolationModel& model, const SubsetState& v, double t, std::uint64_t seed);

enum class McEngine { gillespie, fpp };

struct McEstimate {
  std::string functional;
  SubsetState v;
  double t = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t reps = 0;
  std::uint64_t seed = 0;
};

McEstimate mc_expectation(const PercolationModel& model, const Functional& f, const SubsetState& v, double t,
                          std::int64_t reps, std::uint64_t seed, int threads = 1,
                          McEngine engine = McEngine::gillespie);
// Bitmasks of X_t over reps replications (n <= 64).
std::vector<std::uint64_t> sample_final_states(const PercolationModel& model, const SubsetState& v, double t,
                                               std::int64_t reps, std::uint64_t seed, int threads = 1,
                                               McEngine engine = McEngine::gillespie);

enum class Family { ia, ib, ic, iia, iib, iic, iiia, iiib };
Family parse_family(const std::string& s);
std::string family_name(Family f);
inline constexpr Family all_families[] = {Family::ia,  Family::ib,  Family::ic,   Family::iia,
                                          Family::iib, Family::iic, Family::iiia, Family::iiib};

struct Payload {
  Vec x;
  Mat G;
};

// Right-hand sides of the expectation estimates for the growth process, with the
// model's kappa in the exponent. Construction precomputes everything that does
// not depend on v.
class ExpectationBound {
 public:
  ExpectationBound(const PercolationModel& model, Family family, double t, const Payload& payload);
  double operator()(const SubsetState& v) const;
  // The functional whose expectation is being bounded.
  Functional target() const;

 private:
  Family family_;
  double kappa_, t_;
  Payload payload_;
  Vec w_;  // linear part, paired with 1_v
  Mat q_;  // quadratic part, paired with 1_v on both sides
};

double expectation_bound(const PercolationModel& model, Family family, const SubsetState& v, double t,
                         const Payload& payload);

// Second moment of a Yule process started from k with per-individual rate `rate`.
double yule_second_moment(int k, double rate, double t);

void write_trajectory_csv(std::ostream& out, const Trajectory& tr);
std::string estimate_json(const McEstimate& e);

}  // namespace chaoscope
