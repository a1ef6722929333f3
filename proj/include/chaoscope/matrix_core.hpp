#pragma once

#include "chaoscope/common.hpp"
#include "chaoscope/constants.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace chaoscope {

// Simple undirected graph on vertices 0..n-1 without loops or multi-edges.
class Graph {
 public:
  Graph() = default;
  Graph(int n, std::vector<std::pair<int, int>> edges);

  int size() const { return n_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<int>& degrees() const { return degree_; }
  std::size_t edge_count() const { return edges_.size(); }
  int min_degree() const;
  int max_degree() const;

 private:
  int n_ = 0;
  std::vector<std::pair<int, int>> edges_;  // u < v, sorted
  std::vector<int> degree_;
};

// Nonnegative interaction weights xi_ij. Entries are stored as given; the
// modelling hypotheses (zero diagonal, row/column sums at most one) are checked
// by validate(). Storage is CSR with a cached dense copy for small n.
class InteractionMatrix {
 public:
  static constexpr Index dense_mirror_limit = 64;

  InteractionMatrix() = default;
  explicit InteractionMatrix(SparseRM m);
  static InteractionMatrix from_dense(const Mat& m);
  static InteractionMatrix from_triplets(Index n, const std::vector<Eigen::Triplet<double>>& t);

  Index size() const { return sparse_.rows(); }
  const SparseRM& sparse() const { return sparse_; }
  Mat dense() const;
  double operator()(Index i, Index j) const;

  const Vec& row_sums() const { return row_sums_; }
  const Vec& col_sums() const { return col_sums_; }
  // delta_i = max_j xi_ij
  const Vec& row_max() const { return row_max_; }
  // delta = max_ij xi_ij
  double delta() const { return delta_; }
  Index nonzeros() const { return sparse_.nonZeros(); }
  bool is_symmetric(double tol = 0.0) const;
  std::vector<Eigen::Triplet<double>> triplets() const;

 private:
  SparseRM sparse_;
  std::optional<Mat> dense_;
  Vec row_sums_, col_sums_, row_max_;
  double delta_ = 0.0;
};

// Subset of {0..n-1}, stored as sorted member list.
class SubsetState {
 public:
  SubsetState() = default;
  SubsetState(int n, std::vector<int> members);
  static SubsetState from_mask(int n, std::uint64_t mask);
  static SubsetState full(int n);

  int universe() const { return n_; }
  int size() const { return static_cast<int>(members_.size()); }
  bool empty() const { return members_.empty(); }
  const std::vector<int>& members() const { return members_; }
  bool contains(int i) const;
  std::uint64_t mask() const;
  Vec indicator() const;
  std::string to_string() const;

 private:
  int n_ = 0;
  std::vector<int> members_;
};

// Parses "0,2,5" (whitespace tolerant) into a subset of {0..n-1}.
SubsetState parse_subset(int n, const std::string& text);

InteractionMatrix build_mean_field(int n);
InteractionMatrix build_random_walk(const Graph& g);
InteractionMatrix build_scaled_adjacency(const Graph& g, double scale);
InteractionMatrix build_rank_one(const Vec& alpha, const Vec& beta);
InteractionMatrix build_sequential(int n);

Graph sample_erdos_renyi(int n, double p, std::uint64_t seed);
// Uniform-ish random m-regular simple graph (stub pairing with local rejection and restarts).
Graph sample_random_regular(int n, int m, std::uint64_t seed);
// Random xi with zero diagonal and the given fill density. With stochastic = false
// the matrix is scaled so every row and column sum is at most one; otherwise each
// row is normalised to sum exactly one.
InteractionMatrix sample_random_interaction(int n, std::uint64_t seed, double density = 0.6, bool stochastic = false);

struct ValidityReport {
  bool nonnegative = true;
  bool zero_diagonal = true;
  bool rows_ok = true;
  std::optional<bool> columns_ok;
  std::vector<std::pair<Index, Index>> negative_entries;
  std::vector<Index> nonzero_diagonal;
  std::vector<Index> bad_rows;
  std::vector<Index> bad_columns;
  double max_row_sum = 0.0;
  double max_col_sum = 0.0;

  bool ok() const { return nonnegative && zero_diagonal && rows_ok && columns_ok.value_or(true); }
};

inline constexpr double sum_tolerance = 1e-12;

ValidityReport validate(const InteractionMatrix& xi, bool check_columns);

// p_xi = sum_ij xi_ij^2 (xi_ij + xi_ji) + sum_i (sum_j xi_ij^2 + xi_ji^2)^2
double p_xi(const InteractionMatrix& xi);
// (delta|v|+1)(sum_{i,j in v} xi_ij^2 + delta sum_{i,j in v}(xi^T xi + xi xi^T)_ij + delta^2 |v|)
double q_xi(const InteractionMatrix& xi, const SubsetState& v);
// sum_{i in v} (sum_{j in v} xi_ij)^2
double row_mass_sq(const InteractionMatrix& xi, const SubsetState& v);
// sum_{i,j in v} xi_ij^2
double entry_sq_sum(const InteractionMatrix& xi, const SubsetState& v);

double C_of_v(const InteractionMatrix& xi, const SubsetState& v, const ModelConstants& c);
double Chat_of_v(const InteractionMatrix& xi, const SubsetState& v, const ModelConstants& c, double h3);

}  // namespace chaoscope
