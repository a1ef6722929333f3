#include "chaoscope/matrix_core.hpp"

#include "chaoscope/rng.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace chaoscope {

Graph::Graph(int n, std::vector<std::pair<int, int>> edges) : n_(n), degree_(static_cast<std::size_t>(std::max(n, 0)), 0) {
  require(n >= 1, ErrorCode::invalid_size, "graph needs at least one vertex");
  for (auto& [u, v] : edges) {
    require(u >= 0 && v >= 0 && u < n && v < n, ErrorCode::invalid_graph,
            "edge (" + std::to_string(u) + "," + std::to_string(v) + ") out of range");
    require(u != v, ErrorCode::invalid_graph, "self loop at " + std::to_string(u));
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  for (std::size_t k = 1; k < edges.size(); ++k)
    require(edges[k] != edges[k - 1], ErrorCode::invalid_graph,
            "duplicate edge (" + std::to_string(edges[k].first) + "," + std::to_string(edges[k].second) + ")");
  for (auto [u, v] : edges) {
    ++degree_[u];
    ++degree_[v];
  }
  edges_ = std::move(edges);
}

int Graph::min_degree() const { return degree_.empty() ? 0 : *std::min_element(degree_.begin(), degree_.end()); }
int Graph::max_degree() const { return degree_.empty() ? 0 : *std::max_element(degree_.begin(), degree_.end()); }

InteractionMatrix::InteractionMatrix(SparseRM m) : sparse_(std::move(m)) {
  require(sparse_.rows() == sparse_.cols(), ErrorCode::invalid_size, "interaction matrix must be square");
  sparse_.prune(0.0);
  sparse_.makeCompressed();
  const Index n = sparse_.rows();
  row_sums_ = Vec::Zero(n);
  col_sums_ = Vec::Zero(n);
  row_max_ = Vec::Zero(n);
  for (Index i = 0; i < n; ++i)
    for (SparseRM::InnerIterator it(sparse_, i); it; ++it) {
      require(std::isfinite(it.value()), ErrorCode::invalid_argument, "non-finite entry");
      row_sums_(i) += it.value();
      col_sums_(it.col()) += it.value();
      row_max_(i) = std::max(row_max_(i), it.value());
    }
  delta_ = n ? row_max_.maxCoeff() : 0.0;
  if (n < dense_mirror_limit) dense_ = Mat(sparse_);
}

InteractionMatrix InteractionMatrix::from_dense(const Mat& m) {
  require(m.rows() == m.cols(), ErrorCode::invalid_size, "interaction matrix must be square");
  return InteractionMatrix(SparseRM(m.sparseView(1.0, 0.0)));
}

InteractionMatrix InteractionMatrix::from_triplets(Index n, const std::vector<Eigen::Triplet<double>>& t) {
  require(n >= 1, ErrorCode::invalid_size, "matrix dimension must be positive");
  for (const auto& e : t)
    require(e.row() >= 0 && e.col() >= 0 && e.row() < n && e.col() < n, ErrorCode::invalid_argument,
            "entry index out of range");
  SparseRM m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return InteractionMatrix(std::move(m));
}

Mat InteractionMatrix::dense() const { return dense_ ? *dense_ : Mat(sparse_); }

double InteractionMatrix::operator()(Index i, Index j) const {
  if (dense_) return (*dense_)(i, j);
  return sparse_.coeff(i, j);
}

bool InteractionMatrix::is_symmetric(double tol) const {
  const SparseRM t = sparse_.transpose();
  const SparseRM d = sparse_ - t;
  for (Index k = 0; k < d.outerSize(); ++k)
    for (SparseRM::InnerIterator it(d, k); it; ++it)
      if (std::abs(it.value()) > tol) return false;
  return true;
}

std::vector<Eigen::Triplet<double>> InteractionMatrix::triplets() const {
  std::vector<Eigen::Triplet<double>> out;
  out.reserve(static_cast<std::size_t>(sparse_.nonZeros()));
  for (Index i = 0; i < sparse_.outerSize(); ++i)
    for (SparseRM::InnerIterator it(sparse_, i); it; ++it) out.emplace_back(i, it.col(), it.value());
  return out;
}

SubsetState::SubsetState(int n, std::vector<int> members) : n_(n), members_(std::move(members)) {
  require(n >= 0, ErrorCode::invalid_size, "negative universe size");
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  for (int i : members_)
    require(i >= 0 && i < n, ErrorCode::invalid_argument, "subset member " + std::to_string(i) + " out of range");
}

SubsetState SubsetState::from_mask(int n, std::uint64_t mask) {
  require(n <= 64, ErrorCode::invalid_size, "mask form needs n <= 64");
  std::vector<int> m;
  for (int i = 0; i < n; ++i)
    if (mask >> i & 1u) m.push_back(i);
  return SubsetState(n, std::move(m));
}

SubsetState SubsetState::full(int n) {
  std::vector<int> m(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = i;
  return SubsetState(n, std::move(m));
}

bool SubsetState::contains(int i) const { return std::binary_search(members_.begin(), members_.end(), i); }

std::uint64_t SubsetState::mask() const {
  require(n_ <= 64, ErrorCode::invalid_size, "mask form needs n <= 64");
  std::uint64_t m = 0;
  for (int i : members_) m |= std::uint64_t{1} << i;
  return m;
}

Vec SubsetState::indicator() const {
  Vec e = Vec::Zero(n_);
  for (int i : members_) e(i) = 1.0;
  return e;
}

std::string SubsetState::to_string() const {
  std::string s;
  for (std::size_t k = 0; k < members_.size(); ++k) {
    if (k) s += ' ';
    s += std::to_string(members_[k]);
  }
  return s;
}

SubsetState parse_subset(int n, const std::string& text) {
  std::vector<int> m;
  std::string tok;
  std::stringstream ss(text);
  while (std::getline(ss, tok, ',')) {
    std::stringstream ts(tok);
    std::string word;
    while (ts >> word) {
      try {
        std::size_t pos = 0;
        m.push_back(std::stoi(word, &pos));
        require(pos == word.size(), ErrorCode::parse_error, "bad subset member '" + word + "'");
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::parse_error, "bad subset member '" + word + "'");
      }
    }
  }
  return SubsetState(n, std::move(m));
}

InteractionMatrix build_mean_field(int n) {
  require(n >= 2, ErrorCode::invalid_size, "mean-field matrix needs n >= 2");
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1));
  const double w = 1.0 / (n - 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) t.emplace_back(i, j, w);
  return InteractionMatrix::from_triplets(n, t);
}

InteractionMatrix build_random_walk(const Graph& g) {
  std::vector<Eigen::Triplet<double>> t;
  const auto& d = g.degrees();
  for (auto [u, v] : g.edges()) {
    t.emplace_back(u, v, 1.0 / d[u]);
    t.emplace_back(v, u, 1.0 / d[v]);
  }
  return InteractionMatrix::from_triplets(g.size(), t);
}

InteractionMatrix build_scaled_adjacency(const Graph& g, double scale) {
  require(scale > 0.0 && std::isfinite(scale), ErrorCode::invalid_scale, "scale must be positive");
  std::vector<Eigen::Triplet<double>> t;
  for (auto [u, v] : g.edges()) {
    t.emplace_back(u, v, scale);
    t.emplace_back(v, u, scale);
  }
  return InteractionMatrix::from_triplets(g.size(), t);
}

InteractionMatrix build_rank_one(const Vec& alpha, const Vec& beta) {
  require(alpha.size() == beta.size(), ErrorCode::length_mismatch, "alpha and beta lengths differ");
  require(alpha.size() >= 1, ErrorCode::invalid_size, "empty rank-one factors");
  require((alpha.array() >= 0).all() && (beta.array() >= 0).all(), ErrorCode::invalid_argument,
          "rank-one factors must be nonnegative");
  const Index n = alpha.size();
  std::vector<Eigen::Triplet<double>> t;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (i != j && alpha(i) * beta(j) != 0.0) t.emplace_back(i, j, alpha(i) * beta(j));
  return InteractionMatrix::from_triplets(n, t);
}

InteractionMatrix build_sequential(int n) {
  require(n >= 1, ErrorCode::invalid_size, "sequential matrix needs n >= 1");
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < i; ++j) t.emplace_back(i, j, 1.0 / i);
  return InteractionMatrix::from_triplets(n, t);
}

Graph sample_erdos_renyi(int n, double p, std::uint64_t seed) {
  require(n >= 1, ErrorCode::invalid_size, "graph needs n >= 1");
  require(p >= 0.0 && p <= 1.0, ErrorCode::invalid_probability, "p must lie in [0,1]");
  Stream rng(seed, 0);
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (rng.uniform() < p) edges.emplace_back(u, v);
  return Graph(n, std::move(edges));
}

Graph sample_random_regular(int n, int m, std::uint64_t seed) {
  require(n >= 1 && m >= 0 && m < n, ErrorCode::invalid_size, "need 0 <= m < n");
  require((static_cast<long>(n) * m) % 2 == 0, ErrorCode::invalid_size, "n*m must be even");
  for (std::uint64_t attempt = 0;; ++attempt) {
    Stream rng(seed, attempt);
    std::vector<int> stubs;
    for (int v = 0; v < n; ++v)
      for (int k = 0; k < m; ++k) stubs.push_back(v);
    std::set<std::pair<int, int>> seen;
    std::vector<std::pair<int, int>> edges;
    bool stuck = false;
    while (!stubs.empty() && !stuck) {
      stuck = true;
      for (int tries = 0; tries < 100; ++tries) {
        const auto a = rng.below(stubs.size());
        const auto b = rng.below(stubs.size());
        int u = stubs[a], v = stubs[b];
        if (a == b || u == v) continue;
        if (u > v) std::swap(u, v);
        if (seen.count({u, v})) continue;
        seen.insert({u, v});
        edges.emplace_back(u, v);
        const auto hi = std::max(a, b), lo = std::min(a, b);
        stubs[hi] = stubs.back();
        stubs.pop_back();
        stubs[lo] = stubs.back();
        stubs.pop_back();
        stuck = false;
        break;
      }
    }
    if (!stuck) return Graph(n, std::move(edges));
  }
}

InteractionMatrix sample_random_interaction(int n, std::uint64_t seed, double density, bool stochastic) {
  require(n >= 2, ErrorCode::invalid_size, "need n >= 2");
  require(density > 0.0 && density <= 1.0, ErrorCode::invalid_probability, "density must lie in (0,1]");
  Stream rng(seed, 0);
  Mat m = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && rng.uniform() < density) m(i, j) = rng.uniform();
  if (stochastic) {
    for (int i = 0; i < n; ++i) {
      if (m.row(i).sum() == 0.0) {
        int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)));
        if (j >= i) ++j;
        m(i, j) = 1.0;
      }
      m.row(i) /= m.row(i).sum();
    }
  } else {
    const double top = std::max(m.rowwise().sum().maxCoeff(), m.colwise().sum().maxCoeff());
    if (top > 0.0) m *= (0.5 + 0.5 * rng.uniform()) / top;
  }
  return InteractionMatrix::from_dense(m);
}

ValidityReport validate(const InteractionMatrix& xi, bool check_columns) {
  ValidityReport r;
  const auto& s = xi.sparse();
  for (Index i = 0; i < s.outerSize(); ++i)
    for (SparseRM::InnerIterator it(s, i); it; ++it) {
      if (it.value() < 0.0) {
        r.nonnegative = false;
        r.negative_entries.emplace_back(i, it.col());
      }
      if (it.col() == i && it.value() != 0.0) {
        r.zero_diagonal = false;
        r.nonzero_diagonal.push_back(i);
      }
    }
  const double lim = 1.0 + sum_tolerance;
  for (Index i = 0; i < xi.size(); ++i)
    if (xi.row_sums()(i) > lim) r.bad_rows.push_back(i);
  r.rows_ok = r.bad_rows.empty();
  r.max_row_sum = xi.size() ? xi.row_sums().maxCoeff() : 0.0;
  r.max_col_sum = xi.size() ? xi.col_sums().maxCoeff() : 0.0;
  if (check_columns) {
    for (Index j = 0; j < xi.size(); ++j)
      if (xi.col_sums()(j) > lim) r.bad_columns.push_back(j);
    r.columns_ok = r.bad_columns.empty();
  }
  return r;
}

double p_xi(const InteractionMatrix& xi) {
  const auto& s = xi.sparse();
  const Index n = xi.size();
  Vec sq_row = Vec::Zero(n), sq_col = Vec::Zero(n);
  double cubic = 0.0;
  for (Index i = 0; i < n; ++i)
    for (SparseRM::InnerIterator it(s, i); it; ++it) {
      const double a = it.value();
      sq_row(i) += a * a;
      sq_col(it.col()) += a * a;
      cubic += a * a * (a + xi(it.col(), i));
    }
  return cubic + (sq_row + sq_col).squaredNorm();
}

double row_mass_sq(const InteractionMatrix& xi, const SubsetState& v) {
  const auto& s = xi.sparse();
  double total = 0.0;
  for (int i : v.members()) {
    double r = 0.0;
    for (SparseRM::InnerIterator it(s, i); it; ++it)
      if (v.contains(static_cast<int>(it.col()))) r += it.value();
    total += r * r;
  }
  return total;
}

double entry_sq_sum(const InteractionMatrix& xi, const SubsetState& v) {
  const auto& s = xi.sparse();
  double total = 0.0;
  for (int i : v.members())
    for (SparseRM::InnerIterator it(s, i); it; ++it)
      if (v.contains(static_cast<int>(it.col()))) total += it.value() * it.value();
  return total;
}

double q_xi(const InteractionMatrix& xi, const SubsetState& v) {
  require(!v.empty(), ErrorCode::empty_subset, "q_xi needs a nonempty subset");
  require(v.universe() == xi.size(), ErrorCode::length_mismatch, "subset universe differs from matrix size");
  const double d = xi.delta();
  const double k = v.size();
  const Vec one = v.indicator();
  // sum_{i,j in v} (xi^T xi)_ij = |xi 1_v|^2 and (xi xi^T)_ij sums to |xi^T 1_v|^2
  const double cross = (xi.sparse() * one).squaredNorm() + (xi.sparse().transpose() * one).squaredNorm();
  return (d * k + 1.0) * (entry_sq_sum(xi, v) + d * cross + d * d * k);
}

double C_of_v(const InteractionMatrix& xi, const SubsetState& v, const ModelConstants& c) {
  require(c.sigma > 0.0, ErrorCode::invalid_argument, "sigma must be positive");
  return c.M / (c.sigma * c.sigma) * row_mass_sq(xi, v);
}

double Chat_of_v(const InteractionMatrix& xi, const SubsetState& v, const ModelConstants& c, double h3) {
  require(c.sigma > 0.0, ErrorCode::invalid_argument, "sigma must be positive");
  require(h3 >= 0.0 && c.gamma >= 0.0 && c.M >= 0.0, ErrorCode::invalid_argument,
          "gamma, M and h3 must be nonnegative");
  const double s2 = c.sigma * c.sigma;
  return std::sqrt(c.gamma * c.M * h3) / s2 * row_mass_sq(xi, v) + c.M / s2 * entry_sq_sum(xi, v);
}

}  // namespace chaoscope
