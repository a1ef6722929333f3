#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace chaoscope {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SparseRM = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class ErrorCode {
  invalid_size,
  invalid_probability,
  invalid_scale,
  invalid_graph,
  length_mismatch,
  invalid_argument,
  empty_subset,
  engine_too_large,
  not_applicable,
  precondition_failed,
  invalid_covariance,
  parse_error,
  io_error,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_size: return "invalid-size";
    case ErrorCode::invalid_probability: return "invalid-probability";
    case ErrorCode::invalid_scale: return "invalid-scale";
    case ErrorCode::invalid_graph: return "invalid-graph";
    case ErrorCode::length_mismatch: return "length-mismatch";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::empty_subset: return "empty-subset";
    case ErrorCode::engine_too_large: return "engine-too-large";
    case ErrorCode::not_applicable: return "not-applicable";
    case ErrorCode::precondition_failed: return "precondition-failed";
    case ErrorCode::invalid_covariance: return "invalid-covariance";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::io_error: return "io-error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

// Runs body(i) for i in [0, count). Work is split into contiguous chunks, so
// callers that write into per-index slots get results independent of threads.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(nt);
  pool.reserve(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const std::size_t lo = count * t / nt, hi = count * (t + 1) / nt;
    pool.emplace_back([&, t, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Pairwise summation; fixed association order regardless of how the values were produced.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

inline double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

}  // namespace chaoscope
