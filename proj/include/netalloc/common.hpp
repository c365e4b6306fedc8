#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace netalloc {

/// Raised for malformed input and violated preconditions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major square matrix. Used for adjacency, similarity and w2.
template <typename T>
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, T fill = T{}) : n_(n), data_(n * n, fill) {}

  std::size_t size() const { return n_; }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }

  std::span<const T> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }

  bool operator==(const SquareMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<T> data_;
};

/// Standard logistic, stable for large |x|.
inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Derivative of the logistic, Λ(x)(1 − Λ(x)).
inline double logistic_derivative(double x) {
  const double p = logistic(x);
  return p * (1.0 - p);
}

/// Binary entropy term μ log μ + (1 − μ) log(1 − μ); zero at the endpoints.
inline double neg_entropy(double mu) {
  double s = 0.0;
  if (mu > 0.0) s += mu * std::log(mu);
  if (mu < 1.0) s += (1.0 - mu) * std::log1p(-mu);
  return s;
}

// splitmix64 finalizer; used for seed derivation so that parallel schedules
// never reorder randomness.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(master);
  for (auto p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

/// Number of subsets of an n-set with at most k elements (saturating).
inline std::uint64_t count_subsets_up_to(std::size_t n, std::size_t k) {
  long double total = 0.0L;
  long double c = 1.0L;  // C(n, 0)
  for (std::size_t j = 0; j <= k && j <= n; ++j) {
    total += c;
    c = c * static_cast<long double>(n - j) / static_cast<long double>(j + 1);
  }
  if (total >= 1.8e19L) return UINT64_MAX;
  return static_cast<std::uint64_t>(total + 0.5L);
}

}  // namespace netalloc
