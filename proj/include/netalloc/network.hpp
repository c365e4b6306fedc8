#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "netalloc/common.hpp"

namespace netalloc {

using Edge = std::pair<std::size_t, std::size_t>;

/// Undirected simple graph. Immutable once built; the adjacency matrix is
/// symmetric with an empty diagonal.
class Network {
 public:
  Network() = default;

  /// Builds from an edge list. Duplicate and reversed edges collapse into a
  /// single undirected edge; self-links and out-of-range indices throw.
  Network(std::size_t n, const std::vector<Edge>& edges) : adjacency_(n, 0), neighbors_(n) {
    for (const auto& [i, j] : edges) {
      if (i >= n || j >= n) {
        throw Error("edge (" + std::to_string(i) + "," + std::to_string(j) +
                    ") out of range for " + std::to_string(n) + " nodes");
      }
      if (i == j) throw Error("self-links not allowed (node " + std::to_string(i) + ")");
      adjacency_(i, j) = 1;
      adjacency_(j, i) = 1;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (adjacency_(i, j)) neighbors_[i].push_back(j);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j : neighbors_[i]) {
        if (i < j) edges_.emplace_back(i, j);
      }
    }
    if (n > 0) {
      max_degree_ = 0;
      min_degree_ = n;
      for (const auto& nb : neighbors_) {
        max_degree_ = std::max(max_degree_, nb.size());
        min_degree_ = std::min(min_degree_, nb.size());
      }
    }
  }

  std::size_t size() const { return neighbors_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  bool connected(std::size_t i, std::size_t j) const { return adjacency_(i, j) != 0; }
  const SquareMatrix<std::uint8_t>& adjacency() const { return adjacency_; }
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_[i]; }
  std::size_t degree(std::size_t i) const { return neighbors_[i].size(); }
  /// N̄, the largest degree.
  std::size_t max_degree() const { return max_degree_; }
  /// N_lower, the smallest degree.
  std::size_t min_degree() const { return min_degree_; }
  /// Canonical edge list, i < j, sorted.
  const std::vector<Edge>& edges() const { return edges_; }

  bool operator==(const Network& other) const { return adjacency_ == other.adjacency_; }

 private:
  SquareMatrix<std::uint8_t> adjacency_;
  std::vector<std::vector<std::size_t>> neighbors_;
  std::vector<Edge> edges_;
  std::size_t max_degree_ = 0;
  std::size_t min_degree_ = 0;
};

struct DegreeStats {
  std::size_t max_degree;
  std::size_t min_degree;
};

inline DegreeStats degree_stats(const Network& net) { return {net.max_degree(), net.min_degree()}; }

/// Number of edges the fixed-count random graph model places for (n, density).
inline std::size_t erdos_renyi_edge_count(std::size_t n, double density) {
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return static_cast<std::size_t>(std::llround(density * pairs));
}

/// Uniform random simple graph with exactly round(density·n(n−1)/2) edges.
/// A density that rounds to zero edges yields the empty graph.
inline Network erdos_renyi(std::size_t n, double density, std::uint64_t seed) {
  if (n < 2) throw Error("erdos_renyi requires n >= 2");
  if (!(density > 0.0 && density <= 1.0)) throw Error("density must lie in (0, 1]");
  std::vector<Edge> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  const std::size_t m = std::min(erdos_renyi_edge_count(n, density), pairs.size());
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first m slots are a uniform m-subset.
  for (std::size_t k = 0; k < m; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, pairs.size() - 1);
    std::swap(pairs[k], pairs[pick(rng)]);
  }
  pairs.resize(m);
  return Network(n, pairs);
}

/// N×K matrix of nonnegative unit characteristics.
class Covariates {
 public:
  Covariates() = default;
  Covariates(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) throw Error("covariate matrix shape mismatch");
    for (double v : values_) {
      if (!std::isfinite(v)) throw Error("covariates must be finite");
      if (v < 0.0) throw Error("covariates must be nonnegative");
    }
  }

  /// One scalar characteristic per unit.
  static Covariates scalar(const std::vector<double>& x) { return {x.size(), 1, x}; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t i, std::size_t k) const { return values_[i * cols_ + k]; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }

  /// Dot product of row i with a length-K coefficient vector.
  double dot(std::size_t i, const std::vector<double>& coef) const {
    double s = 0.0;
    for (std::size_t k = 0; k < cols_; ++k) s += values_[i * cols_ + k] * coef[k];
    return s;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Pairwise similarity m(X_i, X_j). Every variant is symmetric and nonnegative.
struct SimilarityKernel {
  enum class Kind { AbsDiff, InverseDistance, Constant };

  Kind kind = Kind::AbsDiff;
  double constant = 1.0;

  static SimilarityKernel abs_diff() { return {Kind::AbsDiff, 0.0}; }
  static SimilarityKernel inverse_distance() { return {Kind::InverseDistance, 0.0}; }
  static SimilarityKernel constant_value(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw Error("constant kernel requires c > 0");
    return {Kind::Constant, c};
  }

  double operator()(std::span<const double> a, std::span<const double> b) const {
    if (kind == Kind::Constant) return constant;
    double l1 = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) l1 += std::abs(a[k] - b[k]);
    return kind == Kind::AbsDiff ? l1 : 1.0 / (1.0 + l1);
  }

  std::string name() const {
    switch (kind) {
      case Kind::AbsDiff: return "absdiff";
      case Kind::InverseDistance: return "inverse";
      case Kind::Constant: return "constant";
    }
    return "?";
  }
};

inline SquareMatrix<double> similarity_matrix(const Covariates& x, const SimilarityKernel& kernel) {
  const std::size_t n = x.rows();
  SquareMatrix<double> m(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = kernel(x.row(i), x.row(j));
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

struct SimilarityBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// m_lower and m̄ over all off-diagonal pairs; (0, 0) when there are none.
inline SimilarityBounds similarity_bounds(const SquareMatrix<double>& m) {
  const std::size_t n = m.size();
  if (n < 2) return {};
  SimilarityBounds b{m(0, 1), m(0, 1)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      b.lower = std::min(b.lower, m(i, j));
      b.upper = std::max(b.upper, m(i, j));
    }
  }
  return b;
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty() || c == ',') out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(trim(cur));
  std::vector<std::string> nonempty;
  for (auto& f : out) {
    if (!f.empty()) nonempty.push_back(std::move(f));
  }
  return nonempty;
}

inline std::size_t parse_index(const std::string& token, std::size_t line_no) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(token, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != token.size() || v < 0) {
    throw Error("line " + std::to_string(line_no) + ": invalid node index '" + token + "'");
  }
  return static_cast<std::size_t>(v);
}

inline double parse_real(const std::string& token, std::size_t line_no) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != token.size() || token.empty()) {
    throw Error("line " + std::to_string(line_no) + ": invalid number '" + token + "'");
  }
  return v;
}

}  // namespace detail

/// Parses an edge list: one "i,j" pair per line, 0-based, '#' comments. A
/// comment of the form "# nodes: N" fixes the node count; otherwise it is
/// one past the largest index seen.
inline Network parse_network(std::istream& in) {
  std::vector<Edge> edges;
  std::optional<std::size_t> declared;
  std::size_t max_index = 0;
  bool any = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const std::string body = detail::trim(t.substr(1));
      if (body.rfind("nodes:", 0) == 0) {
        declared = detail::parse_index(detail::trim(body.substr(6)), line_no);
      }
      continue;
    }
    const auto fields = detail::split_fields(t);
    if (fields.size() != 2) {
      throw Error("line " + std::to_string(line_no) + ": expected 'i,j'");
    }
    const std::size_t i = detail::parse_index(fields[0], line_no);
    const std::size_t j = detail::parse_index(fields[1], line_no);
    if (i == j) throw Error("line " + std::to_string(line_no) + ": self-links not allowed");
    edges.emplace_back(i, j);
    max_index = std::max({max_index, i, j});
    any = true;
  }
  const std::size_t n = declared ? *declared : (any ? max_index + 1 : 0);
  return Network(n, edges);
}

inline Network load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open network file: " + path);
  return parse_network(in);
}

/// Parses a covariate CSV: a header line, then one row of K numbers per unit.
inline Covariates parse_covariates(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t cols = 0;
  bool header_seen = false;
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = detail::split_fields(t);
    if (!header_seen) {
      header_seen = true;
      cols = fields.size();
      if (cols == 0) throw Error("covariate header has no columns");
      continue;
    }
    if (fields.size() != cols) {
      throw Error("line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                  " covariate columns");
    }
    for (const auto& f : fields) values.push_back(detail::parse_real(f, line_no));
    ++rows;
  }
  if (!header_seen) throw Error("covariate file is empty");
  return Covariates(rows, cols, std::move(values));
}

inline Covariates load_covariates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open covariate file: " + path);
  return parse_covariates(in);
}

}  // namespace netalloc
