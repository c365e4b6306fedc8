#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "netalloc/common.hpp"
#include "netalloc/network.hpp"

namespace netalloc {

/// Binary choice profile y ∈ {0,1}^N.
using Configuration = std::vector<std::uint8_t>;

/// Structural parameters of the quadratic utility plus the spillover scale A_N.
/// theta2 and theta3 carry one coefficient per covariate column.
struct ThetaParams {
  double theta0 = 0.0;
  double theta1 = 0.0;
  std::vector<double> theta2{0.0};
  std::vector<double> theta3{0.0};
  double theta4 = 0.0;
  double theta5 = 0.0;
  double theta6 = 0.0;
  double a_n = 1.0;

  /// θ₁, θ₃, θ₄, θ₅, θ₆ ≥ 0 with θ₁, θ₄ > 0.
  bool positivity_profile() const {
    const bool t3 = std::all_of(theta3.begin(), theta3.end(), [](double v) { return v >= 0.0; });
    return theta1 > 0.0 && theta4 > 0.0 && t3 && theta5 >= 0.0 && theta6 >= 0.0;
  }
};

/// The two simulation parameter sets (scalar covariate). Set 2 has strong
/// choice spillovers and generally fails the contraction condition.
inline ThetaParams parameter_set(int which, double a_n) {
  ThetaParams t;
  t.theta0 = -2.0;
  t.theta1 = 0.5;
  t.theta2 = {0.1};
  t.theta3 = {0.6};
  t.theta4 = 0.7;
  switch (which) {
    case 1:
      t.theta5 = 0.8;
      t.theta6 = 0.9;
      break;
    case 2:
      t.theta5 = 7.0;
      t.theta6 = 7.0;
      break;
    default:
      throw Error("unknown parameter set " + std::to_string(which));
  }
  t.a_n = a_n;
  return t;
}

/// Binary treatment vector D.
class Allocation {
 public:
  Allocation() = default;
  explicit Allocation(std::size_t n) : d_(n, 0) {}
  explicit Allocation(std::vector<std::uint8_t> d) : d_(std::move(d)) {
    for (auto& v : d_) v = v ? 1 : 0;
  }

  static Allocation from_indices(std::size_t n, const std::vector<std::size_t>& treated) {
    Allocation a(n);
    for (std::size_t i : treated) {
      if (i >= n) throw Error("treated index out of range: " + std::to_string(i));
      a.d_[i] = 1;
    }
    return a;
  }

  std::size_t size() const { return d_.size(); }
  bool treated(std::size_t i) const { return d_[i] != 0; }
  std::uint8_t operator[](std::size_t i) const { return d_[i]; }
  const std::vector<std::uint8_t>& values() const { return d_; }

  std::size_t treated_count() const {
    return static_cast<std::size_t>(std::count(d_.begin(), d_.end(), std::uint8_t{1}));
  }

  std::vector<std::size_t> treated_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < d_.size(); ++i) {
      if (d_[i]) out.push_back(i);
    }
    return out;
  }

  Allocation with(std::size_t i) const {
    Allocation a = *this;
    a.d_[i] = 1;
    return a;
  }

  bool operator==(const Allocation&) const = default;

 private:
  std::vector<std::uint8_t> d_;
};

/// Everything the game depends on except the allocation: network, covariates,
/// similarity kernel and parameters, with the derived quantities cached.
class Instance {
 public:
  Instance(Network net, Covariates x, SimilarityKernel kernel, ThetaParams theta)
      : net_(std::move(net)), x_(std::move(x)), kernel_(kernel), theta_(std::move(theta)) {
    if (x_.rows() != net_.size()) {
      throw Error("covariate rows (" + std::to_string(x_.rows()) + ") do not match network size (" +
                  std::to_string(net_.size()) + ")");
    }
    if (theta_.theta2.size() != x_.cols() || theta_.theta3.size() != x_.cols()) {
      throw Error("theta2/theta3 length must equal the number of covariate columns (" +
                  std::to_string(x_.cols()) + ")");
    }
    if (!(theta_.a_n > 0.0) || !std::isfinite(theta_.a_n)) throw Error("a_n must be positive");
    m_ = similarity_matrix(x_, kernel_);
    bounds_ = netalloc::similarity_bounds(m_);
    x_theta2_.resize(net_.size());
    x_theta3_.resize(net_.size());
    for (std::size_t i = 0; i < net_.size(); ++i) {
      x_theta2_[i] = x_.dot(i, theta_.theta2);
      x_theta3_[i] = x_.dot(i, theta_.theta3);
    }
  }

  std::size_t size() const { return net_.size(); }
  const Network& network() const { return net_; }
  const Covariates& covariates() const { return x_; }
  const SimilarityKernel& kernel() const { return kernel_; }
  const ThetaParams& theta() const { return theta_; }
  const SquareMatrix<double>& similarity() const { return m_; }
  SimilarityBounds similarity_bounds() const { return bounds_; }
  double x_theta2(std::size_t i) const { return x_theta2_[i]; }
  double x_theta3(std::size_t i) const { return x_theta3_[i]; }

  /// Same network/covariates under different parameters.
  Instance with_theta(ThetaParams theta) const { return Instance(net_, x_, kernel_, std::move(theta)); }

 private:
  Network net_;
  Covariates x_;
  SimilarityKernel kernel_;
  ThetaParams theta_;
  SquareMatrix<double> m_;
  SimilarityBounds bounds_;
  std::vector<double> x_theta2_;
  std::vector<double> x_theta3_;
};

/// Linear and pairwise weights of the Gibbs potential: Φ(y) = w1'y + y'w2 y.
/// w2 is symmetric with a zero diagonal. The nonzero entries of 2·w2 are also
/// kept in compressed rows for the sweep-heavy consumers.
class WeightSystem {
 public:
  WeightSystem() = default;
  WeightSystem(std::vector<double> w1, SquareMatrix<double> w2) : w1_(std::move(w1)), w2_(std::move(w2)) {
    const std::size_t n = w1_.size();
    if (w2_.size() != n) throw Error("w1/w2 dimension mismatch");
    offsets_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (w2_(i, i) != 0.0) throw Error("w2 must have a zero diagonal");
      for (std::size_t j = 0; j < n; ++j) {
        if (w2_(i, j) != w2_(j, i)) throw Error("w2 must be symmetric");
        if (w2_(i, j) != 0.0) {
          cols_.push_back(j);
          coupling_.push_back(2.0 * w2_(i, j));
        }
      }
      offsets_[i + 1] = cols_.size();
    }
  }

  std::size_t size() const { return w1_.size(); }
  const std::vector<double>& w1() const { return w1_; }
  const SquareMatrix<double>& w2() const { return w2_; }

  /// Visits (j, 2·w2_ij) for every nonzero coupling of unit i.
  template <typename F>
  void for_each_coupling(std::size_t i, F&& f) const {
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) f(cols_[k], coupling_[k]);
  }

  std::size_t coupling_count(std::size_t i) const { return offsets_[i + 1] - offsets_[i]; }

  /// w1_i + 2 Σ_j w2_ij v_j for any real vector v (a configuration or μ).
  template <typename Vec>
  double field(std::size_t i, const Vec& v) const {
    double h = w1_[i];
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) h += coupling_[k] * static_cast<double>(v[cols_[k]]);
    return h;
  }

  /// w1'v + v'w2 v.
  template <typename Vec>
  double energy(const Vec& v) const {
    double lin = 0.0;
    double quad = 0.0;
    for (std::size_t i = 0; i < w1_.size(); ++i) {
      const double vi = static_cast<double>(v[i]);
      lin += w1_[i] * vi;
      double s = 0.0;
      for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) s += coupling_[k] * static_cast<double>(v[cols_[k]]);
      quad += 0.5 * s * vi;
    }
    return lin + quad;
  }

  /// max_j Σ_i |2·w2_ij|: the l1 Lipschitz constant of the mean-field map is
  /// at most a quarter of this.
  double max_coupling_column_sum() const {
    double best = 0.0;
    for (std::size_t i = 0; i + 1 < offsets_.size(); ++i) {
      double s = 0.0;
      for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) s += std::abs(coupling_[k]);
      best = std::max(best, s);
    }
    return best;
  }

 private:
  std::vector<double> w1_;
  SquareMatrix<double> w2_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> cols_;
  std::vector<double> coupling_;
};

inline void check_dims(const Instance& inst, const Allocation& d) {
  if (d.size() != inst.size()) throw Error("allocation length does not match network size");
}

/// U_i(y) relative to choosing 0.
inline double utility(std::size_t i, const Configuration& y, const Instance& inst, const Allocation& d) {
  if (!y[i]) return 0.0;
  const auto& t = inst.theta();
  const auto& m = inst.similarity();
  const double di = d[i];
  double linear = t.theta0 + t.theta1 * di + inst.x_theta2(i) + inst.x_theta3(i) * di;
  double spill = 0.0;
  for (std::size_t j : inst.network().neighbors(i)) {
    linear += t.a_n * t.theta4 * m(i, j) * d[j];
    spill += t.a_n * m(i, j) * (t.theta5 + t.theta6 * di * d[j]) * y[j];
  }
  return linear + spill;
}

/// Potential Φ(y) of the game, written as the double sum over all pairs.
inline double potential(const Configuration& y, const Instance& inst, const Allocation& d) {
  const auto& t = inst.theta();
  const auto& m = inst.similarity();
  const auto& g = inst.network().adjacency();
  const std::size_t n = inst.size();
  double phi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double lin = t.theta0 + t.theta1 * d[i] + inst.x_theta2(i) + inst.x_theta3(i) * d[i];
    for (std::size_t j = 0; j < n; ++j) lin += t.a_n * t.theta4 * m(i, j) * g(i, j) * d[j];
    phi += lin * y[i];
  }
  double pair = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      pair += m(i, j) * g(i, j) * y[i] * y[j] * (t.theta5 + t.theta6 * d[i] * d[j]);
    }
  }
  return phi + 0.5 * t.a_n * pair;
}

/// w1 and w2 induced by an allocation.
inline WeightSystem weights(const Instance& inst, const Allocation& d) {
  check_dims(inst, d);
  const auto& t = inst.theta();
  const auto& m = inst.similarity();
  const auto& net = inst.network();
  const std::size_t n = inst.size();
  std::vector<double> w1(n);
  SquareMatrix<double> w2(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double di = d[i];
    double treated_nbrs = 0.0;
    for (std::size_t j : net.neighbors(i)) {
      treated_nbrs += m(i, j) * d[j];
      w2(i, j) = 0.5 * t.a_n * m(i, j) * (t.theta5 + t.theta6 * di * d[j]);
    }
    w1[i] = t.theta0 + t.theta1 * di + inst.x_theta2(i) + inst.x_theta3(i) * di + t.a_n * t.theta4 * treated_nbrs;
  }
  return WeightSystem(std::move(w1), std::move(w2));
}

/// P(y_i = 1 | y_{-i}) = Λ(U_i(1, y_{-i})). Entry i of y is ignored.
inline double conditional_choice_prob(std::size_t i, const Configuration& y, const Instance& inst,
                                      const Allocation& d) {
  Configuration with_one = y;
  with_one[i] = 1;
  return logistic(utility(i, with_one, inst, d));
}

/// Same probability computed from the weight system.
template <typename Vec>
double conditional_choice_prob(std::size_t i, const Vec& y, const WeightSystem& w) {
  return logistic(w.field(i, y));
}

}  // namespace netalloc
