#pragma once

// Instance generators and independent reference computations shared by the
// unit and acceptance tests. The oracles here are deliberately naive: they
// work from the utility definition and plain loops, never from the library's
// weight system or incremental enumerators.

#include <algorithm>
#include <bit>
#include <optional>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "netalloc/allocate.hpp"
#include "netalloc/bounds.hpp"
#include "netalloc/common.hpp"
#include "netalloc/exact.hpp"
#include "netalloc/meanfield.hpp"
#include "netalloc/model.hpp"
#include "netalloc/network.hpp"

namespace testing_support {

using namespace netalloc;

/// Bernoulli(0.5) scalar covariate, G(n, M) network, absolute-difference kernel.
inline Instance simulated(std::size_t n, double density, std::uint64_t seed, int param_set = 1,
                          std::optional<double> a_n = std::nullopt) {
  Network net = erdos_renyi(n, density, derive_seed(seed, {1}));
  std::mt19937_64 rng(derive_seed(seed, {2}));
  std::bernoulli_distribution coin(0.5);
  std::vector<double> x(n);
  for (auto& v : x) v = coin(rng) ? 1.0 : 0.0;
  return Instance(std::move(net), Covariates::scalar(x), SimilarityKernel::abs_diff(),
                  parameter_set(param_set, a_n.value_or(1.0 / static_cast<double>(n))));
}

/// θ drawn from the positivity profile (θ₁, θ₃..θ₆ ≥ 0, θ₁, θ₄ > 0), moderate size.
inline ThetaParams random_positive_theta(std::mt19937_64& rng, std::size_t k = 1) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ThetaParams t;
  t.theta0 = -3.0 + 3.0 * u(rng);
  t.theta1 = 0.05 + u(rng);
  t.theta2.assign(k, 0.0);
  t.theta3.assign(k, 0.0);
  for (auto& v : t.theta2) v = -0.5 + u(rng);
  for (auto& v : t.theta3) v = u(rng);
  t.theta4 = 0.05 + u(rng);
  t.theta5 = u(rng);
  t.theta6 = u(rng);
  t.a_n = 1.0;
  return t;
}

/// θ with arbitrary signs ("mild": every coefficient in [-1.5, 1.5]).
inline ThetaParams random_mild_theta(std::mt19937_64& rng, std::size_t k = 1) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  ThetaParams t;
  t.theta0 = u(rng);
  t.theta1 = u(rng);
  t.theta2.assign(k, 0.0);
  t.theta3.assign(k, 0.0);
  for (auto& v : t.theta2) v = u(rng);
  for (auto& v : t.theta3) v = u(rng);
  t.theta4 = u(rng);
  t.theta5 = u(rng);
  t.theta6 = u(rng);
  t.a_n = 1.0;
  return t;
}

/// Random instance with the given θ; covariates uniform on [0, 2]^k.
inline Instance random_instance(std::size_t n, double density, std::mt19937_64& rng, ThetaParams theta,
                                SimilarityKernel kernel = SimilarityKernel::abs_diff()) {
  const std::size_t k = theta.theta2.size();
  Network net = erdos_renyi(n, density, rng());
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<double> x(n * k);
  for (auto& v : x) v = u(rng);
  return Instance(std::move(net), Covariates(n, k, std::move(x)), kernel, std::move(theta));
}

inline Allocation random_treatment(std::size_t n, std::mt19937_64& rng, double p = 0.3) {
  std::bernoulli_distribution coin(p);
  std::vector<std::uint8_t> d(n);
  for (auto& v : d) v = coin(rng) ? 1 : 0;
  return Allocation(std::move(d));
}

inline Configuration bits(std::uint64_t mask, std::size_t n) {
  Configuration y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = (mask >> i) & 1u;
  return y;
}

/// Φ written straight from the utility: own terms plus half of every
/// undirected pair's choice spillover counted from both ends.
inline double oracle_potential(const Instance& inst, const Allocation& d, const Configuration& y) {
  const auto& t = inst.theta();
  const auto& x = inst.covariates();
  const auto& m = inst.similarity();
  const std::size_t n = inst.size();
  double phi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!y[i]) continue;
    double own = t.theta0 + t.theta1 * d[i];
    for (std::size_t k = 0; k < x.cols(); ++k) own += x(i, k) * (t.theta2[k] + t.theta3[k] * d[i]);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !inst.network().connected(i, j)) continue;
      own += t.a_n * t.theta4 * m(i, j) * d[j];
      if (y[j]) phi += 0.5 * t.a_n * m(i, j) * (t.theta5 + t.theta6 * d[i] * d[j]);
    }
    phi += own;
  }
  return phi;
}

struct OracleLaw {
  double log_z = 0.0;
  double welfare = 0.0;
  std::vector<double> marginals;
  std::vector<double> probs;
};

/// Exhaustive Gibbs law with a max-shifted log-sum-exp.
inline OracleLaw oracle_law(const Instance& inst, const Allocation& d) {
  const std::size_t n = inst.size();
  const std::uint64_t total = std::uint64_t{1} << n;
  std::vector<double> phi(total);
  double top = -std::numeric_limits<double>::infinity();
  for (std::uint64_t s = 0; s < total; ++s) {
    phi[s] = oracle_potential(inst, d, bits(s, n));
    top = std::max(top, phi[s]);
  }
  long double z = 0.0L;
  for (double p : phi) z += std::exp(static_cast<long double>(p - top));
  OracleLaw out;
  out.log_z = static_cast<double>(std::log(z)) + top;
  out.marginals.assign(n, 0.0);
  out.probs.resize(total);
  for (std::uint64_t s = 0; s < total; ++s) {
    out.probs[s] = static_cast<double>(std::exp(static_cast<long double>(phi[s] - top)) / z);
    for (std::size_t i = 0; i < n; ++i) {
      if ((s >> i) & 1u) out.marginals[i] += out.probs[s];
    }
  }
  for (double v : out.marginals) out.welfare += v;
  return out;
}

/// Best exact welfare over all treated sets of size ≤ kappa, by bit masks.
inline double oracle_best_welfare(const Instance& inst, std::size_t kappa) {
  const std::size_t n = inst.size();
  double best = -std::numeric_limits<double>::infinity();
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
    if (static_cast<std::size_t>(std::popcount(s)) > kappa) continue;
    best = std::max(best, oracle_law(inst, Allocation(bits(s, n))).welfare);
  }
  return best;
}

inline double oracle_dlogistic(double v) {
  const double p = 1.0 / (1.0 + std::exp(-v));
  return p * (1.0 - p);
}

/// Curvature / submodularity constant transcribed independently.
inline double oracle_zeta(const Instance& inst) {
  const auto& t = inst.theta();
  const std::size_t n = inst.size();
  const auto& x = inst.covariates();
  double min_x2 = std::numeric_limits<double>::infinity();
  double max_x2 = -std::numeric_limits<double>::infinity();
  double max_x3 = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double a = 0.0, b = 0.0;
    for (std::size_t k = 0; k < x.cols(); ++k) {
      a += x(i, k) * t.theta2[k];
      b += x(i, k) * t.theta3[k];
    }
    min_x2 = std::min(min_x2, a);
    max_x2 = std::max(max_x2, a);
    max_x3 = std::max(max_x3, b);
  }
  double m_lo = std::numeric_limits<double>::infinity(), m_hi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      m_lo = std::min(m_lo, inst.similarity()(i, j));
      m_hi = std::max(m_hi, inst.similarity()(i, j));
    }
  }
  std::size_t deg_lo = n, deg_hi = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t deg = 0;
    for (std::size_t j = 0; j < n; ++j) deg += inst.network().connected(i, j) ? 1 : 0;
    deg_lo = std::min(deg_lo, deg);
    deg_hi = std::max(deg_hi, deg);
  }
  const double left = oracle_dlogistic(t.theta0 + min_x2);
  const double right = oracle_dlogistic(t.theta0 + t.theta1 + max_x2 + max_x3 +
                                        t.a_n * (t.theta4 + t.theta5 + t.theta6) * m_hi * deg_hi);
  return std::min(left, right) * (t.a_n * t.theta4 * deg_lo * m_lo + t.theta1) / n;
}

/// KL bound transcribed independently.
inline double oracle_kl_bound(const Instance& inst) {
  const auto& t = inst.theta();
  const double n = static_cast<double>(inst.size());
  double ax2 = 0.0, ax3 = 0.0;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    ax2 = std::max(ax2, std::fabs(inst.covariates().dot(i, t.theta2)));
    ax3 = std::max(ax3, std::fabs(inst.covariates().dot(i, t.theta3)));
  }
  double m_hi = 0.0;
  for (std::size_t i = 0; i < inst.size(); ++i) {
    for (std::size_t j = 0; j < inst.size(); ++j) {
      if (i != j) m_hi = std::max(m_hi, inst.similarity()(i, j));
    }
  }
  const double nb = static_cast<double>(inst.network().max_degree());
  const double base = std::fabs(t.theta0) + std::fabs(t.theta1) + ax2 + ax3;
  const double s456 = std::fabs(t.theta4) + std::fabs(t.theta5) + std::fabs(t.theta6);
  const double a = n * base + m_hi * t.a_n * n * nb * s456;
  const double b = base + m_hi * t.a_n * nb * s456;
  const double c = m_hi * t.a_n * (std::fabs(t.theta5) + std::fabs(t.theta6));
  return b / 4 + 3 + 2 * n * std::log(2.0) + std::log(n * n * n + n) +
         4 * std::sqrt(b * b * n + 0.25 * nb * n * (a * c * c + b * b * c + 4 * b * c)) + std::log(2.0);
}

/// Tight solver settings for checks at the 1e-10 level.
inline SolverSettings tight_settings() {
  SolverSettings s;
  s.rho = 1e-15;
  s.foc_tol = 1e-13;
  s.max_iter = 1000000;
  return s;
}

}  // namespace testing_support
