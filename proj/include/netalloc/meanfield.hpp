#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "netalloc/common.hpp"
#include "netalloc/model.hpp"

namespace netalloc {

enum class SweepMode {
  /// In-place updates; each coordinate sees the freshest neighbours. Ascends 𝒜.
  GaussSeidel,
  /// Every coordinate is updated from the previous sweep.
  Jacobi,
};

struct SolverSettings {
  /// Stop once the per-sweep increase of 𝒜 is at most rho ...
  double rho = 1e-9;
  /// ... and the first-order residual max_i |μ_i − Λ(field_i)| is at most this.
  double foc_tol = 1e-8;
  std::size_t max_iter = 100000;
  SweepMode mode = SweepMode::GaussSeidel;
  /// Random starts used when the contraction certificate fails.
  std::size_t restarts = 10;
  /// Seed candidate solves from the incumbent solution (greedy / BFVA).
  bool warm_start = true;
};

struct MeanFieldSolution {
  std::vector<double> mu;
  double objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double foc_residual = 0.0;
  bool contraction_certified = false;

  /// W̃ = Σ μ̃_i.
  double welfare() const { return std::accumulate(mu.begin(), mu.end(), 0.0); }
};

inline constexpr double kMuClamp = 1e-15;

inline double clamp_mu(double m) { return std::clamp(m, kMuClamp, 1.0 - kMuClamp); }

/// 𝒜(μ) = w1'μ + μ'w2 μ − Σ[μ log μ + (1−μ) log(1−μ)].
inline double objective_A(std::span<const double> mu, const WeightSystem& w) {
  double ent = 0.0;
  for (double m : mu) ent += neg_entropy(m);
  return w.energy(mu) - ent;
}

/// max_i |μ_i − Λ(w1_i + 2 Σ_j w2_ij μ_j)|.
inline double foc_residual(std::span<const double> mu, const WeightSystem& w) {
  double r = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) r = std::max(r, std::abs(mu[i] - logistic(w.field(i, mu))));
  return r;
}

/// One pass of the mean-field update over units 0..N−1.
inline void mean_field_sweep(std::vector<double>& mu, const WeightSystem& w, SweepMode mode,
                             std::vector<double>& scratch) {
  const std::size_t n = mu.size();
  if (mode == SweepMode::GaussSeidel) {
    for (std::size_t i = 0; i < n; ++i) mu[i] = clamp_mu(logistic(w.field(i, mu)));
  } else {
    scratch.resize(n);
    for (std::size_t i = 0; i < n; ++i) scratch[i] = clamp_mu(logistic(w.field(i, mu)));
    mu.swap(scratch);
  }
}

/// Fixed-point iteration for the naive mean-field first-order conditions,
/// started from `init` when given and from U[0,1] draws otherwise.
inline MeanFieldSolution fixed_point_solve(const WeightSystem& w, std::uint64_t seed,
                                           const SolverSettings& settings,
                                           std::span<const double> init = {}) {
  if (!(settings.rho > 0.0)) throw Error("solver tolerance rho must be positive");
  const std::size_t n = w.size();
  MeanFieldSolution sol;
  sol.mu.resize(n);
  if (init.size() == n && n > 0) {
    for (std::size_t i = 0; i < n; ++i) sol.mu[i] = clamp_mu(init[i]);
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (auto& m : sol.mu) m = clamp_mu(unif(rng));
  }
  std::vector<double> scratch;
  double prev = objective_A(sol.mu, w);
  for (std::size_t t = 1; t <= settings.max_iter; ++t) {
    mean_field_sweep(sol.mu, w, settings.mode, scratch);
    const double cur = objective_A(sol.mu, w);
    sol.iterations = t;
    sol.objective = cur;
    sol.foc_residual = foc_residual(sol.mu, w);
    if (cur - prev <= settings.rho && sol.foc_residual <= settings.foc_tol) {
      sol.converged = true;
      break;
    }
    prev = cur;
  }
  if (settings.max_iter == 0) {
    sol.objective = prev;
    sol.foc_residual = foc_residual(sol.mu, w);
  }
  return sol;
}

/// A_N · m̄ · (|θ₅| + |θ₆|) · N̄ ≤ 4: the mean-field map is an l1 contraction
/// and its fixed point is the unique maximiser of 𝒜.
inline bool contraction_certificate(const ThetaParams& theta, double m_upper, std::size_t max_degree) {
  return theta.a_n * m_upper * (std::abs(theta.theta5) + std::abs(theta.theta6)) *
             static_cast<double>(max_degree) <=
         4.0;
}

inline bool contraction_certificate(const Instance& inst) {
  return contraction_certificate(inst.theta(), inst.similarity_bounds().upper, inst.network().max_degree());
}

/// Mean-field solution for allocation d. With the certificate a single solve
/// suffices (from `warm` when allowed). Without it, `restarts` random starts
/// (plus `warm`) are run and the highest-𝒜 fixed point is kept.
inline MeanFieldSolution solve_mean_field(const Instance& inst, const Allocation& d, const SolverSettings& settings,
                                          std::uint64_t seed, std::span<const double> warm = {}) {
  const WeightSystem w = weights(inst, d);
  const bool certified = contraction_certificate(inst);
  const bool use_warm = settings.warm_start && warm.size() == inst.size();
  MeanFieldSolution best;
  if (certified) {
    best = fixed_point_solve(w, seed, settings, use_warm ? warm : std::span<const double>{});
  } else {
    bool have = false;
    auto consider = [&](MeanFieldSolution s) {
      if (!have || s.objective > best.objective) {
        best = std::move(s);
        have = true;
      }
    };
    if (use_warm) consider(fixed_point_solve(w, seed, settings, warm));
    const std::size_t starts = std::max<std::size_t>(settings.restarts, 1);
    for (std::size_t r = 0; r < starts; ++r) consider(fixed_point_solve(w, derive_seed(seed, {r}), settings));
  }
  best.contraction_certified = certified;
  return best;
}

/// W̃(D) = Σ μ̃_i.
inline double approx_welfare(const Instance& inst, const Allocation& d, const SolverSettings& settings,
                             std::uint64_t seed) {
  return solve_mean_field(inst, d, settings, seed).welfare();
}

}  // namespace netalloc
