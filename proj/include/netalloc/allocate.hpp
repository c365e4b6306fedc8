#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "netalloc/common.hpp"
#include "netalloc/exact.hpp"
#include "netalloc/meanfield.hpp"
#include "netalloc/model.hpp"

namespace netalloc {

/// floor(fraction · N), tolerant of representation error in the product.
inline std::size_t capacity_from_fraction(std::size_t n, double fraction) {
  if (!(fraction >= 0.0)) throw Error("capacity fraction must be nonnegative");
  const double k = std::floor(fraction * static_cast<double>(n) + 1e-9);
  return std::min(n, static_cast<std::size_t>(k));
}

inline Allocation no_treatment(const Instance& inst) { return Allocation(inst.size()); }

struct GreedyRound {
  std::size_t round = 0;
  std::size_t unit = 0;
  /// W̃(D ∪ {unit}) − W̃(D).
  double delta = 0.0;
  /// False if any candidate solve in this round hit max_iter.
  bool converged = true;
};

struct GreedyResult {
  Allocation allocation;
  /// Mean-field solution at the final allocation.
  MeanFieldSolution solution;
  std::vector<GreedyRound> trace;

  double welfare() const { return solution.welfare(); }
};

/// Treats, one unit per round, the untreated unit with the largest gain in
/// approximated welfare until min(kappa, N) units are treated. Ties go to the
/// smallest index.
inline GreedyResult greedy(const Instance& inst, std::size_t kappa, const SolverSettings& settings,
                           std::uint64_t seed) {
  const std::size_t n = inst.size();
  const std::size_t rounds = std::min(kappa, n);
  GreedyResult out;
  out.allocation = Allocation(n);
  out.solution = solve_mean_field(inst, out.allocation, settings, derive_seed(seed, {0, n}));
  double incumbent = out.solution.welfare();
  for (std::size_t r = 0; r < rounds; ++r) {
    double best_delta = -std::numeric_limits<double>::infinity();
    std::size_t best_unit = n;
    MeanFieldSolution best_sol;
    bool round_converged = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (out.allocation.treated(i)) continue;
      auto sol = solve_mean_field(inst, out.allocation.with(i), settings, derive_seed(seed, {r + 1, i}),
                                  out.solution.mu);
      round_converged = round_converged && sol.converged;
      const double delta = sol.welfare() - incumbent;
      if (delta > best_delta) {
        best_delta = delta;
        best_unit = i;
        best_sol = std::move(sol);
      }
    }
    out.allocation = out.allocation.with(best_unit);
    out.solution = std::move(best_sol);
    incumbent = out.solution.welfare();
    out.trace.push_back({r, best_unit, best_delta, round_converged});
  }
  return out;
}

struct BfvaResult {
  Allocation allocation;
  /// W̃ at the chosen allocation.
  double welfare = 0.0;
  MeanFieldSolution solution;
  std::size_t evaluated = 0;
};

/// Argmax of W̃ over every allocation with at most kappa treated units
/// (lexicographically smallest treated set on ties).
inline BfvaResult bfva(const Instance& inst, std::size_t kappa, const SolverSettings& settings, std::uint64_t seed,
                       std::uint64_t max_allocations = std::uint64_t{1} << 24) {
  const std::size_t n = inst.size();
  const std::uint64_t count = count_subsets_up_to(n, std::min(kappa, n));
  if (count > max_allocations) {
    throw Error("BFVA infeasible: " + std::to_string(count) + " allocations for N = " + std::to_string(n));
  }
  BfvaResult out;
  out.welfare = -std::numeric_limits<double>::infinity();
  // parents[k] holds the solution at the most recently visited depth-k set,
  // which is the parent of any depth-(k+1) set visited next.
  std::vector<std::vector<double>> parents(std::min(kappa, n) + 1);
  std::uint64_t index = 0;
  for_each_capped_allocation(n, kappa, [&](const Allocation& d, std::size_t depth) {
    std::span<const double> warm;
    if (depth > 0) warm = parents[depth - 1];
    auto sol = solve_mean_field(inst, d, settings, derive_seed(seed, {index++}), warm);
    const double w = sol.welfare();
    if (w > out.welfare) {
      out.welfare = w;
      out.allocation = d;
      out.solution = sol;
    }
    parents[depth] = std::move(sol.mu);
  });
  out.evaluated = index;
  return out;
}

/// Uniformly random set of exactly kappa treated units.
inline Allocation random_allocation(std::size_t n, std::size_t kappa, std::mt19937_64& rng) {
  kappa = std::min(kappa, n);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t k = 0; k < kappa; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, n - 1);
    std::swap(idx[k], idx[pick(rng)]);
  }
  idx.resize(kappa);
  return Allocation::from_indices(n, idx);
}

using WelfareEvaluator = std::function<double(const Allocation&)>;

/// Mean evaluator-welfare over `draws` uniformly random allocations.
inline double random_allocation_welfare(const Instance& inst, std::size_t kappa, std::size_t draws,
                                        std::uint64_t seed, const WelfareEvaluator& evaluator) {
  if (draws == 0) throw Error("random allocation needs at least one draw");
  std::mt19937_64 rng(seed);
  double sum = 0.0;
  for (std::size_t r = 0; r < draws; ++r) sum += evaluator(random_allocation(inst.size(), kappa, rng));
  return sum / static_cast<double>(draws);
}

}  // namespace netalloc
