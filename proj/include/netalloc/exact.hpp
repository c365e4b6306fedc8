#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "netalloc/common.hpp"
#include "netalloc/model.hpp"

namespace netalloc {

/// Largest N for which the 2^N Gibbs sum is attempted by default.
inline constexpr std::size_t kDefaultExactCap = 20;

/// Exact Gibbs law over {0,1}^N.
struct ExactDistribution {
  double log_partition = 0.0;
  /// Σ_i μ_i^P, the equilibrium welfare.
  double expected_total = 0.0;
  /// μ_i^P; empty unless requested.
  std::vector<double> marginals;
  /// P(y) indexed by the integer whose bit i is y_i; empty unless requested.
  std::vector<double> probs;
};

struct EnumerateOptions {
  bool marginals = true;
  bool probs = false;
  std::size_t cap = kDefaultExactCap;
};

namespace detail {

/// Visits every configuration in Gray-code order and accumulates the
/// unnormalised weights exp(Φ(y) − shift). Each step flips one unit and
/// updates the local fields of its coupled neighbours only.
class GibbsEnumerator {
 public:
  explicit GibbsEnumerator(const WeightSystem& w) : w_(w), n_(w.size()) {}

  ExactDistribution run(const EnumerateOptions& opt) {
    if (n_ > opt.cap || n_ >= 63) {
      throw Error("exact enumeration infeasible for N = " + std::to_string(n_) + " (cap " +
                  std::to_string(opt.cap) + ")");
    }
    // Upper bound on max Φ from the positive parts; Φ(0) = 0 so the shift is >= 0.
    double upper = 0.0;
    double lower = 0.0;
    double field_bound = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      upper += std::max(0.0, w_.w1()[i]);
      lower += std::min(0.0, w_.w1()[i]);
      double fb = std::abs(w_.w1()[i]);
      w_.for_each_coupling(i, [&](std::size_t j, double c) {
        if (j > i) {
          upper += std::max(0.0, c);
          lower += std::min(0.0, c);
        }
        fb += std::abs(c);
      });
      field_bound = std::max(field_bound, fb);
    }
    double shift = upper;
    if (upper > 600.0) shift = max_potential();
    // The multiplicative update needs every running weight and every exp of a
    // local field to stay in normal double range, otherwise an underflowed
    // weight never recovers. Materialised probabilities take the direct exp.
    multiplicative_ = field_bound < 600.0 && upper - lower < 600.0 && !opt.probs;
    return accumulate(shift, opt);
  }

 private:
  double max_potential() const {
    std::vector<std::uint8_t> y(n_, 0);
    std::vector<double> h(w_.w1());
    double phi = 0.0;
    double best = 0.0;
    const std::uint64_t total = std::uint64_t{1} << n_;
    for (std::uint64_t k = 1; k < total; ++k) {
      const auto i = static_cast<std::size_t>(std::countr_zero(k));
      const double sign = y[i] ? -1.0 : 1.0;
      phi += sign * h[i];
      y[i] ^= 1;
      w_.for_each_coupling(i, [&](std::size_t j, double c) { h[j] += sign * c; });
      best = std::max(best, phi);
    }
    return best;
  }

  ExactDistribution accumulate(double shift, const EnumerateOptions& opt) {
    const std::uint64_t total = std::uint64_t{1} << n_;
    std::vector<std::uint8_t> y(n_, 0);
    std::vector<double> h(w_.w1());
    std::vector<double> eh(n_);
    for (std::size_t i = 0; i < n_; ++i) eh[i] = std::exp(h[i]);
    // exp(±c) per stored coupling, in the same order as for_each_coupling.
    std::vector<double> up, down;
    if (multiplicative_) {
      for (std::size_t i = 0; i < n_; ++i) {
        w_.for_each_coupling(i, [&](std::size_t, double c) {
          up.push_back(std::exp(c));
          down.push_back(std::exp(-c));
        });
      }
    }
    std::vector<std::size_t> coupling_offset(n_ + 1, 0);
    for (std::size_t i = 0; i < n_; ++i) coupling_offset[i + 1] = coupling_offset[i] + w_.coupling_count(i);

    ExactDistribution out;
    std::vector<long double> marg(opt.marginals ? n_ : 0, 0.0L);
    if (opt.probs) out.probs.assign(total, 0.0);

    double phi = 0.0;
    double weight = std::exp(-shift);
    std::size_t ones = 0;
    std::uint64_t index = 0;
    long double z = 0.0L;
    long double s = 0.0L;

    auto record = [&]() {
      z += weight;
      s += static_cast<long double>(weight) * static_cast<long double>(ones);
      if (opt.probs) out.probs[index] = weight;
      if (opt.marginals) {
        for (std::size_t i = 0; i < n_; ++i) {
          if (y[i]) marg[i] += weight;
        }
      }
    };

    record();
    for (std::uint64_t k = 1; k < total; ++k) {
      const auto i = static_cast<std::size_t>(std::countr_zero(k));
      const bool rising = y[i] == 0;
      const double sign = rising ? 1.0 : -1.0;
      phi += sign * h[i];
      y[i] ^= 1;
      index ^= std::uint64_t{1} << i;
      ones = rising ? ones + 1 : ones - 1;
      if (multiplicative_) {
        weight = rising ? weight * eh[i] : weight / eh[i];
        std::size_t slot = coupling_offset[i];
        const auto& factor = rising ? up : down;
        w_.for_each_coupling(i, [&](std::size_t j, double c) {
          h[j] += sign * c;
          eh[j] *= factor[slot++];
        });
        // Periodic resync bounds the drift of the multiplicative updates.
        if ((k & 255u) == 0) {
          weight = std::exp(phi - shift);
          for (std::size_t j = 0; j < n_; ++j) eh[j] = std::exp(h[j]);
        }
      } else {
        w_.for_each_coupling(i, [&](std::size_t j, double c) { h[j] += sign * c; });
        weight = std::exp(phi - shift);
      }
      record();
    }

    const double zd = static_cast<double>(z);
    if (!(zd > 0.0) || !std::isfinite(zd)) throw Error("partition function under/overflow");
    out.log_partition = std::log(zd) + shift;
    out.expected_total = static_cast<double>(s / z);
    if (opt.marginals) {
      out.marginals.resize(n_);
      for (std::size_t i = 0; i < n_; ++i) out.marginals[i] = static_cast<double>(marg[i] / z);
    }
    if (opt.probs) {
      for (auto& p : out.probs) p = static_cast<double>(p / z);
    }
    return out;
  }

  const WeightSystem& w_;
  std::size_t n_;
  bool multiplicative_ = true;
};

}  // namespace detail

/// Exact stationary law P(y) ∝ exp(w1'y + y'w2 y) by full enumeration.
inline ExactDistribution enumerate_gibbs(const WeightSystem& w, const EnumerateOptions& opt = {}) {
  return detail::GibbsEnumerator(w).run(opt);
}

/// Σ_i E_P[Y_i] under the allocation d (divide by N for the per-person value).
inline double exact_welfare(const Instance& inst, const Allocation& d, std::size_t cap = kDefaultExactCap) {
  EnumerateOptions opt;
  opt.marginals = false;
  opt.cap = cap;
  return enumerate_gibbs(weights(inst, d), opt).expected_total;
}

struct OptimalAllocation {
  Allocation allocation;
  double welfare = 0.0;
};

/// Visits every allocation with at most kappa treated units in lexicographic
/// order of the sorted treated-index list ({} < {0} < {0,1} < {0,2} < {1} ...).
/// Each allocation is visited after its parent (the same set minus its
/// largest index), and depth is the number of treated units.
inline void for_each_capped_allocation(std::size_t n, std::size_t kappa,
                                       const std::function<void(const Allocation&, std::size_t depth)>& visit) {
  kappa = std::min(kappa, n);
  std::vector<std::uint8_t> d(n, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
    visit(Allocation(d), depth);
    if (depth == kappa) return;
    for (std::size_t i = start; i < n; ++i) {
      d[i] = 1;
      rec(i + 1, depth + 1);
      d[i] = 0;
    }
  };
  rec(0, 0);
}

/// Default ceiling on Σ_{k≤κ} C(N,k) · 2^N for the exact brute-force search.
inline constexpr std::uint64_t kBruteForceWorkCap = std::uint64_t{1} << 36;

/// Exact argmax of W over allocations with at most kappa treated units. Ties
/// resolve to the lexicographically smallest treated set.
inline OptimalAllocation brute_force_optimal(const Instance& inst, std::size_t kappa,
                                             std::size_t cap = kDefaultExactCap) {
  const std::size_t n = inst.size();
  if (n > cap || n >= 40) throw Error("brute force infeasible for N = " + std::to_string(n));
  const std::uint64_t allocs = count_subsets_up_to(n, std::min(kappa, n));
  if (allocs == UINT64_MAX || allocs > (kBruteForceWorkCap >> n)) {
    throw Error("brute force infeasible: too many allocations for N = " + std::to_string(n));
  }
  OptimalAllocation best{Allocation(n), -std::numeric_limits<double>::infinity()};
  for_each_capped_allocation(n, kappa, [&](const Allocation& d, std::size_t) {
    const double w = exact_welfare(inst, d, cap);
    if (w > best.welfare) best = {d, w};
  });
  return best;
}

/// KL(Q || P) for the product-Bernoulli Q with means mu:
/// log Z − [w1'μ + μ'w2 μ − Σ(μ log μ + (1−μ) log(1−μ))].
inline double exact_kl(const std::vector<double>& mu, const WeightSystem& w, const ExactDistribution& p) {
  if (mu.size() != w.size()) throw Error("mean vector length mismatch");
  double ent = 0.0;
  for (double m : mu) {
    if (!(m > 0.0 && m < 1.0)) throw Error("mean-field marginals must lie in (0, 1)");
    ent += neg_entropy(m);
  }
  return p.log_partition - (w.energy(mu) - ent);
}

}  // namespace netalloc
