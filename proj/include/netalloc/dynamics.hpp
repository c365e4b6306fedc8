#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "netalloc/common.hpp"
#include "netalloc/exact.hpp"
#include "netalloc/model.hpp"

namespace netalloc {

/// State of the sequential decision process.
struct ChainState {
  Configuration y;
  std::uint64_t t = 0;
  std::mt19937_64 rng;

  ChainState(Configuration start, std::uint64_t seed) : y(std::move(start)), rng(seed) {}

  /// Start from independent fair coin flips.
  static ChainState random(std::size_t n, std::uint64_t seed) {
    ChainState s(Configuration(n, 0), seed);
    std::bernoulli_distribution coin(0.5);
    for (auto& v : s.y) v = coin(s.rng) ? 1 : 0;
    return s;
  }
};

/// One period: a unit drawn uniformly revises its choice with logit
/// probability given the others' current choices. Returns the unit.
inline std::size_t step(ChainState& state, const WeightSystem& w) {
  const std::size_t n = state.y.size();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t i = pick(state.rng);
  const double p = conditional_choice_prob(i, state.y, w);
  state.y[i] = unif(state.rng) < p ? 1 : 0;
  ++state.t;
  return i;
}

/// The same chain with local fields maintained incrementally, so a step costs
/// O(1) plus O(degree) when the choice changes. Draws are identical to step().
class GibbsChain {
 public:
  GibbsChain(const WeightSystem& w, ChainState state) : w_(w), state_(std::move(state)), h_(w.size()) {
    for (std::size_t i = 0; i < h_.size(); ++i) h_[i] = w_.field(i, state_.y);
    for (auto v : state_.y) ones_ += v;
  }

  void advance() {
    const std::size_t n = state_.y.size();
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::size_t i = pick(state_.rng);
    const std::uint8_t next = unif(state_.rng) < logistic(h_[i]) ? 1 : 0;
    if (next != state_.y[i]) {
      const double sign = next ? 1.0 : -1.0;
      state_.y[i] = next;
      ones_ = next ? ones_ + 1 : ones_ - 1;
      w_.for_each_coupling(i, [&](std::size_t j, double c) { h_[j] += sign * c; });
    }
    ++state_.t;
  }

  std::size_t ones() const { return ones_; }
  const ChainState& state() const { return state_; }

 private:
  const WeightSystem& w_;
  ChainState state_;
  std::vector<double> h_;
  std::size_t ones_ = 0;
};

struct McmcEstimate {
  /// Time average of (1/N) Σ y_i after burn-in.
  double estimate = 0.0;
  /// Batch-means standard error.
  double std_error = 0.0;
};

inline constexpr std::size_t kBatchCount = 50;

/// Per-person stationary welfare by simulation. A sweep is N single-site
/// steps; the first burn_in sweeps are discarded.
inline McmcEstimate mcmc_welfare(const WeightSystem& w, std::size_t sweeps, std::size_t burn_in,
                                 std::uint64_t seed) {
  if (sweeps <= burn_in) throw Error("sweeps must exceed burn-in");
  const std::size_t n = w.size();
  if (n == 0) throw Error("empty network");
  GibbsChain chain(w, ChainState::random(n, seed));
  for (std::size_t s = 0; s < burn_in * n; ++s) chain.advance();
  const std::size_t kept = (sweeps - burn_in) * n;
  const std::size_t batches = std::min(kBatchCount, kept);
  std::vector<double> batch_sum(batches, 0.0);
  std::vector<std::size_t> batch_len(batches, 0);
  long double total = 0.0L;
  for (std::size_t s = 0; s < kept; ++s) {
    chain.advance();
    const double frac = static_cast<double>(chain.ones()) / static_cast<double>(n);
    total += frac;
    const std::size_t b = s * batches / kept;
    batch_sum[b] += frac;
    ++batch_len[b];
  }
  McmcEstimate out;
  out.estimate = static_cast<double>(total / static_cast<long double>(kept));
  if (batches > 1) {
    double mean = 0.0;
    std::vector<double> means(batches);
    for (std::size_t b = 0; b < batches; ++b) {
      means[b] = batch_sum[b] / static_cast<double>(batch_len[b]);
      mean += means[b];
    }
    mean /= static_cast<double>(batches);
    double var = 0.0;
    for (double m : means) var += (m - mean) * (m - mean);
    var /= static_cast<double>(batches - 1);
    out.std_error = std::sqrt(var / static_cast<double>(batches));
  }
  return out;
}

inline McmcEstimate mcmc_welfare(const Instance& inst, const Allocation& d, std::size_t sweeps, std::size_t burn_in,
                                 std::uint64_t seed) {
  return mcmc_welfare(weights(inst, d), sweeps, burn_in, seed);
}

namespace detail {

inline Configuration decode(std::uint64_t index, std::size_t n) {
  Configuration y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = (index >> i) & 1u;
  return y;
}

}  // namespace detail

/// One-step transition probability K(from, to) of the chain with uniform
/// unit selection; configurations are encoded as bit masks.
inline double transition_probability(const WeightSystem& w, std::uint64_t from, std::uint64_t to) {
  const std::size_t n = w.size();
  const Configuration y = detail::decode(from, n);
  const std::uint64_t diff = from ^ to;
  const double pick = 1.0 / static_cast<double>(n);
  auto prob_of = [&](std::size_t i, std::uint8_t value) {
    const double p1 = conditional_choice_prob(i, y, w);
    return value ? p1 : 1.0 - p1;
  };
  if (diff == 0) {
    double stay = 0.0;
    for (std::size_t i = 0; i < n; ++i) stay += pick * prob_of(i, y[i]);
    return stay;
  }
  if ((diff & (diff - 1)) != 0) return 0.0;
  const auto i = static_cast<std::size_t>(std::countr_zero(diff));
  return pick * prob_of(i, static_cast<std::uint8_t>((to >> i) & 1u));
}

/// ‖πK − π‖₁ for π the exact Gibbs law and K the single-site kernel. K is
/// applied row by row (each row has at most N+1 nonzeros), which equals the
/// dense 2^N × 2^N product.
inline double stationarity_check(const WeightSystem& w, std::size_t cap = kDefaultExactCap) {
  const std::size_t n = w.size();
  EnumerateOptions opt;
  opt.marginals = false;
  opt.probs = true;
  opt.cap = cap;
  const auto exact = enumerate_gibbs(w, opt);
  const auto& pi = exact.probs;
  const std::uint64_t total = std::uint64_t{1} << n;
  std::vector<long double> pik(total, 0.0L);
  const double pick = 1.0 / static_cast<double>(n);
  for (std::uint64_t s = 0; s < total; ++s) {
    const Configuration y = detail::decode(s, n);
    double stay = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p1 = conditional_choice_prob(i, y, w);
      const double keep = y[i] ? p1 : 1.0 - p1;
      stay += pick * keep;
      pik[s ^ (std::uint64_t{1} << i)] += static_cast<long double>(pi[s]) * pick * (1.0 - keep);
    }
    pik[s] += static_cast<long double>(pi[s]) * stay;
  }
  long double l1 = 0.0L;
  for (std::uint64_t s = 0; s < total; ++s) l1 += std::abs(pik[s] - static_cast<long double>(pi[s]));
  return static_cast<double>(l1);
}

/// max |π(y)K(y,y') − π(y')K(y',y)| over pairs differing in one unit.
inline double detailed_balance_error(const WeightSystem& w, std::size_t cap = kDefaultExactCap) {
  const std::size_t n = w.size();
  EnumerateOptions opt;
  opt.marginals = false;
  opt.probs = true;
  opt.cap = cap;
  const auto exact = enumerate_gibbs(w, opt);
  const std::uint64_t total = std::uint64_t{1} << n;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < total; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t t = s ^ (std::uint64_t{1} << i);
      if (t < s) continue;
      const double lhs = exact.probs[s] * transition_probability(w, s, t);
      const double rhs = exact.probs[t] * transition_probability(w, t, s);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  return worst;
}

}  // namespace netalloc
