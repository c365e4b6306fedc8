#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "netalloc/common.hpp"
#include "netalloc/meanfield.hpp"
#include "netalloc/model.hpp"

namespace netalloc {

/// Summary statistics of an instance that the closed-form bounds consume.
struct BoundInputs {
  std::size_t n = 0;
  std::size_t max_degree = 0;
  std::size_t min_degree = 0;
  double m_lower = 0.0;
  double m_upper = 0.0;
  double min_x_theta2 = 0.0;
  double max_x_theta2 = 0.0;
  double max_x_theta3 = 0.0;
  double max_abs_x_theta2 = 0.0;
  double max_abs_x_theta3 = 0.0;
  ThetaParams theta;

  static BoundInputs from(const Instance& inst) {
    BoundInputs b;
    b.n = inst.size();
    b.max_degree = inst.network().max_degree();
    b.min_degree = inst.network().min_degree();
    b.m_lower = inst.similarity_bounds().lower;
    b.m_upper = inst.similarity_bounds().upper;
    b.theta = inst.theta();
    for (std::size_t i = 0; i < b.n; ++i) {
      const double x2 = inst.x_theta2(i);
      const double x3 = inst.x_theta3(i);
      if (i == 0) {
        b.min_x_theta2 = b.max_x_theta2 = x2;
        b.max_x_theta3 = x3;
      }
      b.min_x_theta2 = std::min(b.min_x_theta2, x2);
      b.max_x_theta2 = std::max(b.max_x_theta2, x2);
      b.max_x_theta3 = std::max(b.max_x_theta3, x3);
      b.max_abs_x_theta2 = std::max(b.max_abs_x_theta2, std::abs(x2));
      b.max_abs_x_theta3 = std::max(b.max_abs_x_theta3, std::abs(x3));
    }
    return b;
  }
};

struct ZetaResult {
  double zeta = 0.0;
  /// θ₁, θ₃, θ₄, θ₅, θ₆ ≥ 0 with θ₁, θ₄ > 0.
  bool positivity_holds = false;
  /// N ≥ (A_N θ₄ N_lower m_lower + θ₁) / 4.
  bool assumption_n_holds = false;

  bool certifying() const { return positivity_holds && assumption_n_holds && zeta > 0.0 && zeta < 1.0; }
};

/// ζ = (1/N) · min{Λ'(θ₀ + min X'θ₂), Λ'(θ₀ + θ₁ + max X'θ₂ + max X'θ₃ + A_N(θ₄+θ₅+θ₆) m̄ N̄)}
///       · (A_N θ₄ N_lower m_lower + θ₁).
/// ζ lower-bounds the submodularity ratio of W̃ and 1 − ζ upper-bounds its
/// curvature. It is computed even when the preconditions fail, in which case
/// the result is flagged as non-certifying.
inline ZetaResult zeta(const BoundInputs& b) {
  const auto& t = b.theta;
  const double low_arg = t.theta0 + b.min_x_theta2;
  const double high_arg = t.theta0 + t.theta1 + b.max_x_theta2 + b.max_x_theta3 +
                          t.a_n * (t.theta4 + t.theta5 + t.theta6) * b.m_upper * static_cast<double>(b.max_degree);
  const double slope = std::min(logistic_derivative(low_arg), logistic_derivative(high_arg));
  const double gain = t.a_n * t.theta4 * static_cast<double>(b.min_degree) * b.m_lower + t.theta1;
  ZetaResult r;
  r.zeta = b.n == 0 ? 0.0 : slope * gain / static_cast<double>(b.n);
  r.positivity_holds = t.positivity_profile();
  r.assumption_n_holds = static_cast<double>(b.n) >= gain / 4.0;
  return r;
}

inline ZetaResult zeta(const Instance& inst) { return zeta(BoundInputs::from(inst)); }

/// (1/ξ)(1 − e^{−ξγ}); the ξ → 0 limit is γ.
inline double guarantee_factor(double xi, double gamma) {
  if (!(xi >= 0.0 && xi <= 1.0)) throw Error("curvature must lie in [0, 1]");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error("submodularity ratio must lie in (0, 1]");
  if (xi == 0.0) return gamma;
  return -std::expm1(-xi * gamma) / xi;
}

struct KlTerms {
  double a = 0.0;  ///< sup-norm bound of the energy
  double b = 0.0;  ///< bound on each first derivative
  double c = 0.0;  ///< bound on each mixed second derivative (per edge)
};

inline KlTerms kl_terms(const BoundInputs& in) {
  const auto& t = in.theta;
  const double n = static_cast<double>(in.n);
  const double nbar = static_cast<double>(in.max_degree);
  const double lin = std::abs(t.theta0) + std::abs(t.theta1) + in.max_abs_x_theta2 + in.max_abs_x_theta3;
  const double spill = std::abs(t.theta4) + std::abs(t.theta5) + std::abs(t.theta6);
  KlTerms k;
  k.a = n * lin + in.m_upper * t.a_n * n * nbar * spill;
  k.b = lin + in.m_upper * t.a_n * nbar * spill;
  k.c = in.m_upper * t.a_n * (std::abs(t.theta5) + std::abs(t.theta6));
  return k;
}

/// Explicit non-asymptotic upper bound on KL(Q* || P), uniform over allocations:
/// b/4 + 3 + 2N log 2 + log(N³ + N) + 4 sqrt(b²N + ¼ N̄ N (a c² + b² c + 4 b c)) + log 2.
inline double kl_upper_bound(const BoundInputs& in) {
  const KlTerms k = kl_terms(in);
  const double n = static_cast<double>(in.n);
  const double nbar = static_cast<double>(in.max_degree);
  const double root =
      std::sqrt(k.b * k.b * n + 0.25 * nbar * n * (k.a * k.c * k.c + k.b * k.b * k.c + 4.0 * k.b * k.c));
  return k.b / 4.0 + 3.0 + 2.0 * n * std::log(2.0) + std::log(n * n * n + n) + 4.0 * root + std::log(2.0);
}

inline double kl_upper_bound(const Instance& inst) { return kl_upper_bound(BoundInputs::from(inst)); }

/// Constants of the asymptotic form C₁A_N N̄ + C₂N + O(√(…)) + o(N). Reported
/// for information only; the checkable bound is kl_upper_bound().
inline std::array<double, 9> asymptotic_constants(const BoundInputs& in) {
  const auto& t = in.theta;
  const double m = in.m_upper;
  const double lin = std::abs(t.theta0) + std::abs(t.theta1) + in.max_abs_x_theta2 + in.max_abs_x_theta3;
  const double s3 = std::abs(t.theta4) + std::abs(t.theta5) + std::abs(t.theta6);
  const double s2 = std::abs(t.theta5) + std::abs(t.theta6);
  return {
      0.25 * m * s3,
      2.0 * std::log(2.0),
      32.0 * m * lin * s3,
      16.0 * m * m * s3 * s3,
      4.0 * m * (lin + 4.0) * lin * s2,
      8.0 * m * m * (lin + 2.0) * s3 * s2,
      4.0 * m * m * m * s3 * s3 * s2,
      4.0 * m * m * lin * s2 * s2,
      4.0 * m * m * m * s3 * s2 * s2,
  };
}

struct BoundsReport {
  double zeta = 0.0;
  double xi_up = 1.0;
  double gamma_low = 0.0;
  double guarantee_factor = 0.0;
  double kl_upper_bound = 0.0;
  double regret_upper_bound = 0.0;
  /// Scale U multiplying the greedy term: W̃ at the BFVA optimum when known, N otherwise.
  double regret_scale = 0.0;
  bool assumption_n_holds = false;
  bool positivity_holds = false;
  bool contraction_holds = false;
  std::array<double, 9> asymptotic_constants{};
  std::vector<std::string> diagnostics;
};

/// sqrt(8 · KL bound) + (1 − guarantee factor) · U.
inline double regret_upper_bound(double kl_bound, double factor, double scale) {
  return std::sqrt(8.0 * kl_bound) + (1.0 - factor) * scale;
}

inline BoundsReport bounds_report(const Instance& inst, std::optional<double> bfva_welfare = std::nullopt) {
  const BoundInputs in = BoundInputs::from(inst);
  const ZetaResult z = zeta(in);
  BoundsReport r;
  r.zeta = z.zeta;
  r.gamma_low = z.zeta;
  r.xi_up = 1.0 - z.zeta;
  r.positivity_holds = z.positivity_holds;
  r.assumption_n_holds = z.assumption_n_holds;
  r.contraction_holds = contraction_certificate(inst.theta(), in.m_upper, in.max_degree);
  if (z.zeta > 0.0 && z.zeta <= 1.0) {
    r.guarantee_factor = guarantee_factor(r.xi_up, r.gamma_low);
  } else {
    r.diagnostics.push_back("zeta is not positive; greedy guarantee factor set to 0");
  }
  if (!z.certifying()) {
    r.diagnostics.push_back("bound preconditions not met (positivity or sample-size condition); zeta is non-certifying");
  }
  if (in.m_lower == 0.0) {
    r.diagnostics.push_back("m_lower = 0: the guarantee rests on the direct treatment effect theta1 alone");
  }
  if (!r.contraction_holds) {
    r.diagnostics.push_back("contraction condition fails; mean-field fixed point may not be unique");
  }
  r.kl_upper_bound = kl_upper_bound(in);
  r.regret_scale = bfva_welfare ? *bfva_welfare : static_cast<double>(in.n);
  r.regret_upper_bound = regret_upper_bound(r.kl_upper_bound, r.guarantee_factor, r.regret_scale);
  r.asymptotic_constants = asymptotic_constants(in);
  return r;
}

inline double regret_upper_bound(const Instance& inst, std::optional<double> bfva_welfare = std::nullopt) {
  return bounds_report(inst, bfva_welfare).regret_upper_bound;
}

}  // namespace netalloc
