#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "support.hpp"

using namespace netalloc;
using namespace testing_support;

namespace {

Instance isolated_pair_instance(std::vector<double> x, ThetaParams theta, std::vector<Edge> edges = {}) {
  const std::size_t n = x.size();
  return Instance(Network(n, edges), Covariates::scalar(x), SimilarityKernel::abs_diff(), std::move(theta));
}

}  // namespace

TEST(Utility, ZeroWhenChoosingZero) {
  std::mt19937_64 rng(1);
  const Instance inst = random_instance(6, 0.5, rng, random_mild_theta(rng));
  const Allocation d = random_treatment(6, rng, 0.5);
  for (std::uint64_t s = 0; s < 64; ++s) {
    const auto y = bits(s, 6);
    for (std::size_t i = 0; i < 6; ++i) {
      if (!y[i]) {
        EXPECT_EQ(utility(i, y, inst, d), 0.0);
      }
    }
  }
}

TEST(Utility, IsolatedUntreatedUnit) {
  const ThetaParams t = parameter_set(1, 1.0);
  const Instance inst = isolated_pair_instance({1.0, 0.0}, t);
  const Configuration y{1, 0};
  EXPECT_DOUBLE_EQ(utility(0, y, inst, Allocation(2)), t.theta0 + 1.0 * t.theta2[0]);
}

TEST(Utility, TreatedPairBothChoosingOne) {
  ThetaParams t = parameter_set(1, 1.0);
  const Instance inst(Network(2, {{0, 1}}), Covariates::scalar({1.0, 1.0}), SimilarityKernel::constant_value(1.0), t);
  const Allocation both = Allocation::from_indices(2, {0, 1});
  const double expected = t.theta0 + t.theta1 + 1.0 * (t.theta2[0] + t.theta3[0]) + t.theta4 + t.theta5 + t.theta6;
  EXPECT_NEAR(utility(0, {1, 1}, inst, both), expected, 1e-15);
  EXPECT_NEAR(utility(1, {1, 1}, inst, both), expected, 1e-15);
}

TEST(Potential, ZeroAndSingleton) {
  const ThetaParams t = parameter_set(1, 1.0);
  const Instance one = isolated_pair_instance({1.0}, t);
  EXPECT_EQ(potential({0}, one, Allocation(1)), 0.0);
  EXPECT_DOUBLE_EQ(potential({1}, one, Allocation(1)), t.theta0 + t.theta2[0]);
}

TEST(Potential, UnilateralDifferencesMatchUtility) {
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 2 + rep % 9;
    const std::size_t k = 1 + rep % 2;
    const Instance inst = random_instance(n, 0.5, rng, random_mild_theta(rng, k));
    const Allocation d = random_treatment(n, rng, 0.4);
    auto y = bits(rng(), n);
    const std::size_t i = rng() % n;
    auto y1 = y, y0 = y;
    y1[i] = 1;
    y0[i] = 0;
    const double dphi = potential(y1, inst, d) - potential(y0, inst, d);
    const double du = utility(i, y1, inst, d) - utility(i, y0, inst, d);
    worst = std::max(worst, std::abs(dphi - du));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Potential, AgreesWithIndependentTranscription) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 2 + rep % 7;
    const Instance inst = random_instance(n, 0.6, rng, random_mild_theta(rng));
    const Allocation d = random_treatment(n, rng);
    for (std::uint64_t s = 0; s < (1u << n); ++s) {
      EXPECT_NEAR(potential(bits(s, n), inst, d), oracle_potential(inst, d, bits(s, n)), 1e-12);
    }
  }
}

TEST(Potential, InvariantUnderSwappingIdenticalUnits) {
  // Units 1 and 2 share covariates, treatment and neighbourhood {0, 3}.
  const Instance inst(Network(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}}), Covariates::scalar({0.0, 1.0, 1.0, 0.0}),
                      SimilarityKernel::abs_diff(), parameter_set(1, 0.5));
  const Allocation d = Allocation::from_indices(4, {0});
  for (std::uint64_t s = 0; s < 16; ++s) {
    auto y = bits(s, 4);
    auto swapped = y;
    std::swap(swapped[1], swapped[2]);
    EXPECT_DOUBLE_EQ(potential(y, inst, d), potential(swapped, inst, d));
  }
}

TEST(Weights, NoEdges) {
  const ThetaParams t = parameter_set(1, 1.0);
  const Instance inst = isolated_pair_instance({0.0, 1.0, 1.0}, t);
  const Allocation d = Allocation::from_indices(3, {1});
  const WeightSystem w = weights(inst, d);
  for (std::size_t i = 0; i < 3; ++i) {
    const double x = inst.covariates()(i, 0);
    EXPECT_DOUBLE_EQ(w.w1()[i], t.theta0 + t.theta1 * d[i] + x * (t.theta2[0] + t.theta3[0] * d[i]));
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(w.w2()(i, j), 0.0);
  }
}

TEST(Weights, UntreatedPair) {
  const ThetaParams t = parameter_set(1, 0.25);
  const Instance inst = isolated_pair_instance({0.0, 2.0}, t, {{0, 1}});
  const WeightSystem w = weights(inst, Allocation(2));
  EXPECT_DOUBLE_EQ(w.w2()(0, 1), 0.25 / 2 * 2.0 * t.theta5);
  EXPECT_DOUBLE_EQ(w.w2()(1, 0), w.w2()(0, 1));
}

TEST(Weights, EnergyMatchesPotentialExhaustively) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 12; ++rep) {
    const std::size_t n = rep < 4 ? 3 : (rep < 11 ? 2 + rep % 8 : 10);
    const Instance inst = random_instance(n, 0.5, rng, random_mild_theta(rng, 1 + rep % 2));
    const Allocation d = random_treatment(n, rng);
    const WeightSystem w = weights(inst, d);
    for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
      const auto y = bits(s, n);
      EXPECT_NEAR(w.energy(y), potential(y, inst, d), 1e-12);
    }
  }
}

TEST(Weights, FieldsFollowDefinition) {
  std::mt19937_64 rng(5);
  const Instance inst = random_instance(9, 0.4, rng, random_mild_theta(rng));
  const Allocation d = random_treatment(9, rng, 0.5);
  const WeightSystem w = weights(inst, d);
  const auto& t = inst.theta();
  for (std::size_t i = 0; i < 9; ++i) {
    const double x = inst.covariates()(i, 0);
    double expected = t.theta0 + t.theta1 * d[i] + x * t.theta2[0] + x * t.theta3[0] * d[i];
    for (std::size_t j = 0; j < 9; ++j) {
      const double g = inst.network().connected(i, j) ? 1.0 : 0.0;
      expected += t.a_n * t.theta4 * inst.similarity()(i, j) * g * d[j];
      EXPECT_NEAR(w.w2()(i, j), t.a_n / 2 * inst.similarity()(i, j) * g * (t.theta5 + t.theta6 * d[i] * d[j]),
                  1e-15);
    }
    EXPECT_NEAR(w.w1()[i], expected, 1e-13);
    EXPECT_EQ(w.w2()(i, i), 0.0);
  }
}

TEST(WeightSystem, RejectsAsymmetryAndDiagonal) {
  SquareMatrix<double> asym(2, 0.0);
  asym(0, 1) = 1.0;
  EXPECT_THROW(WeightSystem({0.0, 0.0}, asym), Error);
  SquareMatrix<double> diag(2, 0.0);
  diag(1, 1) = 1.0;
  EXPECT_THROW(WeightSystem({0.0, 0.0}, diag), Error);
}

TEST(ConditionalChoice, IsolatedUnitValues) {
  ThetaParams zero;
  const Instance half = isolated_pair_instance({0.0}, zero);
  EXPECT_DOUBLE_EQ(conditional_choice_prob(0, {0}, half, Allocation(1)), 0.5);
  const Instance set1 = isolated_pair_instance({0.0}, parameter_set(1, 1.0));
  EXPECT_NEAR(conditional_choice_prob(0, {0}, set1, Allocation(1)), 1.0 / (1.0 + std::exp(2.0)), 1e-15);
  EXPECT_NEAR(conditional_choice_prob(0, {0}, set1, Allocation(1)), 0.1192, 1e-4);
}

TEST(ConditionalChoice, EqualsLogisticOfUtilityGain) {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rep % 8;
    const Instance inst = random_instance(n, 0.5, rng, random_mild_theta(rng));
    const Allocation d = random_treatment(n, rng);
    auto y = bits(rng(), n);
    const std::size_t i = rng() % n;
    auto y1 = y;
    y1[i] = 1;
    const double p = conditional_choice_prob(i, y, inst, d);
    const double u1 = utility(i, y1, inst, d);
    EXPECT_NEAR(p, std::exp(u1) / (1.0 + std::exp(u1)), 1e-14);
    EXPECT_NEAR(p, conditional_choice_prob(i, y, weights(inst, d)), 1e-14);
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
    // The unit's own entry is irrelevant.
    auto flipped = y;
    flipped[i] ^= 1;
    EXPECT_EQ(p, conditional_choice_prob(i, flipped, inst, d));
  }
}

TEST(Instance, ValidatesInputs) {
  const ThetaParams t = parameter_set(1, 1.0);
  EXPECT_THROW(Instance(Network(2, {}), Covariates::scalar({0, 1, 1}), SimilarityKernel::abs_diff(), t), Error);
  ThetaParams wide = t;
  wide.theta2 = {0.1, 0.2};
  EXPECT_THROW(Instance(Network(2, {}), Covariates::scalar({0, 1}), SimilarityKernel::abs_diff(), wide), Error);
  ThetaParams bad_scale = t;
  bad_scale.a_n = 0.0;
  EXPECT_THROW(Instance(Network(2, {}), Covariates::scalar({0, 1}), SimilarityKernel::abs_diff(), bad_scale), Error);
}

TEST(ParameterSets, BuiltInValues) {
  const ThetaParams one = parameter_set(1, 0.1);
  EXPECT_EQ(one.theta0, -2.0);
  EXPECT_EQ(one.theta1, 0.5);
  EXPECT_EQ(one.theta2[0], 0.1);
  EXPECT_EQ(one.theta3[0], 0.6);
  EXPECT_EQ(one.theta4, 0.7);
  EXPECT_EQ(one.theta5, 0.8);
  EXPECT_EQ(one.theta6, 0.9);
  EXPECT_EQ(one.a_n, 0.1);
  const ThetaParams two = parameter_set(2, 1.0);
  EXPECT_EQ(two.theta5, 7.0);
  EXPECT_EQ(two.theta6, 7.0);
  EXPECT_TRUE(one.positivity_profile());
  EXPECT_THROW(parameter_set(3, 1.0), Error);
}

TEST(AllocationType, CountsAndIndices) {
  const Allocation d = Allocation::from_indices(5, {3, 1});
  EXPECT_EQ(d.treated_count(), 2u);
  EXPECT_EQ(d.treated_indices(), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(d.with(0).treated_count(), 3u);
  EXPECT_THROW(Allocation::from_indices(2, {2}), Error);
}
