/*
 * Copyright 2026 The APES Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "apes/accountant.hpp"

#include <cmath>
#include <vector>

#include "apes/budgets.hpp"
#include "gtest/gtest.h"
#include "oracles.hpp"

namespace apes {
namespace {

BudgetVector uniform_budgets(int n, double eps) {
  return BudgetVector{std::vector<double>(static_cast<std::size_t>(n), eps)};
}

TEST(EchoProb, SymmetricCaseCollapsesToExp) {
  for (double a : {0.05, 0.1, 0.5, 1.0, 3.0})
    EXPECT_NEAR(echo_prob(a, a), std::exp(-a), 1e-12);
}

TEST(EchoProb, AsymmetricOracleValues) {
  // Frozen 30-digit closed-form evaluations.
  EXPECT_NEAR(echo_prob(0.5, 1.0), 0.2955048006599361, 1e-12);
  EXPECT_NEAR(echo_prob(1.0, 0.5), 0.4579799818289760, 1e-12);
}

TEST(EchoProb, StaysInUnitIntervalOnDenseGrid) {
  for (double a = 0.02; a <= 3.5; a += 0.07) {
    for (double b = 0.02; b <= 3.5; b += 0.07) {
      const double p = echo_prob(a, b);
      EXPECT_GT(p, 0.0);
      EXPECT_LE(p, 1.0);
    }
  }
}

TEST(EchoProb, RejectsNonpositiveBudgets) {
  EXPECT_THROW(echo_prob(0.0, 1.0), parameter_error);
  EXPECT_THROW(echo_prob(1.0, -0.5), parameter_error);
}

TEST(EchoMass, MatchesBruteForceOnRandomVectors) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const BudgetVector budgets =
        sample_budgets(BudgetSpec::preset("Uniform2"), 157, seed);
    const double grouped = echo_mass(budgets);
    const double brute = apes_test::echo_mass_bruteforce(budgets.epsilons);
    EXPECT_NEAR(grouped, brute, 1e-9 * std::abs(brute));
  }
}

TEST(EchoMass, MatchesBruteForceWithRepeatedValues) {
  BudgetVector budgets{{0.5, 1.0, 0.5, 0.05, 1.0, 0.5, 0.05, 0.5}};
  EXPECT_NEAR(echo_mass(budgets),
              apes_test::echo_mass_bruteforce(budgets.epsilons), 1e-12);
}

TEST(EchoMass, UniformCollapsesToClosedForm) {
  EXPECT_NEAR(echo_mass(uniform_budgets(10000, 0.5)),
              9999.0 * std::exp(-0.5), 1e-8);
}

TEST(EonCentralBound, UniformAnchor) {
  const CentralBound bound =
      eon_central_bound(uniform_budgets(10000, 0.5), 1e-8);
  EXPECT_NEAR(bound.echo_mass, 6064.700066466622, 1e-7);
  // Frozen from a 30-digit evaluation of the closed form.
  EXPECT_NEAR(bound.eps_central, 0.1064271018543468, 1e-12);
  EXPECT_NEAR(bound.delta_central, std::tanh(0.25) * 1e-8, 1e-20);
}

TEST(EonCentralBound, InsufficientMassCarriesDiagnostics) {
  try {
    eon_central_bound(uniform_budgets(10, 1.0), 1e-8);
    FAIL() << "expected insufficient_echo_mass_error";
  } catch (const insufficient_echo_mass_error& e) {
    EXPECT_NEAR(e.echo_mass(), 9.0 * std::exp(-1.0), 1e-12);
    EXPECT_NEAR(e.threshold(), 16.0 * std::log(4.0e8), 1e-9);
  }
}

TEST(EonCentralBound, BeatsMaxBaselineOnHeterogeneousBudgets) {
  const BudgetVector budgets =
      sample_budgets(BudgetSpec::preset("Uniform2"), 10000, 7);
  const double eon = eon_central_bound(budgets, 1e-8).eps_central;
  const double fmt = fmt_max_baseline(budgets, 1e-8).eps_central;
  EXPECT_LT(eon, fmt);
}

TEST(EonCentralBound, UniformConsistencyWithMaxBaseline) {
  const BudgetVector budgets = uniform_budgets(10000, 0.5);
  const double eon = eon_central_bound(budgets, 1e-8).eps_central;
  const double fmt = fmt_max_baseline(budgets, 1e-8).eps_central;
  EXPECT_LT(std::abs(eon - fmt) / fmt, 1e-3);
}

TEST(EonCentralBound, NonincreasingWhenUsersAppended) {
  BudgetVector budgets = sample_budgets(BudgetSpec::preset("Uniform2"), 2000, 3);
  const double max_eps = budgets.max();
  double prev = eon_central_bound(budgets, 1e-8).eps_central;
  for (double appended : {0.05, 0.5, max_eps}) {
    budgets.epsilons.push_back(appended);
    const double next = eon_central_bound(budgets, 1e-8).eps_central;
    EXPECT_LE(next, prev) << "appended=" << appended;
    prev = next;
  }
}

TEST(EonCentralBound, SmallerDeltaShuffleGivesLargerEps) {
  const BudgetVector budgets = uniform_budgets(10000, 0.5);
  EXPECT_GT(eon_central_bound(budgets, 1e-8).eps_central,
            eon_central_bound(budgets, 1e-6).eps_central);
}

TEST(EonCentralBound, DeltaCentralBelowDeltaShuffle) {
  for (double eps : {0.05, 0.5, 3.0}) {
    const CentralBound bound =
        eon_central_bound(uniform_budgets(20000, eps), 1e-6);
    EXPECT_LT(bound.delta_central, bound.delta_shuffle);
  }
}

TEST(EonCentralBound, EpsStarOverrideIsMonotone) {
  const BudgetVector budgets = uniform_budgets(10000, 0.5);
  const double released = eon_central_bound(budgets, 1e-8).eps_central;
  const double smaller = eon_central_bound(budgets, 1e-8, 0.2).eps_central;
  EXPECT_LT(smaller, released);
  EXPECT_THROW(eon_central_bound(budgets, 1e-8, -1.0), parameter_error);
}

// Heterogeneity helps across the named preset distributions. (Not an
// arbitrary-vector law: a single outlier below an otherwise-max-budget
// population can lose to the baseline's extra user; see the ledger.)
TEST(EonCentralBound, HeterogeneityHelpsOnPresets) {
  for (const char* name :
       {"Uniform1", "Uniform2", "Gauss1", "Gauss2", "MixGauss1", "MixGauss2"}) {
    const BudgetVector budgets =
        sample_budgets(BudgetSpec::preset(name), 10000, 11);
    const double eon = eon_central_bound(budgets, 1e-8).eps_central;
    const double fmt = fmt_max_baseline(budgets, 1e-8).eps_central;
    EXPECT_LT(eon, fmt) << name;
  }
}

TEST(FmtMaxBaseline, UniformAnchor) {
  const CentralBound bound = fmt_max_baseline(uniform_budgets(10000, 0.5), 1e-8);
  EXPECT_NEAR(bound.eps_central, 0.1064220392220478, 1e-12);
  EXPECT_NEAR(bound.echo_mass, 10000.0 * std::exp(-0.5), 1e-8);
}

TEST(FmtMaxBaseline, DependsOnlyOnMaxBudget) {
  BudgetVector mixed{{0.1, 0.4, 1.0, 0.2, 1.0}};
  mixed.epsilons.resize(10000, 0.3);
  mixed.epsilons[2] = 1.0;
  const BudgetVector all_max = uniform_budgets(10000, 1.0);
  EXPECT_DOUBLE_EQ(fmt_max_baseline(mixed, 1e-8).eps_central,
                   fmt_max_baseline(all_max, 1e-8).eps_central);
}

TEST(FmtMaxBaseline, MonotoneInMaxEpsAndN) {
  double prev = 0.0;
  for (double eps : {0.1, 0.3, 0.5, 0.8}) {
    const double value =
        fmt_max_baseline(uniform_budgets(10000, eps), 1e-8).eps_central;
    EXPECT_GT(value, prev);
    prev = value;
  }
  EXPECT_GT(fmt_max_baseline(uniform_budgets(10000, 0.5), 1e-8).eps_central,
            fmt_max_baseline(uniform_budgets(20000, 0.5), 1e-8).eps_central);
  // Vanishing budget at fixed n: the bound goes to zero, never errors
  // (the precondition only tightens as eps grows).
  EXPECT_LT(fmt_max_baseline(uniform_budgets(1000000, 0.001), 1e-8).eps_central,
            1e-4);
}

TEST(FmtMaxBaseline, InsufficientMassIsAnError) {
  EXPECT_THROW(fmt_max_baseline(uniform_budgets(10, 1.0), 1e-8),
               insufficient_echo_mass_error);
}

TEST(LocalUserBound, ReferenceValues) {
  EXPECT_DOUBLE_EQ(local_user_bound(0.05, 7850), 392.5);
  EXPECT_DOUBLE_EQ(local_user_bound(1.0, 7850), 7850.0);
  EXPECT_DOUBLE_EQ(local_user_bound(0.05, 1570), 78.5);
  EXPECT_THROW(local_user_bound(0.0, 10), parameter_error);
  EXPECT_THROW(local_user_bound(0.5, 0), parameter_error);
}

TEST(UserLevelComposition, SparsifiedReferenceAnchor) {
  const double delta_c = 4.62e-9;
  const double delta_prime = 3.6e-5 - 2.0 * 1570 * delta_c;
  const UserLevelBound bound =
      user_level_composition(0.057, delta_c, 1570, delta_prime);
  // Frozen direct evaluation; within 2% of the reference 25.6.
  EXPECT_NEAR(bound.eps_user, 25.30681479645685, 1e-9);
  EXPECT_NEAR(bound.delta_user, 3.6e-5, 1e-19);
  EXPECT_EQ(bound.dims, 1570);
}

TEST(UserLevelComposition, ExceedsCentralEps) {
  for (double eps_c : {0.01, 0.1, 0.5})
    EXPECT_GT(user_level_composition(eps_c, 1e-9, 1, 1e-5).eps_user, eps_c);
}

TEST(UserLevelComposition, DoublingBScalesBetweenSqrt2And2) {
  const double delta_prime = 1e-5;
  for (int b : {10, 100, 1570}) {
    const double one =
        user_level_composition(0.057, 4.62e-9, b, delta_prime).eps_user;
    const double two =
        user_level_composition(0.057, 4.62e-9, 2 * b, delta_prime).eps_user;
    EXPECT_GT(two / one, std::sqrt(2.0));
    EXPECT_LT(two / one, 2.0);
  }
}

TEST(UserLevelComposition, StrictlyIncreasingInB) {
  double prev = 0.0;
  for (int b : {1, 10, 100, 1570, 7850}) {
    const double value =
        user_level_composition(0.057, 4.62e-9, b, 1e-5).eps_user;
    EXPECT_GT(value, prev);
    prev = value;
  }
}

TEST(UserLevelComposition, ValidatesArguments) {
  EXPECT_THROW(user_level_composition(0.0, 0.0, 10, 1e-5), parameter_error);
  EXPECT_THROW(user_level_composition(0.1, 0.0, 0, 1e-5), parameter_error);
  EXPECT_THROW(user_level_composition(0.1, 0.0, 10, 0.0), parameter_error);
  EXPECT_THROW(user_level_composition(0.1, 0.0, 10, 1.0), parameter_error);
}

TEST(BudgetVectorType, Validation) {
  EXPECT_THROW(BudgetVector{{1.0}}.validate(), parameter_error);
  EXPECT_THROW((BudgetVector{{1.0, 0.0}}).validate(), parameter_error);
  EXPECT_THROW((BudgetVector{{1.0, -0.2}}).validate(), parameter_error);
  EXPECT_NO_THROW((BudgetVector{{1.0, 0.2}}).validate());
}

}  // namespace
}  // namespace apes
