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
#ifndef APES_ACCOUNTANT_HPP_
#define APES_ACCOUNTANT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "apes/error.hpp"

namespace apes {

// Per-user, per-dimension local privacy budgets eps^l_1 .. eps^l_n.
struct BudgetVector {
  std::vector<double> epsilons;

  int n() const { return static_cast<int>(epsilons.size()); }

  void validate() const {
    if (epsilons.size() < 2)
      throw parameter_error("budget vector needs at least 2 users");
    for (double e : epsilons)
      if (!(e > 0.0) || !std::isfinite(e))
        throw parameter_error("budgets must be positive finite reals");
  }

  double max() const { return *std::max_element(epsilons.begin(), epsilons.end()); }
  double min() const { return *std::min_element(epsilons.begin(), epsilons.end()); }
};

// A central (eps, delta) guarantee together with the echo mass it was
// derived from. echo_mass is T_sum = sum_{i=2..n} sum_{j=1..n} p_ij / n for
// the shuffle bound, or its uniform-budget equivalent n * exp(-max eps) for
// the max-budget baseline.
struct CentralBound {
  double eps_central = 0.0;
  double delta_central = 0.0;
  double delta_shuffle = 0.0;
  double echo_mass = 0.0;
};

// User-level central guarantee after composing over sparsified dimensions.
struct UserLevelBound {
  double eps_user = 0.0;
  double delta_user = 0.0;
  int dims = 0;  // b, the number of retained dimensions
};

// Probability that user i's perturbed message doubles as an "echo" of a
// message perturbed at budget eps_j:
//
//   p_ij = (eps_i / eps_j)
//        * (1 - exp(-eps_j)) / (1 - exp(-eps_i))
//        * exp(-max(eps_i, eps_j))
//
// the tight bound = clip configuration of the Clip-Laplace neighbor
// divergence. Equals exp(-eps) when both budgets are eps, and always lies
// in (0, 1].
inline double echo_prob(double eps_i, double eps_j) {
  if (!(eps_i > 0.0) || !(eps_j > 0.0))
    throw parameter_error("echo_prob requires positive budgets");
  const double gi = eps_i / (-std::expm1(-eps_i));
  const double gj = eps_j / (-std::expm1(-eps_j));
  return (gi / gj) * std::exp(-std::max(eps_i, eps_j));
}

namespace detail {

struct BudgetGroup {
  double eps;
  double count;
};

// Exact grouping of a budget vector by value, ascending. Summing over
// groups instead of users makes the O(n^2) echo sum and the calibration
// mixture cheap when budgets repeat, without changing any result.
inline std::vector<BudgetGroup> group_budgets(const std::vector<double>& eps) {
  std::vector<double> sorted(eps);
  std::sort(sorted.begin(), sorted.end());
  std::vector<BudgetGroup> groups;
  for (double e : sorted) {
    if (!groups.empty() && groups.back().eps == e)
      groups.back().count += 1.0;
    else
      groups.push_back({e, 1.0});
  }
  return groups;
}

}  // namespace detail

// T_sum = sum_{i=2..n} sum_{j=1..n} p_ij / n, where the excluded user 1 is
// the worst-case target holding the maximum budget. Grouping by unique
// value and sweeping prefix sums in ascending order makes this exact in
// O(n log n) with a fixed, bit-stable summation order; with all budgets
// equal it reduces to (n - 1) * exp(-eps).
inline double echo_mass(const BudgetVector& budgets) {
  budgets.validate();
  const auto groups = detail::group_budgets(budgets.epsilons);
  const double n = static_cast<double>(budgets.n());

  // total = sum over all ordered pairs (i, j), including i == j, of
  //   (g_i / g_j) * exp(-max(eps_i, eps_j))
  // split by which side attains the max; g(eps) = eps / (1 - exp(-eps)).
  double total = 0.0;
  double prefix_g = 0.0;      // sum of count * g over strictly smaller values
  double prefix_inv_g = 0.0;  // sum of count / g over strictly smaller values
  double inv_g_all = 0.0;
  for (const auto& grp : groups) {
    const double g = grp.eps / (-std::expm1(-grp.eps));
    const double w = std::exp(-grp.eps);
    total += grp.count * (w / g) * prefix_g;        // max on the j side
    total += grp.count * g * w * prefix_inv_g;      // max on the i side
    total += grp.count * grp.count * w;             // equal values
    prefix_g += grp.count * g;
    prefix_inv_g += grp.count / g;
    inv_g_all += grp.count / g;
  }

  // Remove the generator row of the single excluded max-budget user:
  // p_{max,j} = (g_max / g_j) * exp(-eps_max) for every j.
  const auto& top = groups.back();
  const double g_max = top.eps / (-std::expm1(-top.eps));
  const double row_max = g_max * std::exp(-top.eps) * inv_g_all;

  return (total - row_max) / n;
}

// Applicability threshold of the shuffle bounds: 16 * ln(4 / delta).
inline double echo_mass_threshold(double delta) {
  if (!(delta > 0.0) || !(delta < 1.0))
    throw parameter_error("delta must lie in (0, 1)");
  return 16.0 * std::log(4.0 / delta);
}

namespace detail {

// Shared closed form: given the echo mass T and the worst-case budget
// eps_star,
//
//   eps_c = ln(1 + tanh(eps_star / 2)
//                  * (8 * sqrt(ln(4/delta) / T) + 8 / T))
//   delta_c = tanh(eps_star / 2) * delta
//
// (tanh(x/2) is (e^x - 1)/(e^x + 1) in overflow-free form). Throws if the
// mass is below the applicability threshold: an inapplicable bound must
// never be reported as a number.
inline CentralBound bound_from_mass(double eps_star, double mass,
                                    double delta) {
  const double threshold = echo_mass_threshold(delta);
  if (!(mass >= threshold))
    throw insufficient_echo_mass_error(mass, threshold);
  const double factor = std::tanh(eps_star / 2.0);
  const double inner =
      8.0 * std::sqrt(std::log(4.0 / delta) / mass) + 8.0 / mass;
  CentralBound bound;
  bound.eps_central = std::log1p(factor * inner);
  bound.delta_central = factor * delta;
  bound.delta_shuffle = delta;
  bound.echo_mass = mass;
  return bound;
}

}  // namespace detail

// Central bound of the shuffled personalized-budget process. eps_star
// defaults to max_j eps^l_j (the released worst-case guarantee); passing a
// different positive value evaluates the generalized bound for research
// use.
inline CentralBound eon_central_bound(
    const BudgetVector& budgets, double delta_shuffle,
    std::optional<double> eps_star = std::nullopt) {
  budgets.validate();
  const double star = eps_star.value_or(budgets.max());
  if (!(star > 0.0)) throw parameter_error("eps_star must be > 0");
  return detail::bound_from_mass(star, echo_mass(budgets), delta_shuffle);
}

// Baseline shuffle bound that treats every user at the maximum budget; its
// echo-mass equivalent is n * exp(-max eps). Differs from the
// heterogeneous bound only through that mass, so with uniform budgets the
// two agree up to (n-1) vs n.
inline CentralBound fmt_max_baseline(const BudgetVector& budgets,
                                     double delta) {
  budgets.validate();
  const double max_eps = budgets.max();
  const double mass =
      static_cast<double>(budgets.n()) * std::exp(-max_eps);
  return detail::bound_from_mass(max_eps, mass, delta);
}

// Dimension-level budget composed over d dimensions at user level: d * eps.
// Sparsified uploads pass the retained dimension count instead of d.
inline double local_user_bound(double eps_dim, int dims) {
  if (!(eps_dim > 0.0)) throw parameter_error("eps_dim must be > 0");
  if (dims < 1) throw parameter_error("dims must be >= 1");
  return static_cast<double>(dims) * eps_dim;
}

// m-fold advanced composition of an eps-DP block at slack delta_prime:
// eps * sqrt(2m * ln(1/delta_prime)) + m * eps * (exp(eps) - 1).
inline double advanced_composition(double eps, int folds,
                                   double delta_prime) {
  if (!(eps > 0.0)) throw parameter_error("eps must be > 0");
  if (folds < 1) throw parameter_error("folds must be >= 1");
  if (!(delta_prime > 0.0) || !(delta_prime < 1.0))
    throw parameter_error("delta_prime must lie in (0, 1)");
  const double m = static_cast<double>(folds);
  return eps * std::sqrt(2.0 * m * std::log(1.0 / delta_prime)) +
         m * eps * std::expm1(eps);
}

// User-level central bound after extracting b dimensions. Extraction has
// sensitivity 2b, hence 2b composition folds:
//
//   eps_uc  = eps_c * sqrt(4b * ln(1/delta_prime))
//           + 2b * eps_c * (exp(eps_c) - 1)
//   delta_uc = delta_prime + 2b * delta_c
inline UserLevelBound user_level_composition(double eps_c, double delta_c,
                                             int b, double delta_prime) {
  if (!(eps_c > 0.0)) throw parameter_error("eps_c must be > 0");
  if (!(delta_c >= 0.0)) throw parameter_error("delta_c must be >= 0");
  if (b < 1) throw parameter_error("b must be >= 1");
  UserLevelBound bound;
  bound.eps_user = advanced_composition(eps_c, 2 * b, delta_prime);
  bound.delta_user = delta_prime + 2.0 * static_cast<double>(b) * delta_c;
  bound.dims = b;
  return bound;
}

}  // namespace apes

#endif  // APES_ACCOUNTANT_HPP_
