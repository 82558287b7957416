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
#ifndef APES_PIPELINE_HPP_
#define APES_PIPELINE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "apes/accountant.hpp"
#include "apes/clip_laplace.hpp"
#include "apes/error.hpp"
#include "apes/parallel.hpp"
#include "apes/rng.hpp"

namespace apes {

// One round's worth of per-user gradients (n rows, d dimensions) together
// with the budget vector. Columns keep their dimension index through
// shuffling; only the user <-> row pairing is destroyed.
struct GradientBatch {
  int n = 0;
  int d = 0;
  std::vector<double> values;  // row-major n x d
  BudgetVector budgets;
  double clip_bound = 0.0;
  bool shuffled = false;

  double& at(int row, int dim) {
    return values[static_cast<std::size_t>(row) * d + dim];
  }
  double at(int row, int dim) const {
    return values[static_cast<std::size_t>(row) * d + dim];
  }

  // Unlike the accountant (which needs n >= 2 for a shuffle population), a
  // batch is well-formed with a single user.
  void validate() const {
    if (n < 1 || d < 1) throw parameter_error("batch must be non-empty");
    if (values.size() != static_cast<std::size_t>(n) * d)
      throw parameter_error("batch value storage has wrong size");
    if (budgets.n() != n)
      throw parameter_error("budget vector length must equal user count");
    for (double e : budgets.epsilons)
      if (!(e > 0.0)) throw parameter_error("budgets must be positive");
    if (!(clip_bound > 0.0)) throw parameter_error("clip bound must be > 0");
  }
};

inline void clip_inplace(std::span<double> g, double clip) {
  if (!(clip > 0.0)) throw parameter_error("clip bound must be > 0");
  for (double& x : g) x = std::clamp(x, -clip, clip);
}

// Coordinate-wise clamp into [-clip, clip].
inline std::vector<double> clip_gradient(std::vector<double> g, double clip) {
  clip_inplace(g, clip);
  return g;
}

inline void perturb_inplace(std::span<double> g, double eps, double clip,
                            Rng& rng) {
  ClipLaplaceParams params = ClipLaplaceParams::for_budget(0.0, eps, clip);
  for (double& x : g) {
    if (std::abs(x) > clip)
      throw parameter_error("perturb input must already be clipped");
    params.center = x;
    x = clap_quantile(params, rng.uniform());
  }
}

// Per-dimension randomization: each coordinate independently replaced by a
// draw centered on it with scale 2*clip/eps, truncated to [-clip, clip].
inline std::vector<double> perturb_gradient(std::vector<double> g, double eps,
                                            double clip, Rng& rng) {
  perturb_inplace(g, eps, clip, rng);
  return g;
}

// Shuffles each dimension's column by its own uniform permutation and the
// budget vector by a further one, all drawn from `rng` in a fixed order.
// The multiset of values per column and the budget multiset are preserved
// exactly. Shuffling an already-shuffled batch is a state error.
inline GradientBatch shuffle_batch(GradientBatch batch, Rng& rng) {
  batch.validate();
  if (batch.shuffled) throw state_error("batch is already shuffled");
  for (int k = 0; k < batch.d; ++k) {
    // Fisher-Yates over column k.
    for (int i = batch.n - 1; i > 0; --i) {
      const int j = static_cast<int>(
          rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
      std::swap(batch.at(i, k), batch.at(j, k));
    }
  }
  auto& eps = batch.budgets.epsilons;
  for (int i = batch.n - 1; i > 0; --i) {
    const int j = static_cast<int>(
        rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
    std::swap(eps[static_cast<std::size_t>(i)],
              eps[static_cast<std::size_t>(j)]);
  }
  batch.shuffled = true;
  return batch;
}

// Keeps the b coordinates of largest magnitude (ties broken toward the
// lower index) and replaces the rest by fresh perturbed zeros, so the
// upload still carries d messages into the shuffle. b == d leaves the
// input untouched and consumes no randomness.
inline std::vector<double> sparsify_post(std::vector<double> g, int b,
                                         double eps, double clip, Rng& rng) {
  const int d = static_cast<int>(g.size());
  if (b < 1 || b > d) throw parameter_error("b must lie in [1, d]");
  if (b == d) return g;

  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::nth_element(order.begin(), order.begin() + (b - 1), order.end(),
                   [&g](int a, int c) {
                     const double ma = std::abs(g[static_cast<std::size_t>(a)]);
                     const double mc = std::abs(g[static_cast<std::size_t>(c)]);
                     return ma != mc ? ma > mc : a < c;
                   });
  std::vector<char> keep(static_cast<std::size_t>(d), 0);
  for (int r = 0; r < b; ++r) keep[static_cast<std::size_t>(order[r])] = 1;

  const ClipLaplaceParams pad = ClipLaplaceParams::for_budget(0.0, eps, clip);
  for (int k = 0; k < d; ++k)
    if (!keep[static_cast<std::size_t>(k)])
      g[static_cast<std::size_t>(k)] = clap_quantile(pad, rng.uniform());
  return g;
}

// Per-dimension arithmetic mean. Values are summed in ascending order, so
// the result is bit-identical for any row permutation of the same batch
// and for any thread count.
inline std::vector<double> aggregate(const GradientBatch& batch,
                                     int threads = 1) {
  batch.validate();
  std::vector<double> mean(static_cast<std::size_t>(batch.d), 0.0);
  detail::parallel_for(batch.d, threads, [&](int k) {
    std::vector<double> column(static_cast<std::size_t>(batch.n));
    for (int i = 0; i < batch.n; ++i)
      column[static_cast<std::size_t>(i)] = batch.at(i, k);
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (double v : column) sum += v;
    mean[static_cast<std::size_t>(k)] = sum / batch.n;
  });
  return mean;
}

namespace detail {

// Mean of the budget mixture at a common center:
// F(g) = (1/n) * sum_i E[CLap(g, 2*clip/eps_i, clip)].
inline double mixture_mean(double center,
                           const std::vector<BudgetGroup>& groups, double n,
                           double clip) {
  double sum = 0.0;
  for (const auto& grp : groups) {
    ClipLaplaceParams params =
        ClipLaplaceParams::for_budget(center, grp.eps, clip);
    sum += grp.count * clap_mean(params);
  }
  return sum / n;
}

}  // namespace detail

// Inverts the mixture-mean map for one aggregated value. F is strictly
// increasing (each component mean is), so bisection on [-clip, clip] is
// unconditionally convergent; targets outside F's range clamp to the
// nearest endpoint.
inline double calibrate_scalar(double target,
                               const std::vector<detail::BudgetGroup>& groups,
                               double n, double clip) {
  constexpr double kTol = 1e-10;
  constexpr int kMaxIter = 200;
  if (detail::mixture_mean(clip, groups, n, clip) <= target) return clip;
  if (detail::mixture_mean(-clip, groups, n, clip) >= target) return -clip;
  double lo = -clip;
  double hi = clip;
  for (int iter = 0; iter < kMaxIter && hi - lo > kTol; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (detail::mixture_mean(mid, groups, n, clip) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Analyzer-side bias correction. The analyzer only sees the shuffled
// budget multiset, which is exactly what the mixture mean needs; each
// dimension is solved independently. Inputs may overshoot the support by
// rounding slop from the aggregation sum; anything beyond that is an
// error.
inline std::vector<double> calibrate(std::span<const double> g_mean,
                                     const BudgetVector& budgets, double clip,
                                     int threads = 1) {
  budgets.validate();
  if (!(clip > 0.0)) throw parameter_error("clip bound must be > 0");
  for (double v : g_mean)
    if (std::abs(v) > clip * (1.0 + 1e-12))
      throw parameter_error("aggregated values must lie in [-clip, clip]");
  const auto groups = detail::group_budgets(budgets.epsilons);
  const double n = static_cast<double>(budgets.n());
  std::vector<double> out(g_mean.size());
  detail::parallel_for(static_cast<int>(g_mean.size()), threads, [&](int k) {
    out[static_cast<std::size_t>(k)] = calibrate_scalar(
        std::clamp(g_mean[static_cast<std::size_t>(k)], -clip, clip), groups,
        n, clip);
  });
  return out;
}

}  // namespace apes

#endif  // APES_PIPELINE_HPP_
