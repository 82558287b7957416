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
#ifndef APES_FL_SIM_HPP_
#define APES_FL_SIM_HPP_

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "apes/accountant.hpp"
#include "apes/budgets.hpp"
#include "apes/clip_laplace.hpp"
#include "apes/data.hpp"
#include "apes/error.hpp"
#include "apes/model.hpp"
#include "apes/parallel.hpp"
#include "apes/pipeline.hpp"
#include "apes/rng.hpp"

namespace apes {

enum class Framework {
  kNonPrivate,
  kLdpMin,
  kPldp,
  kUniShuffle,
  kApes,
  kSApes,
};

inline const std::vector<Framework>& all_frameworks() {
  static const std::vector<Framework> all = {
      Framework::kNonPrivate, Framework::kLdpMin, Framework::kPldp,
      Framework::kUniShuffle, Framework::kApes,   Framework::kSApes};
  return all;
}

inline std::string framework_name(Framework fw) {
  switch (fw) {
    case Framework::kNonPrivate: return "non-private";
    case Framework::kLdpMin: return "ldp-min";
    case Framework::kPldp: return "pldp";
    case Framework::kUniShuffle: return "unis";
    case Framework::kApes: return "apes";
    case Framework::kSApes: return "s-apes";
  }
  throw parameter_error("unknown framework");
}

inline Framework framework_from_name(std::string_view name) {
  std::string key(name);
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  for (Framework fw : all_frameworks())
    if (framework_name(fw) == key) return fw;
  throw parameter_error("unknown framework: " + std::string(name));
}

inline bool is_private(Framework fw) { return fw != Framework::kNonPrivate; }

inline bool uses_shuffle(Framework fw) {
  return fw == Framework::kUniShuffle || fw == Framework::kApes ||
         fw == Framework::kSApes;
}

// The Clip-Laplace frameworks calibrate; the classic-Laplace baselines are
// unbiased and skip it.
inline bool uses_clip_laplace(Framework fw) {
  return fw == Framework::kApes || fw == Framework::kSApes;
}

struct TrainConfig {
  Framework framework = Framework::kNonPrivate;
  int epochs = 20;
  double learning_rate = 2.0;
  double prox_mu = 0.0;
  double clip = 0.1;
  int sparsify_b = 0;  // required for s-apes; ignored otherwise
  BudgetSpec budget_spec = BudgetSpec::preset("Uniform2");
  int n_users = 200;
  std::uint64_t master_seed = 1;
  int threads = 1;
  double delta_shuffle = 1e-8;
  double delta_user_target = 3.6e-5;

  void validate(int model_dim) const {
    if (epochs < 1) throw parameter_error("epochs must be >= 1");
    if (!(learning_rate > 0.0))
      throw parameter_error("learning_rate must be > 0");
    if (!(prox_mu >= 0.0)) throw parameter_error("prox_mu must be >= 0");
    if (!(clip > 0.0)) throw parameter_error("clip must be > 0");
    if (n_users < 2) throw parameter_error("n_users must be >= 2");
    if (threads < 1) throw parameter_error("threads must be >= 1");
    if (framework == Framework::kSApes &&
        (sparsify_b < 1 || sparsify_b > model_dim))
      throw parameter_error("sparsify_b must lie in [1, d] for s-apes");
    if (is_private(framework)) budget_spec.validate();
  }
};

// Per-epoch privacy record. Central and user-level bounds may be
// individually unavailable: the central bound when the echo mass is below
// the applicability threshold (small n / large budgets), the user-level
// bound when no positive composition slack remains. An unavailable bound
// is marked, never replaced by a number.
struct PrivacyReport {
  bool is_private = false;
  double eps_ul_min = 0.0;  // user-level local budget range
  double eps_ul_max = 0.0;
  bool central_ok = false;
  CentralBound central;
  double echo_mass = 0.0;       // observed mass (shuffle frameworks)
  double echo_threshold = 0.0;  // applicability threshold
  bool user_ok = false;
  UserLevelBound user;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double test_accuracy = 0.0;
  PrivacyReport privacy;
};

// Accounting for one epoch of a framework on the effective budget vector.
// `dims` is the model dimension d; `b` the retained dimensions (s-apes).
inline PrivacyReport privacy_report(Framework fw, const BudgetVector& budgets,
                                    int dims, int b, double delta_shuffle,
                                    double delta_user_target) {
  PrivacyReport report;
  if (!is_private(fw)) return report;
  budgets.validate();
  if (dims < 1) throw parameter_error("dims must be >= 1");
  report.is_private = true;

  const int upload_dims = fw == Framework::kSApes ? b : dims;
  report.eps_ul_min = local_user_bound(budgets.min(), upload_dims);
  report.eps_ul_max = local_user_bound(budgets.max(), upload_dims);

  if (uses_shuffle(fw)) {
    report.echo_threshold = echo_mass_threshold(delta_shuffle);
    try {
      report.central = fw == Framework::kUniShuffle
                           ? fmt_max_baseline(budgets, delta_shuffle)
                           : eon_central_bound(budgets, delta_shuffle);
      report.central_ok = true;
      report.echo_mass = report.central.echo_mass;
    } catch (const insufficient_echo_mass_error& e) {
      report.central_ok = false;
      report.echo_mass = e.echo_mass();
    }
    if (report.central_ok) {
      const double delta_prime =
          delta_user_target -
          2.0 * upload_dims * report.central.delta_central;
      if (delta_prime > 0.0) {
        report.user = user_level_composition(report.central.eps_central,
                                             report.central.delta_central,
                                             upload_dims, delta_prime);
        report.user_ok = true;
      }
    }
    return report;
  }

  // Pure-LDP baselines: the analyzer-visible guarantee per dimension is the
  // worst per-user budget (parallel composition over disjoint users), with
  // no shuffle amplification. For ldp-min all budgets already equal the
  // minimum, so max() is that minimum.
  const double eps_dim = budgets.max();
  report.central.eps_central = eps_dim;
  report.central.delta_central = 0.0;
  report.central.delta_shuffle = 0.0;
  report.central_ok = true;

  // User level: basic composition d*eps, improved by advanced composition
  // when the budget is small enough for the sqrt term to win.
  const double basic = local_user_bound(eps_dim, dims);
  const double advanced =
      advanced_composition(eps_dim, dims, delta_user_target);
  report.user.dims = dims;
  if (advanced < basic) {
    report.user.eps_user = advanced;
    report.user.delta_user = delta_user_target;
  } else {
    report.user.eps_user = basic;
    report.user.delta_user = 0.0;
  }
  report.user_ok = true;
  return report;
}

// Gradient of the proximal local objective F_shard(w) + (mu/2)||w - w0||^2
// evaluated at the model's current weights, with w0 = `anchor`. At the
// broadcast point anchor == w and the proximal term vanishes.
inline std::vector<double> local_gradient(const LogisticModel& model,
                                          const Dataset& data,
                                          std::span<const int> rows, double mu,
                                          std::span<const double> anchor) {
  if (anchor.size() != model.w.size())
    throw parameter_error("anchor shape mismatch");
  std::vector<double> grad = model_gradient(model, data, rows);
  if (mu != 0.0)
    for (std::size_t k = 0; k < grad.size(); ++k)
      grad[k] += mu * (model.w[k] - anchor[k]);
  return grad;
}

// Matching objective value, for finite-difference checks.
inline double local_objective(const LogisticModel& model, const Dataset& data,
                              std::span<const int> rows, double mu,
                              std::span<const double> anchor) {
  if (anchor.size() != model.w.size())
    throw parameter_error("anchor shape mismatch");
  double value = model_loss(model, data, rows);
  if (mu != 0.0) {
    double sq = 0.0;
    for (std::size_t k = 0; k < model.w.size(); ++k) {
      const double diff = model.w[k] - anchor[k];
      sq += diff * diff;
    }
    value += 0.5 * mu * sq;
  }
  return value;
}

namespace detail {

inline std::vector<double> column_means_sorted(const std::vector<double>& values,
                                               int n, int d, int threads) {
  std::vector<double> mean(static_cast<std::size_t>(d), 0.0);
  parallel_for(d, threads, [&](int k) {
    std::vector<double> column(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      column[static_cast<std::size_t>(i)] =
          values[static_cast<std::size_t>(i) * d + k];
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (double v : column) sum += v;
    mean[static_cast<std::size_t>(k)] = sum / n;
  });
  return mean;
}

}  // namespace detail

// Mutable state threaded through run_epoch calls.
struct TrainState {
  LogisticModel model;
  std::vector<std::vector<int>> shards;
  BudgetVector budgets;   // effective budgets (ldp-min already minimized)
  PrivacyReport privacy;  // constant across epochs (per-epoch accounting)
  int epoch = 0;          // epochs completed so far
};

// One round: local update -> (sparsify) -> shuffle -> aggregate ->
// (calibrate) -> gradient step, then metrics at the new iterate.
inline EpochMetrics run_epoch(const TrainConfig& config,
                              const Dataset& train_set,
                              const Dataset& test_set, TrainState& state) {
  const int n = static_cast<int>(state.shards.size());
  const int d = state.model.dim();
  const int t = state.epoch + 1;
  const Framework fw = config.framework;

  std::vector<double> matrix(static_cast<std::size_t>(n) * d);
  const std::vector<double>& anchor = state.model.w;
  detail::parallel_for(n, config.threads, [&](int i) {
    std::vector<double> g =
        local_gradient(state.model, train_set, state.shards[i],
                       config.prox_mu, anchor);
    if (is_private(fw)) {
      clip_inplace(g, config.clip);
      const double eps = state.budgets.epsilons[static_cast<std::size_t>(i)];
      Rng perturb_rng = make_stream(config.master_seed, StreamTag::kPerturb,
                                    static_cast<std::uint64_t>(t),
                                    static_cast<std::uint64_t>(i));
      if (uses_clip_laplace(fw)) {
        perturb_inplace(g, eps, config.clip, perturb_rng);
        if (fw == Framework::kSApes && config.sparsify_b != d) {
          Rng pad_rng = make_stream(config.master_seed, StreamTag::kPadding,
                                    static_cast<std::uint64_t>(t),
                                    static_cast<std::uint64_t>(i));
          g = sparsify_post(std::move(g), config.sparsify_b, eps, config.clip,
                            pad_rng);
        }
      } else {
        const double scale = 2.0 * config.clip / eps;
        for (double& x : g) x = laplace_sample(x, scale, perturb_rng);
      }
    }
    std::copy(g.begin(), g.end(),
              matrix.begin() + static_cast<std::size_t>(i) * d);
  });

  std::vector<double> aggregated;
  if (is_private(fw)) {
    GradientBatch batch;
    batch.n = n;
    batch.d = d;
    batch.values = std::move(matrix);
    batch.budgets = state.budgets;
    batch.clip_bound = config.clip;
    if (uses_shuffle(fw)) {
      Rng shuffle_rng = make_stream(config.master_seed, StreamTag::kShuffle,
                                    static_cast<std::uint64_t>(t));
      batch = shuffle_batch(std::move(batch), shuffle_rng);
    }
    aggregated = aggregate(batch, config.threads);
    if (uses_clip_laplace(fw))
      aggregated =
          calibrate(aggregated, batch.budgets, config.clip, config.threads);
  } else {
    aggregated = detail::column_means_sorted(matrix, n, d, config.threads);
  }

  for (int k = 0; k < d; ++k)
    state.model.w[static_cast<std::size_t>(k)] -=
        config.learning_rate * aggregated[static_cast<std::size_t>(k)];
  state.epoch = t;

  std::vector<int> all_rows(static_cast<std::size_t>(train_set.m));
  std::iota(all_rows.begin(), all_rows.end(), 0);
  EpochMetrics metrics;
  metrics.epoch = t;
  metrics.train_loss = model_loss(state.model, train_set, all_rows);
  metrics.test_accuracy = evaluate(state.model, test_set);
  metrics.privacy = state.privacy;
  return metrics;
}

struct TrainResult {
  std::vector<EpochMetrics> epochs;
  LogisticModel model;
  BudgetVector budgets;
  PrivacyReport privacy;
};

// Full run: sample budgets, partition the training set evenly, iterate
// run_epoch T times. Deterministic in config.master_seed for any thread
// count.
inline TrainResult train(const TrainConfig& config, const Dataset& train_set,
                         const Dataset& test_set) {
  LogisticModel model(train_set.classes, train_set.p);
  config.validate(model.dim());

  TrainState state;
  state.model = std::move(model);
  state.shards = partition_even(train_set, config.n_users, config.master_seed);
  if (is_private(config.framework)) {
    state.budgets =
        sample_budgets(config.budget_spec, config.n_users, config.master_seed);
    if (config.framework == Framework::kLdpMin) {
      const double floor = state.budgets.min();
      std::fill(state.budgets.epsilons.begin(), state.budgets.epsilons.end(),
                floor);
    }
    state.privacy = privacy_report(
        config.framework, state.budgets, state.model.dim(),
        config.framework == Framework::kSApes ? config.sparsify_b
                                              : state.model.dim(),
        config.delta_shuffle, config.delta_user_target);
  }

  TrainResult result;
  result.epochs.reserve(static_cast<std::size_t>(config.epochs));
  for (int t = 0; t < config.epochs; ++t)
    result.epochs.push_back(run_epoch(config, train_set, test_set, state));
  result.model = std::move(state.model);
  result.budgets = std::move(state.budgets);
  result.privacy = state.privacy;
  return result;
}

}  // namespace apes

#endif  // APES_FL_SIM_HPP_
