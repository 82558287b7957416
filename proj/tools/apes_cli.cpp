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

// Operator surface: privacy-bound sweeps, mechanism diagnostics,
// calibration tests and end-to-end training runs, all emitting
// machine-readable files that embed the resolved configuration.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "apes/accountant.hpp"
#include "apes/budgets.hpp"
#include "apes/clip_laplace.hpp"
#include "apes/config.hpp"
#include "apes/data.hpp"
#include "apes/error.hpp"
#include "apes/fl_sim.hpp"
#include "apes/model.hpp"
#include "apes/pipeline.hpp"
#include "apes/rng.hpp"

namespace {

using apes::BudgetSpec;
using apes::BudgetVector;
using apes::RunConfig;

std::string fmt(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.10g", value);
  return buffer;
}

// All recognized config keys per section; anything else is a typo.
const std::map<std::string, std::vector<std::string>>& allowed_keys() {
  static const std::map<std::string, std::vector<std::string>> allowed = {
      {"run", {"seed", "out"}},
      {"data",
       {"kind", "train_samples", "test_samples", "features", "classes",
        "noise", "images", "labels", "test_images", "test_labels"}},
      {"train",
       {"framework", "epochs", "learning_rate", "prox_mu", "clip",
        "sparsify_b", "n_users", "threads"}},
      {"privacy", {"preset", "delta_shuffle", "delta_user_target"}},
      {"bounds", {"methods", "presets", "n", "delta_shuffle", "budget_seeds"}},
      {"mech", {"clips", "eps", "center_fractions"}},
      {"calibrate",
       {"clip", "preset", "n_users", "center_fractions", "repetitions",
        "mc_center_fraction"}},
  };
  return allowed;
}

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> framework;
  std::optional<std::string> preset;
  std::optional<int> threads;
};

RunConfig resolve_config(const Flags& flags) {
  RunConfig config;
  if (!flags.config_path.empty())
    config = RunConfig::parse_file(flags.config_path);
  if (flags.seed) config.set("run", "seed", std::to_string(*flags.seed));
  if (flags.out) config.set("run", "out", *flags.out);
  if (flags.framework) config.set("train", "framework", *flags.framework);
  if (flags.preset) config.set("privacy", "preset", *flags.preset);
  if (flags.threads)
    config.set("train", "threads", std::to_string(*flags.threads));
  config.require_known(allowed_keys());
  // Make the reproducibility-critical defaults explicit so every output
  // file carries them.
  if (!config.has("run", "seed")) config.set("run", "seed", "1");
  if (!config.has("run", "out")) config.set("run", "out", "out");
  return config;
}

std::ofstream open_output(const RunConfig& config, const std::string& command,
                          const std::string& filename) {
  const std::string dir = config.get_string("run", "out", "out");
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/" + filename;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << "# apes " << command << "\n";
  out << "# resolved configuration:\n";
  for (const std::string& line : config.flatten()) out << "#   " << line << "\n";
  return out;
}

std::vector<double> parse_double_list(const RunConfig& config,
                                      const std::string& section,
                                      const std::string& key,
                                      const std::string& fallback) {
  std::vector<double> values;
  for (const std::string& item : config.get_list(section, key, fallback)) {
    try {
      values.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw apes::config_error("config key [" + section + "] " + key +
                               " has a non-numeric item: " + item);
    }
  }
  return values;
}

std::vector<int> parse_int_list(const RunConfig& config,
                                const std::string& section,
                                const std::string& key,
                                const std::string& fallback) {
  std::vector<int> values;
  for (double v : parse_double_list(config, section, key, fallback))
    values.push_back(static_cast<int>(v));
  return values;
}

// ---------------------------------------------------------------------------
// bounds: eps_c sweeps for the heterogeneous bound and the max-budget
// baseline across budget distributions, user counts and seeds. Cells whose
// applicability precondition fails are marked, never dropped.
int cmd_bounds(const RunConfig& config) {
  const std::uint64_t seed0 = config.get_u64("run", "seed", 1);
  const auto methods = config.get_list("bounds", "methods", "eon,fmt");
  const auto presets = config.get_list("bounds", "presets", "Uniform2");
  const auto sizes = parse_int_list(config, "bounds", "n", "10000");
  const double delta_s = config.get_double("bounds", "delta_shuffle", 1e-8);
  const int seeds = config.get_int("bounds", "budget_seeds", 1);

  auto out = open_output(config, "bounds", "bounds.csv");
  auto records = open_output(config, "bounds", "bounds.txt");
  out << "method,distribution,n,delta_s,seed,echo_mass,threshold,eps_c,"
         "delta_c,status\n";
  for (const std::string& preset : presets) {
    const BudgetSpec spec = BudgetSpec::preset(preset);
    for (int n : sizes) {
      for (int s = 0; s < seeds; ++s) {
        const std::uint64_t seed = seed0 + static_cast<std::uint64_t>(s);
        const BudgetVector budgets = apes::sample_budgets(spec, n, seed);
        for (const std::string& method : methods) {
          out << method << ',' << preset << ',' << n << ',' << fmt(delta_s)
              << ',' << seed << ',';
          records << "method=" << method << " distribution=" << preset
                  << " n=" << n << " delta_s=" << fmt(delta_s)
                  << " seed=" << seed;
          try {
            const apes::CentralBound bound =
                method == "eon"
                    ? apes::eon_central_bound(budgets, delta_s)
                    : method == "fmt"
                          ? apes::fmt_max_baseline(budgets, delta_s)
                          : throw apes::config_error("unknown bounds method: " +
                                                     method);
            out << fmt(bound.echo_mass) << ','
                << fmt(apes::echo_mass_threshold(delta_s)) << ','
                << fmt(bound.eps_central) << ',' << fmt(bound.delta_central)
                << ",ok\n";
            records << " echo_mass=" << fmt(bound.echo_mass)
                    << " threshold=" << fmt(apes::echo_mass_threshold(delta_s))
                    << " eps_c=" << fmt(bound.eps_central)
                    << " delta_c=" << fmt(bound.delta_central)
                    << " status=ok\n";
          } catch (const apes::insufficient_echo_mass_error& e) {
            out << fmt(e.echo_mass()) << ',' << fmt(e.threshold())
                << ",,,insufficient_echo_mass\n";
            records << " echo_mass=" << fmt(e.echo_mass())
                    << " threshold=" << fmt(e.threshold())
                    << " status=insufficient_echo_mass\n";
          }
        }
      }
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// mech: analytic mean / bias / variance of the truncated mechanism against
// the classic Laplace mechanism over a (clip, eps, center) grid.
int cmd_mech(const RunConfig& config) {
  const auto clips = parse_double_list(config, "mech", "clips", "0.1,1");
  const auto eps_grid =
      parse_double_list(config, "mech", "eps", "0.05,0.1,0.5,1,3");
  const auto fractions =
      parse_double_list(config, "mech", "center_fractions", "0,0.25,0.5,0.9");

  auto out = open_output(config, "mech", "mech.csv");
  out << "clip,eps,center,clap_mean,clap_bias,clap_variance,lap_bias,"
         "lap_variance\n";
  for (double clip : clips) {
    for (double eps : eps_grid) {
      for (double frac : fractions) {
        const double center = frac * clip;
        const auto params =
            apes::ClipLaplaceParams::for_budget(center, eps, clip);
        const double mean = apes::clap_mean(params);
        const double scale = 2.0 * clip / eps;
        out << fmt(clip) << ',' << fmt(eps) << ',' << fmt(center) << ','
            << fmt(mean) << ',' << fmt(mean - center) << ','
            << fmt(apes::clap_variance(params)) << ',' << fmt(0.0) << ','
            << fmt(2.0 * scale * scale) << '\n';
      }
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// calibrate-test: forward-then-invert round trips of the mixture-mean map,
// plus a Monte-Carlo comparison of calibrated vs uncalibrated aggregation.
int cmd_calibrate_test(const RunConfig& config) {
  const std::uint64_t seed = config.get_u64("run", "seed", 1);
  const double clip = config.get_double("calibrate", "clip", 1.0);
  const std::string preset =
      config.get_string("calibrate", "preset", "Uniform2");
  const int n_users = config.get_int("calibrate", "n_users", 50);
  const auto fractions = parse_double_list(config, "calibrate",
                                           "center_fractions",
                                           "-0.9,-0.3,0,0.3,0.9");
  const int reps = config.get_int("calibrate", "repetitions", 10000);
  const double mc_fraction =
      config.get_double("calibrate", "mc_center_fraction", 0.5);

  const BudgetVector budgets =
      apes::sample_budgets(BudgetSpec::preset(preset), n_users, seed);
  const auto groups = apes::detail::group_budgets(budgets.epsilons);
  const double n = static_cast<double>(budgets.n());

  auto out = open_output(config, "calibrate-test", "calibration.csv");
  out << "kind,center,forward_mean,calibrated,abs_error,uncalibrated_bias,"
         "calibrated_bias,repetitions\n";

  for (double frac : fractions) {
    const double center = frac * clip;
    const double forward = apes::detail::mixture_mean(center, groups, n, clip);
    const double inverted = apes::calibrate_scalar(forward, groups, n, clip);
    out << "roundtrip," << fmt(center) << ',' << fmt(forward) << ','
        << fmt(inverted) << ',' << fmt(std::abs(inverted - center))
        << ",,,\n";
  }

  const double center = mc_fraction * clip;
  double sum_raw = 0.0;
  double sum_cal = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    apes::Rng rng = apes::make_stream(seed, apes::StreamTag::kPerturb,
                                      static_cast<std::uint64_t>(rep));
    double total = 0.0;
    for (double eps : budgets.epsilons) {
      const auto params = apes::ClipLaplaceParams::for_budget(center, eps, clip);
      total += apes::clap_sample(params, rng);
    }
    const double aggregated = total / n;
    sum_raw += aggregated;
    sum_cal += apes::calibrate_scalar(aggregated, groups, n, clip);
  }
  out << "mc," << fmt(center) << ",,,," << fmt(std::abs(sum_raw / reps - center))
      << ',' << fmt(std::abs(sum_cal / reps - center)) << ',' << reps << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// simulate: end-to-end training of one framework (or all six) with
// per-epoch metric records and a summary table.

struct DatasetPair {
  apes::Dataset train;
  apes::Dataset test;
};

apes::Dataset slice_rows(const apes::Dataset& ds, int begin, int end) {
  apes::Dataset out;
  out.m = end - begin;
  out.p = ds.p;
  out.classes = ds.classes;
  out.features.assign(
      ds.features.begin() + static_cast<std::ptrdiff_t>(begin) * ds.p,
      ds.features.begin() + static_cast<std::ptrdiff_t>(end) * ds.p);
  out.labels.assign(ds.labels.begin() + begin, ds.labels.begin() + end);
  return out;
}

DatasetPair make_datasets(const RunConfig& config, std::uint64_t seed) {
  const std::string kind = config.get_string("data", "kind", "synth");
  if (kind == "synth") {
    const int m_train = config.get_int("data", "train_samples", 4000);
    const int m_test = config.get_int("data", "test_samples", 2000);
    const int features = config.get_int("data", "features", 78);
    const int classes = config.get_int("data", "classes", 10);
    const double noise = config.get_double("data", "noise", 1.5);
    const apes::Dataset full = apes::synth_classification(
        m_train + m_test, features, classes, seed, noise);
    return {slice_rows(full, 0, m_train),
            slice_rows(full, m_train, m_train + m_test)};
  }
  if (kind == "idx") {
    return {apes::load_idx(config.require_string("data", "images"),
                           config.require_string("data", "labels")),
            apes::load_idx(config.require_string("data", "test_images"),
                           config.require_string("data", "test_labels"))};
  }
  throw apes::config_error("unknown data.kind: " + kind);
}

apes::TrainConfig make_train_config(const RunConfig& config,
                                    apes::Framework fw, std::uint64_t seed,
                                    int model_dim) {
  apes::TrainConfig tc;
  tc.framework = fw;
  tc.epochs = config.get_int("train", "epochs", 20);
  tc.learning_rate = config.get_double("train", "learning_rate", 2.0);
  tc.prox_mu = config.get_double("train", "prox_mu", 0.0);
  tc.clip = config.get_double("train", "clip", 0.1);
  tc.sparsify_b = config.get_int("train", "sparsify_b",
                                 fw == apes::Framework::kSApes ? model_dim : 0);
  tc.n_users = config.get_int("train", "n_users", 200);
  tc.threads = config.get_int("train", "threads", 1);
  tc.master_seed = seed;
  tc.budget_spec =
      BudgetSpec::preset(config.get_string("privacy", "preset", "Uniform2"));
  tc.delta_shuffle = config.get_double("privacy", "delta_shuffle", 1e-8);
  tc.delta_user_target =
      config.get_double("privacy", "delta_user_target", 3.6e-5);
  return tc;
}

void write_privacy_fields(std::ostream& out, const apes::PrivacyReport& p) {
  if (!p.is_private) return;
  out << " eps_ul_min=" << fmt(p.eps_ul_min)
      << " eps_ul_max=" << fmt(p.eps_ul_max);
  if (p.central_ok) {
    out << " eps_c=" << fmt(p.central.eps_central)
        << " delta_c=" << fmt(p.central.delta_central);
  } else {
    out << " central=insufficient_echo_mass echo_mass=" << fmt(p.echo_mass)
        << " threshold=" << fmt(p.echo_threshold);
  }
  if (p.user_ok) {
    out << " eps_uc=" << fmt(p.user.eps_user)
        << " delta_uc=" << fmt(p.user.delta_user);
  } else {
    out << " user=unavailable";
  }
}

int cmd_simulate(const RunConfig& config) {
  const std::uint64_t seed = config.get_u64("run", "seed", 1);
  const std::string fw_name =
      config.get_string("train", "framework", "non-private");

  std::vector<apes::Framework> frameworks;
  if (fw_name == "all")
    frameworks = apes::all_frameworks();
  else
    frameworks.push_back(apes::framework_from_name(fw_name));

  const DatasetPair data = make_datasets(config, seed);
  const int model_dim = data.train.classes * (data.train.p + 1);

  auto summary = open_output(config, "simulate", "summary.csv");
  summary << "framework,seed,eps_ul_min,eps_ul_max,eps_c,delta_c,eps_uc,"
             "delta_uc,central_status,user_status,accuracy,final_loss\n";

  for (apes::Framework fw : frameworks) {
    const apes::TrainConfig tc = make_train_config(config, fw, seed, model_dim);
    const apes::TrainResult result = apes::train(tc, data.train, data.test);

    auto metrics = open_output(config, "simulate",
                               "metrics_" + apes::framework_name(fw) + ".txt");
    for (const apes::EpochMetrics& em : result.epochs) {
      metrics << "epoch=" << em.epoch << " train_loss=" << fmt(em.train_loss)
              << " test_accuracy=" << fmt(em.test_accuracy);
      write_privacy_fields(metrics, em.privacy);
      metrics << "\n";
    }

    const apes::PrivacyReport& p = result.privacy;
    const apes::EpochMetrics& last = result.epochs.back();
    summary << apes::framework_name(fw) << ',' << seed << ',';
    if (p.is_private) summary << fmt(p.eps_ul_min) << ',' << fmt(p.eps_ul_max);
    else summary << ',';
    summary << ',';
    if (p.is_private && p.central_ok)
      summary << fmt(p.central.eps_central) << ',' << fmt(p.central.delta_central);
    else
      summary << ',';
    summary << ',';
    if (p.is_private && p.user_ok)
      summary << fmt(p.user.eps_user) << ',' << fmt(p.user.delta_user);
    else
      summary << ',';
    summary << ',';
    summary << (!p.is_private ? "non-private"
                              : p.central_ok ? "ok" : "insufficient_echo_mass")
            << ','
            << (!p.is_private ? "non-private" : p.user_ok ? "ok" : "unavailable")
            << ',' << fmt(last.test_accuracy) << ',' << fmt(last.train_loss)
            << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"personalized-LDP federated learning with shuffle-model "
               "privacy amplification"};
  app.require_subcommand(1);

  Flags flags;
  auto add_common = [&flags](CLI::App* cmd) {
    cmd->add_option("--config", flags.config_path, "configuration file");
    cmd->add_option("--seed", flags.seed, "master seed override");
    cmd->add_option("--out", flags.out, "output directory override");
    cmd->add_option("--threads", flags.threads, "worker thread override");
  };

  CLI::App* bounds = app.add_subcommand("bounds", "central privacy sweeps");
  add_common(bounds);
  bounds->add_option("--preset", flags.preset, "budget preset override");

  CLI::App* simulate = app.add_subcommand("simulate", "training experiments");
  add_common(simulate);
  simulate->add_option("--framework", flags.framework,
                       "framework (or `all`) override");
  simulate->add_option("--preset", flags.preset, "budget preset override");

  CLI::App* mech = app.add_subcommand("mech", "mechanism diagnostics");
  add_common(mech);

  CLI::App* calibrate =
      app.add_subcommand("calibrate-test", "calibration diagnostics");
  add_common(calibrate);
  calibrate->add_option("--preset", flags.preset, "budget preset override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    RunConfig config = resolve_config(flags);
    if (bounds->parsed()) {
      if (flags.preset) config.set("bounds", "presets", *flags.preset);
      return cmd_bounds(config);
    }
    if (simulate->parsed()) return cmd_simulate(config);
    if (mech->parsed()) return cmd_mech(config);
    if (calibrate->parsed()) return cmd_calibrate_test(config);
    return 2;
  } catch (const apes::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const apes::insufficient_echo_mass_error& e) {
    std::cerr << "precondition error: " << e.what() << "\n";
    return 3;
  } catch (const apes::parameter_error& e) {
    std::cerr << "precondition error: " << e.what() << "\n";
    return 3;
  } catch (const apes::unsupported_config_error& e) {
    std::cerr << "precondition error: " << e.what() << "\n";
    return 3;
  } catch (const apes::state_error& e) {
    std::cerr << "precondition error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
