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
#ifndef APES_BUDGETS_HPP_
#define APES_BUDGETS_HPP_

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "apes/accountant.hpp"
#include "apes/error.hpp"
#include "apes/rng.hpp"

namespace apes {

struct GaussianComponent {
  double mean = 0.0;
  double stddev = 1.0;
  double weight = 1.0;
};

// Generator spec for personalized budget vectors: a base distribution plus
// a clip range; draws outside [clip_low, clip_high] are clamped to the
// nearest end.
struct BudgetSpec {
  enum class Kind { kUniform, kGaussian, kGaussianMixture };

  Kind kind = Kind::kUniform;
  double low = 0.0;   // uniform support (low == high is a point mass)
  double high = 0.0;
  std::vector<GaussianComponent> components;
  double clip_low = 0.0;
  double clip_high = 0.0;

  void validate() const {
    if (!(clip_low > 0.0)) throw parameter_error("clip_low must be > 0");
    if (!(clip_low < clip_high))
      throw parameter_error("clip_low must be < clip_high");
    switch (kind) {
      case Kind::kUniform:
        if (!(low <= high)) throw parameter_error("uniform needs low <= high");
        break;
      case Kind::kGaussian:
      case Kind::kGaussianMixture: {
        if (components.empty())
          throw parameter_error("gaussian spec needs components");
        double total = 0.0;
        for (const auto& c : components) {
          if (!(c.stddev > 0.0)) throw parameter_error("stddev must be > 0");
          if (!(c.weight > 0.0)) throw parameter_error("weight must be > 0");
          total += c.weight;
        }
        if (std::abs(total - 1.0) > 1e-12)
          throw parameter_error("mixture weights must sum to 1");
        break;
      }
    }
  }

  static BudgetSpec uniform(double low, double high, double clip_low,
                            double clip_high) {
    BudgetSpec spec;
    spec.kind = Kind::kUniform;
    spec.low = low;
    spec.high = high;
    spec.clip_low = clip_low;
    spec.clip_high = clip_high;
    return spec;
  }

  static BudgetSpec gaussian(double mean, double stddev, double clip_low,
                             double clip_high) {
    BudgetSpec spec;
    spec.kind = Kind::kGaussian;
    spec.components = {{mean, stddev, 1.0}};
    spec.clip_low = clip_low;
    spec.clip_high = clip_high;
    return spec;
  }

  static BudgetSpec mixture(std::vector<GaussianComponent> components,
                            double clip_low, double clip_high) {
    BudgetSpec spec;
    spec.kind = Kind::kGaussianMixture;
    spec.components = std::move(components);
    spec.clip_low = clip_low;
    spec.clip_high = clip_high;
    return spec;
  }

  // Named presets. The 1/2 families clip to [0.05, 0.5] and [0.05, 1];
  // the 3 family clips to [0.05, 3].
  static BudgetSpec preset(std::string_view name);

  static const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {
        "Uniform1", "Uniform2", "Uniform3", "Gauss1",    "Gauss2",
        "Gauss3",   "MixGauss1", "MixGauss2", "MixGauss3"};
    return names;
  }
};

inline BudgetSpec BudgetSpec::preset(std::string_view name) {
  std::string key(name);
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  // constant(x): point mass at x, for consistency checks against the
  // uniform-budget baselines.
  if (key.rfind("constant(", 0) == 0 && key.back() == ')') {
    double value = 0.0;
    try {
      value = std::stod(key.substr(9, key.size() - 10));
    } catch (const std::exception&) {
      throw parameter_error("bad constant budget: " + std::string(name));
    }
    if (!(value > 0.0)) throw parameter_error("constant budget must be > 0");
    return uniform(value, value, value / 2.0, value * 2.0);
  }
  if (key == "uniform1") return uniform(0.05, 0.5, 0.05, 0.5);
  if (key == "uniform2") return uniform(0.05, 1.0, 0.05, 1.0);
  if (key == "uniform3") return uniform(0.05, 3.0, 0.05, 3.0);
  if (key == "gauss1") return gaussian(0.1, 1.0, 0.05, 0.5);
  if (key == "gauss2") return gaussian(0.2, 1.0, 0.05, 1.0);
  if (key == "gauss3") return gaussian(0.5, 1.0, 0.05, 3.0);
  if (key == "mixgauss1")
    return mixture({{0.1, 1.0, 0.9}, {0.5, 1.0, 0.1}}, 0.05, 0.5);
  if (key == "mixgauss2")
    return mixture({{0.2, 1.0, 0.9}, {1.0, 1.0, 0.1}}, 0.05, 1.0);
  if (key == "mixgauss3")
    return mixture({{0.5, 1.0, 0.9}, {3.0, 1.0, 0.1}}, 0.05, 3.0);
  throw parameter_error("unknown budget preset: " + std::string(name));
}

// n clipped draws, deterministic in the seed.
inline BudgetVector sample_budgets(const BudgetSpec& spec, int n,
                                   std::uint64_t seed) {
  spec.validate();
  if (n < 2) throw parameter_error("need at least 2 users");
  Rng rng = make_stream(seed, StreamTag::kBudgets);
  BudgetVector budgets;
  budgets.epsilons.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = 0.0;
    switch (spec.kind) {
      case BudgetSpec::Kind::kUniform:
        x = spec.low == spec.high ? spec.low : rng.uniform(spec.low, spec.high);
        break;
      case BudgetSpec::Kind::kGaussian:
        x = spec.components[0].mean + spec.components[0].stddev * rng.normal();
        break;
      case BudgetSpec::Kind::kGaussianMixture: {
        const double pick = rng.uniform();
        double cumulative = 0.0;
        const GaussianComponent* chosen = &spec.components.back();
        for (const auto& c : spec.components) {
          cumulative += c.weight;
          if (pick < cumulative) {
            chosen = &c;
            break;
          }
        }
        x = chosen->mean + chosen->stddev * rng.normal();
        break;
      }
    }
    budgets.epsilons.push_back(std::clamp(x, spec.clip_low, spec.clip_high));
  }
  return budgets;
}

}  // namespace apes

#endif  // APES_BUDGETS_HPP_
