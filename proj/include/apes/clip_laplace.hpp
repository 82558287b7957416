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
#ifndef APES_CLIP_LAPLACE_HPP_
#define APES_CLIP_LAPLACE_HPP_

#include <algorithm>
#include <cmath>

#include "apes/error.hpp"
#include "apes/rng.hpp"

namespace apes {

// Truncated-and-renormalized Laplace distribution on [-bound, bound]:
//
//   p(z) = exp(-|z - center| / scale) / (2 * scale * S)   for |z| <= bound
//
// with S = 1 - exp(-(bound + center)/scale)/2
//          - exp(-(bound - center)/scale)/2.
//
// Privatizing a value f with sensitivity df at privacy level eps uses
// scale = df / eps and bound >= df / 2; the federated frameworks fix
// bound = clip = df / 2, which is the configuration the closed-form mean
// and second moment are provided for.
struct ClipLaplaceParams {
  double center;       // the value being privatized, in [-sensitivity/2, +]
  double scale;        // Laplace scale (lambda), > 0
  double bound;        // truncation half-width (A), >= sensitivity/2
  double sensitivity;  // L1 sensitivity of the query (df), > 0

  // Framework configuration: bound = clip, sensitivity = 2*clip,
  // scale = 2*clip/eps. This is the eps-LDP randomizer for one gradient
  // coordinate clipped into [-clip, clip].
  static ClipLaplaceParams for_budget(double center, double eps, double clip) {
    if (!(eps > 0.0)) throw parameter_error("budget eps must be > 0");
    if (!(clip > 0.0)) throw parameter_error("clip bound must be > 0");
    return ClipLaplaceParams{center, 2.0 * clip / eps, clip, 2.0 * clip};
  }

  void validate() const {
    if (!(scale > 0.0)) throw parameter_error("scale must be > 0");
    if (!(sensitivity > 0.0)) throw parameter_error("sensitivity must be > 0");
    if (!(bound >= sensitivity / 2.0))
      throw parameter_error("bound must be >= sensitivity/2");
    if (!(std::abs(center) <= sensitivity / 2.0))
      throw parameter_error("center must lie in [-sensitivity/2, +sensitivity/2]");
  }

  // Tail deficits and normalizer. Both exponent arguments are nonpositive
  // for a valid center, so these never overflow even at tiny eps.
  double tail_low() const { return std::exp(-(bound + center) / scale); }
  double tail_high() const { return std::exp(-(bound - center) / scale); }
  double normalizer() const { return 1.0 - 0.5 * (tail_low() + tail_high()); }
};

// Density of the distribution; zero outside [-bound, bound].
inline double clap_density(const ClipLaplaceParams& params, double z) {
  params.validate();
  if (z < -params.bound || z > params.bound) return 0.0;
  const double s = params.normalizer();
  return std::exp(-std::abs(z - params.center) / params.scale) /
         (2.0 * params.scale * s);
}

// Piecewise-analytic CDF; 0 at -bound, 1 at +bound, monotone between.
inline double clap_cdf(const ClipLaplaceParams& params, double z) {
  params.validate();
  if (z <= -params.bound) return 0.0;
  if (z >= params.bound) return 1.0;
  const double s2 = 2.0 * params.normalizer();
  if (z <= params.center) {
    return (std::exp((z - params.center) / params.scale) - params.tail_low()) /
           s2;
  }
  return 1.0 -
         (std::exp(-(z - params.center) / params.scale) - params.tail_high()) /
             s2;
}

// Quantile transform for u in [0, 1]; inverse of clap_cdf.
inline double clap_quantile(const ClipLaplaceParams& params, double u) {
  const double s2 = 2.0 * params.normalizer();
  const double mass_below_center = (1.0 - params.tail_low()) / s2;
  double z;
  if (u <= mass_below_center) {
    z = params.center + params.scale * std::log(s2 * u + params.tail_low());
  } else {
    z = params.center -
        params.scale * std::log(s2 * (1.0 - u) + params.tail_high());
  }
  return std::clamp(z, -params.bound, params.bound);
}

// Exact inverse-CDF sampling: deterministic given the rng state and
// testable against clap_cdf with a Kolmogorov-Smirnov statistic.
inline double clap_sample(const ClipLaplaceParams& params, Rng& rng) {
  params.validate();
  return clap_quantile(params, rng.uniform());
}

namespace detail {

inline void require_framework_bound(const ClipLaplaceParams& params) {
  params.validate();
  if (params.bound != params.sensitivity / 2.0)
    throw unsupported_config_error(
        "closed form is stated for bound == sensitivity/2 only");
}

}  // namespace detail

// Closed-form expectation for the bound == sensitivity/2 configuration:
//
//   E[Z] = ((clip + scale) * (e1 - e2) + 2 * center) / (2 - e1 - e2)
//
// with e1 = exp(-(clip + center)/scale), e2 = exp(-(clip - center)/scale).
// Strictly increasing in the center; this is the map the analyzer inverts
// during calibration.
inline double clap_mean(const ClipLaplaceParams& params) {
  detail::require_framework_bound(params);
  const double clip = params.bound;
  const double e1 = params.tail_low();
  const double e2 = params.tail_high();
  return ((clip + params.scale) * (e1 - e2) + 2.0 * params.center) /
         (2.0 - e1 - e2);
}

// E[(Z - center)^2] for the bound == sensitivity/2 configuration. With
// a = clip + center and b = clip - center:
//
//   E = (4*scale^2 - e1*((a+scale)^2 + scale^2)
//                  - e2*((b+scale)^2 + scale^2)) / (2 - e1 - e2)
//
// which tends to the classic Laplace second moment 2*scale^2 as the
// truncation recedes.
inline double clap_second_moment(const ClipLaplaceParams& params) {
  detail::require_framework_bound(params);
  const double clip = params.bound;
  const double lam = params.scale;
  const double a = clip + params.center;
  const double b = clip - params.center;
  const double e1 = params.tail_low();
  const double e2 = params.tail_high();
  const double num = 4.0 * lam * lam -
                     e1 * ((a + lam) * (a + lam) + lam * lam) -
                     e2 * ((b + lam) * (b + lam) + lam * lam);
  return num / (2.0 - e1 - e2);
}

// Variance about the distribution mean (second moment minus squared bias).
inline double clap_variance(const ClipLaplaceParams& params) {
  const double bias = clap_mean(params) - params.center;
  return clap_second_moment(params) - bias * bias;
}

// Classic (untruncated) Laplace draw; the local randomizer of the
// UniS / PLDP / LDP-Min baselines.
inline double laplace_sample(double center, double scale, Rng& rng) {
  if (!(scale > 0.0)) throw parameter_error("laplace scale must be > 0");
  const double v = rng.uniform() - 0.5;
  const double mag = std::log1p(-2.0 * std::abs(v));
  return v < 0.0 ? center + scale * mag : center - scale * mag;
}

}  // namespace apes

#endif  // APES_CLIP_LAPLACE_HPP_
