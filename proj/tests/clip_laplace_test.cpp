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
#include "apes/clip_laplace.hpp"

#include <cmath>
#include <vector>

#include "apes/rng.hpp"
#include "gtest/gtest.h"
#include "oracles.hpp"

namespace apes {
namespace {

ClipLaplaceParams params_general(double center, double scale, double bound,
                                 double sensitivity) {
  return ClipLaplaceParams{center, scale, bound, sensitivity};
}

// center 0, scale 2, bound 1, framework sensitivity 2 (so bound == sens/2).
ClipLaplaceParams anchor_params(double center = 0.0) {
  return params_general(center, 2.0, 1.0, 2.0);
}

TEST(ClipLaplaceDensity, AnchorValueAndNormalization) {
  const auto params = anchor_params();
  // 1 / (2 * scale * S) with S = 1 - exp(-1/2); frozen via 30-digit eval.
  EXPECT_NEAR(clap_density(params, 0.0), 0.6353735206341996, 1e-12);
  const double mass = apes_test::integrate_with_knots(
      [&](double z) { return clap_density(params, z); }, -1.0, 1.0, {0.0});
  EXPECT_NEAR(mass, 1.0, 1e-10);
}

TEST(ClipLaplaceDensity, ZeroOutsideSupport) {
  const auto params = anchor_params();
  EXPECT_EQ(clap_density(params, 1.5), 0.0);
  EXPECT_EQ(clap_density(params, -1.0000001), 0.0);
}

TEST(ClipLaplaceDensity, SymmetricAboutZeroCenter) {
  const auto params = anchor_params();
  EXPECT_DOUBLE_EQ(clap_density(params, 0.3), clap_density(params, -0.3));
}

TEST(ClipLaplaceDensity, IntegratesToOneAcrossParameterGrid) {
  for (double eps : {0.05, 0.1, 0.5, 1.0, 3.0}) {
    for (double clip : {0.1, 1.0}) {
      for (double frac : {-1.0, -0.4, 0.0, 0.7, 1.0}) {
        const auto params =
            ClipLaplaceParams::for_budget(frac * clip, eps, clip);
        const double mass = apes_test::integrate_with_knots(
            [&](double z) { return clap_density(params, z); }, -clip, clip,
            {params.center});
        EXPECT_NEAR(mass, 1.0, 1e-10)
            << "eps=" << eps << " clip=" << clip << " frac=" << frac;
      }
    }
  }
}

TEST(ClipLaplaceDensity, RejectsInvalidParams) {
  EXPECT_THROW(clap_density(params_general(0.0, -1.0, 1.0, 2.0), 0.0),
               parameter_error);
  EXPECT_THROW(clap_density(params_general(0.0, 1.0, 0.4, 2.0), 0.0),
               parameter_error);
  EXPECT_THROW(clap_density(params_general(1.5, 1.0, 2.0, 2.0), 0.0),
               parameter_error);
}

TEST(ClipLaplaceCdf, EndpointsAndCenter) {
  const auto params = anchor_params();
  EXPECT_EQ(clap_cdf(params, -1.0), 0.0);
  EXPECT_EQ(clap_cdf(params, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(clap_cdf(params, 0.0), 0.5);
}

TEST(ClipLaplaceCdf, MatchesQuadratureAtShiftedCenter) {
  const auto params = anchor_params(0.5);
  const double mass = apes_test::integrate_with_knots(
      [&](double z) { return clap_density(params, z); }, -1.0, 0.5, {0.5});
  EXPECT_NEAR(clap_cdf(params, 0.5), mass, 1e-10);
}

TEST(ClipLaplaceCdf, DerivativeMatchesDensity) {
  const auto params = anchor_params(0.25);
  const double h = 1e-6;
  for (double z = -0.95; z < 0.95; z += 0.05) {
    const double slope =
        (clap_cdf(params, z + h) - clap_cdf(params, z - h)) / (2.0 * h);
    EXPECT_NEAR(slope, clap_density(params, z), 1e-6) << "z=" << z;
  }
}

TEST(ClipLaplaceCdf, MonotoneNondecreasing) {
  const auto params = ClipLaplaceParams::for_budget(-0.07, 0.3, 0.1);
  double prev = -1.0;
  for (double z = -0.1; z <= 0.1 + 1e-12; z += 0.002) {
    const double value = clap_cdf(params, z);
    EXPECT_GE(value, prev);
    prev = value;
  }
}

TEST(ClipLaplaceSample, StaysInSupport) {
  Rng rng(7);
  for (double eps : {0.05, 1.0, 3.0}) {
    const auto params = ClipLaplaceParams::for_budget(0.6, eps, 1.0);
    for (int i = 0; i < 2000; ++i) {
      const double z = clap_sample(params, rng);
      EXPECT_GE(z, -1.0);
      EXPECT_LE(z, 1.0);
    }
  }
}

TEST(ClipLaplaceSample, DeterministicGivenSeed) {
  const auto params = ClipLaplaceParams::for_budget(0.5, 1.0, 1.0);
  Rng a(99);
  Rng b(99);
  for (int i = 0; i < 100; ++i)
    EXPECT_EQ(clap_sample(params, a), clap_sample(params, b));
}

TEST(ClipLaplaceSample, EmpiricalMeanMatchesClosedForm) {
  const auto params = ClipLaplaceParams::for_budget(0.5, 1.0, 1.0);
  Rng rng(1234);
  const int n = 1000000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += clap_sample(params, rng);
  const double mean = sum / n;
  const double se = std::sqrt(clap_variance(params) / n);
  EXPECT_NEAR(mean, clap_mean(params), 3.0 * se);
}

TEST(ClipLaplaceSample, KolmogorovSmirnovAgainstCdf) {
  const auto params = ClipLaplaceParams::for_budget(0.3, 0.5, 1.0);
  Rng rng(42);
  std::vector<double> samples(100000);
  for (double& s : samples) s = clap_sample(params, rng);
  const double d = apes_test::ks_statistic(
      samples, [&](double z) { return clap_cdf(params, z); });
  EXPECT_LT(d, apes_test::ks_critical_value(samples.size(), 0.01));
}

TEST(ClipLaplaceMean, AnchorValues) {
  EXPECT_DOUBLE_EQ(clap_mean(anchor_params(0.0)), 0.0);
  // Oracle value 0.107764141266966786 from the closed form, confirmed by
  // quadrature of z * density to 30 digits.
  EXPECT_NEAR(clap_mean(anchor_params(0.5)), 0.1077641412669668, 1e-12);
  EXPECT_NEAR(clap_mean(anchor_params(-0.5)), -0.1077641412669668, 1e-12);
}

TEST(ClipLaplaceMean, OddInCenter) {
  for (double c : {0.1, 0.33, 0.9, 1.0})
    EXPECT_DOUBLE_EQ(clap_mean(anchor_params(c)), -clap_mean(anchor_params(-c)));
}

TEST(ClipLaplaceMean, StrictlyIncreasingInCenter) {
  for (double eps : {0.05, 0.5, 3.0}) {
    double prev = -2.0;
    for (int i = 0; i <= 40; ++i) {
      const double c = -1.0 + 2.0 * i / 40.0;
      const double m = clap_mean(ClipLaplaceParams::for_budget(c, eps, 1.0));
      EXPECT_GT(m, prev) << "eps=" << eps << " center=" << c;
      prev = m;
    }
  }
}

TEST(ClipLaplaceMean, LiesStrictlyInsideSupport) {
  for (double c : {-1.0, -0.5, 0.5, 1.0}) {
    const double m = clap_mean(ClipLaplaceParams::for_budget(c, 0.2, 1.0));
    EXPECT_GT(m, -1.0);
    EXPECT_LT(m, 1.0);
  }
}

TEST(ClipLaplaceMean, MatchesQuadratureAcrossGrid) {
  for (double eps : {0.05, 0.1, 0.5, 1.0, 3.0}) {
    for (double clip : {0.1, 1.0}) {
      for (double frac : {-0.9, -0.3, 0.0, 0.4, 1.0}) {
        const auto params =
            ClipLaplaceParams::for_budget(frac * clip, eps, clip);
        const double quad = apes_test::integrate_with_knots(
            [&](double z) { return z * clap_density(params, z); }, -clip, clip,
            {params.center});
        EXPECT_NEAR(clap_mean(params), quad, 1e-9)
            << "eps=" << eps << " clip=" << clip << " frac=" << frac;
      }
    }
  }
}

TEST(ClipLaplaceMean, RequiresFrameworkBound) {
  // bound 2 > sensitivity/2 = 1: density/CDF fine, closed forms refused.
  const auto params = params_general(0.5, 2.0, 2.0, 2.0);
  EXPECT_GT(clap_density(params, 0.0), 0.0);
  EXPECT_THROW(clap_mean(params), unsupported_config_error);
  EXPECT_THROW(clap_second_moment(params), unsupported_config_error);
}

TEST(ClipLaplaceMean, CenterAtTruncationBoundIsFinite) {
  for (double c : {-1.0, 1.0}) {
    const auto params = ClipLaplaceParams::for_budget(c, 0.5, 1.0);
    EXPECT_TRUE(std::isfinite(clap_mean(params)));
    EXPECT_TRUE(std::isfinite(clap_second_moment(params)));
  }
}

TEST(ClipLaplaceSecondMoment, MatchesQuadrature) {
  for (double center : {0.0, 0.5}) {
    const auto params = anchor_params(center);
    const double quad = apes_test::integrate_with_knots(
        [&](double z) {
          const double d = z - center;
          return d * d * clap_density(params, z);
        },
        -1.0, 1.0, {center});
    EXPECT_NEAR(clap_second_moment(params), quad, 1e-8) << "center=" << center;
  }
}

TEST(ClipLaplaceSecondMoment, BoundedByDiameterSquared) {
  for (double eps : {0.05, 0.5, 3.0})
    for (double clip : {0.1, 1.0})
      for (double frac : {-1.0, 0.0, 0.8}) {
        const auto params =
            ClipLaplaceParams::for_budget(frac * clip, eps, clip);
        EXPECT_LT(clap_second_moment(params), 4.0 * clip * clip);
      }
}

// Density-ratio form of the local privacy guarantee on a modest grid; the
// acceptance suite runs the full 201x201 version.
TEST(ClipLaplaceProperty, DensityRatioBoundedByExpEps) {
  for (double eps : {0.1, 1.0}) {
    const double clip = 1.0;
    const double limit = std::exp(eps) * (1.0 + 1e-9);
    for (int i = 0; i <= 8; ++i) {
      const double f1 = -1.0 + 2.0 * i / 8.0;
      for (int j = 0; j <= 8; ++j) {
        const double f2 = -1.0 + 2.0 * j / 8.0;
        const auto a = ClipLaplaceParams::for_budget(f1, eps, clip);
        const auto b = ClipLaplaceParams::for_budget(f2, eps, clip);
        for (int zi = 0; zi <= 20; ++zi) {
          const double z = -1.0 + 2.0 * zi / 20.0;
          const double ratio = clap_density(a, z) / clap_density(b, z);
          EXPECT_LE(ratio, limit) << "f1=" << f1 << " f2=" << f2 << " z=" << z;
        }
      }
    }
  }
}

TEST(LaplaceSample, MomentsMatchAnalytic) {
  Rng rng(5);
  const int n = 1000000;
  const double center = 0.3;
  const double scale = 0.7;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = laplace_sample(center, scale, rng);
    sum += x;
    sum_sq += (x - center) * (x - center);
  }
  const double var = 2.0 * scale * scale;
  EXPECT_NEAR(sum / n, center, 3.0 * std::sqrt(var / n));
  // Var of the sample second moment: (E[x^4] - var^2)/n = 20 b^4 / n.
  const double se_var = scale * scale * std::sqrt(20.0 / n);
  EXPECT_NEAR(sum_sq / n, var, 3.0 * se_var);
}

TEST(LaplaceSample, DeterministicAndValidated) {
  Rng a(11);
  Rng b(11);
  for (int i = 0; i < 50; ++i)
    EXPECT_EQ(laplace_sample(0.0, 1.0, a), laplace_sample(0.0, 1.0, b));
  Rng rng(1);
  EXPECT_THROW(laplace_sample(0.0, 0.0, rng), parameter_error);
  EXPECT_THROW(laplace_sample(0.0, -2.0, rng), parameter_error);
}

}  // namespace
}  // namespace apes
