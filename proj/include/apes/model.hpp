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
#ifndef APES_MODEL_HPP_
#define APES_MODEL_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "apes/data.hpp"
#include "apes/error.hpp"

namespace apes {

// Multinomial logistic regression with a bias column appended inside the
// model. Weights are row-major classes x (features + 1); zero-initialized.
struct LogisticModel {
  int classes = 0;
  int features = 0;
  std::vector<double> w;

  LogisticModel() = default;
  LogisticModel(int classes_in, int features_in)
      : classes(classes_in),
        features(features_in),
        w(static_cast<std::size_t>(classes_in) * (features_in + 1), 0.0) {
    if (classes_in < 2 || features_in < 1)
      throw parameter_error("model needs >= 2 classes and >= 1 feature");
  }

  int dim() const { return classes * (features + 1); }

  const double* row(int c) const {
    return w.data() + static_cast<std::size_t>(c) * (features + 1);
  }
};

namespace detail {

inline void check_shapes(const LogisticModel& model, const Dataset& data) {
  if (model.features != data.p)
    throw parameter_error("model/data feature dimension mismatch");
  if (data.classes > model.classes)
    throw parameter_error("dataset labels exceed model classes");
}

// Log-sum-exp normalized class scores for one row, written into `logits`.
inline void class_logits(const LogisticModel& model, const double* x,
                         std::vector<double>& logits) {
  logits.resize(static_cast<std::size_t>(model.classes));
  for (int c = 0; c < model.classes; ++c) {
    const double* wc = model.row(c);
    double z = wc[model.features];  // bias
    for (int j = 0; j < model.features; ++j) z += wc[j] * x[j];
    logits[static_cast<std::size_t>(c)] = z;
  }
}

}  // namespace detail

// Mean cross-entropy over the given rows.
inline double model_loss(const LogisticModel& model, const Dataset& data,
                         std::span<const int> rows) {
  detail::check_shapes(model, data);
  if (rows.empty()) throw parameter_error("loss over an empty shard");
  std::vector<double> logits;
  double total = 0.0;
  for (int i : rows) {
    detail::class_logits(model, data.row(i), logits);
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - zmax);
    const double y_logit =
        logits[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)])];
    total += std::log(sum) + zmax - y_logit;
  }
  return total / static_cast<double>(rows.size());
}

// Mean cross-entropy gradient over the given rows, laid out like the
// weights (classes x (features + 1), bias last).
inline std::vector<double> model_gradient(const LogisticModel& model,
                                          const Dataset& data,
                                          std::span<const int> rows) {
  detail::check_shapes(model, data);
  if (rows.empty()) throw parameter_error("gradient over an empty shard");
  std::vector<double> grad(static_cast<std::size_t>(model.dim()), 0.0);
  std::vector<double> logits;
  const int stride = model.features + 1;
  for (int i : rows) {
    const double* x = data.row(i);
    detail::class_logits(model, data.row(i), logits);
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double& z : logits) {
      z = std::exp(z - zmax);
      sum += z;
    }
    const int y = data.labels[static_cast<std::size_t>(i)];
    for (int c = 0; c < model.classes; ++c) {
      const double residual =
          logits[static_cast<std::size_t>(c)] / sum - (c == y ? 1.0 : 0.0);
      double* gc = grad.data() + static_cast<std::size_t>(c) * stride;
      for (int j = 0; j < model.features; ++j) gc[j] += residual * x[j];
      gc[model.features] += residual;
    }
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (double& g : grad) g *= inv;
  return grad;
}

// Fraction of rows whose arg-max class matches the label.
inline double evaluate(const LogisticModel& model, const Dataset& data) {
  detail::check_shapes(model, data);
  if (data.m == 0) throw parameter_error("evaluate on an empty dataset");
  std::vector<double> logits;
  int correct = 0;
  for (int i = 0; i < data.m; ++i) {
    detail::class_logits(model, data.row(i), logits);
    const int pred = static_cast<int>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (pred == data.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / data.m;
}

}  // namespace apes

#endif  // APES_MODEL_HPP_
