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
#ifndef APES_ERROR_HPP_
#define APES_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace apes {

// Invalid numeric or structural argument (bad scale, empty batch, ...).
class parameter_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A closed form was requested outside the configuration it is stated for
// (e.g. the Clip-Laplace mean with truncation bound != sensitivity/2).
class unsupported_config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An operation was applied in the wrong state (e.g. shuffling twice).
class state_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A privacy bound's applicability precondition failed. Reporting a bound
// whose precondition does not hold would be a privacy hazard, so this is an
// error carrying the observed echo mass and the required threshold.
class insufficient_echo_mass_error : public std::runtime_error {
 public:
  insufficient_echo_mass_error(double echo_mass, double threshold)
      : std::runtime_error("insufficient echo mass: T_sum = " +
                           std::to_string(echo_mass) + " < required " +
                           std::to_string(threshold) +
                           " (n too small or budgets too large)"),
        echo_mass_(echo_mass),
        threshold_(threshold) {}

  double echo_mass() const { return echo_mass_; }
  double threshold() const { return threshold_; }

 private:
  double echo_mass_;
  double threshold_;
};

// Malformed external input (IDX files, config files).
class parse_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed run configuration (unknown keys, missing sections, bad flags).
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace apes

#endif  // APES_ERROR_HPP_
