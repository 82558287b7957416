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
#ifndef APES_RNG_HPP_
#define APES_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace apes {

namespace detail {

// SplitMix64 finalizer; used to derive stream seeds and to initialize state.
inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Purpose tags for deriving independent substreams from one master seed.
// Every source of randomness in a run owns its own stream, so enabling
// parallelism or skipping an optional step never shifts another stream.
enum class StreamTag : std::uint64_t {
  kBudgets = 1,
  kDataGen = 2,
  kPartition = 3,
  kPerturb = 4,
  kPadding = 5,
  kShuffle = 6,
  kTest = 255,
};

// Deterministic xoshiro256** generator. Not a std engine on purpose: the
// output sequence is pinned by this header alone, so results are
// bit-reproducible across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = detail::splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  // Uniform draw strictly inside (0, 1); safe as an argument to log().
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (cosine branch only, two uniforms per
  // draw) so the stream layout is independent of any library's algorithm.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, n); n must be > 0. Uses rejection to stay
  // unbiased (the bias of a plain modulus would be invisible here, but the
  // rejection loop is just as cheap and exact).
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::uint64_t state_[4];
};

// Derives the seed of a named substream from a master seed and a path of
// tags (purpose, epoch, user, ...). Streams with distinct paths are
// independent for all practical purposes.
inline std::uint64_t stream_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t x = master;
  std::uint64_t h = detail::splitmix64(x);
  for (std::uint64_t tag : path) {
    x ^= tag + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    h = detail::splitmix64(x);
  }
  return h;
}

inline Rng make_stream(std::uint64_t master, StreamTag tag,
                       std::uint64_t a = 0, std::uint64_t b = 0) {
  return Rng(stream_seed(master,
                         {static_cast<std::uint64_t>(tag), a, b}));
}

}  // namespace apes

#endif  // APES_RNG_HPP_
