// Copyright 2026 The kaf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>

// Seeded randomness and hashing. Outputs must be bit-stable across
// toolchains and runs, so sampling is built directly on splitmix64 rather
// than <random> distributions (whose output is implementation-defined).
// All randomness in a run flows from one global seed through derive().

namespace kaf {

inline constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = kFnvOffset) {
  return fnv1a64(s.data(), s.size(), h);
}

inline std::uint64_t fnv1a64_u64(std::uint64_t v, std::uint64_t h = kFnvOffset) {
  unsigned char bytes[8];
  std::memcpy(bytes, &v, 8);
  return fnv1a64(bytes, 8, h);
}

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// One scrambling step without advancing any state.
inline std::uint64_t splitmix64_scramble(std::uint64_t x) {
  std::uint64_t s = x;
  return splitmix64_next(s);
}

inline double u64_to_unit_double(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  // Uniform in [0, 1).
  double uniform_double() { return u64_to_unit_double(next_u64()); }

  // Uniform integer in [lo, hi], bounds inclusive.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    const std::uint64_t span = hi - lo + 1;
    return span == 0 ? next_u64() : lo + next_u64() % span;
  }

  bool coin() { return (next_u64() & 1) != 0; }

  // Stable per-shard derivation: the same (seed, shard) always yields the
  // same stream, independent of worker scheduling.
  static SeededRng derive(std::uint64_t global_seed, std::string_view shard) {
    return SeededRng(splitmix64_scramble(fnv1a64(shard, fnv1a64_u64(global_seed))));
  }
  static SeededRng derive(std::uint64_t global_seed, std::uint64_t shard) {
    return SeededRng(splitmix64_scramble(fnv1a64_u64(shard, fnv1a64_u64(global_seed))));
  }

 private:
  std::uint64_t state_;
};

}  // namespace kaf
