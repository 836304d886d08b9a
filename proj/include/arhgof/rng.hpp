// Copyright 2026 The arhgof Authors
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

// Reproducible random streams keyed by (base seed, repetition, purpose, index).
// Each key hashes to an independent mt19937_64 seed, so the numbers a task sees
// never depend on which worker runs it or on what other tasks consume.

#include <cstdint>
#include <random>

namespace arhgof {

using Engine = std::mt19937_64;

enum class Purpose : std::uint64_t {
  series = 1,
  gamma_eps = 2,
  gamma_y = 3,
  bootstrap = 4,
  auxiliary = 5,
};

namespace detail {
inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

struct RngStream {
  std::uint64_t base_seed = 0;
  std::uint64_t repetition = 0;
  Purpose purpose = Purpose::series;
  std::uint64_t index = 0;

  static RngStream root(std::uint64_t seed, std::uint64_t repetition = 0) {
    return {seed, repetition, Purpose::series, 0};
  }

  // Sibling stream for the same repetition.
  RngStream with(Purpose p, std::uint64_t i = 0) const { return {base_seed, repetition, p, i}; }

  RngStream for_repetition(std::uint64_t rep) const { return {base_seed, rep, purpose, index}; }

  std::uint64_t key() const {
    std::uint64_t h = detail::splitmix64(base_seed);
    h = detail::splitmix64(h ^ repetition);
    h = detail::splitmix64(h ^ static_cast<std::uint64_t>(purpose));
    return detail::splitmix64(h ^ index);
  }

  Engine engine() const { return Engine(key()); }
};

}  // namespace arhgof
