/* Copyright 2026 The balpack Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cmath>
#include <cstdint>

namespace balpack {

// SplitMix64 finalizer. Pure function of its input, so it doubles as a hash
// mixer and as the core of the counter-based generator below.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Counter-based generator ("splitmix64-ctr"): the i-th draw of stream s under
// seed k is splitmix64(key(k, s) + i * golden). Any draw can be computed
// independently, which is what makes parallel sampling and sharded synthesis
// independent of worker count.
class CounterRng {
 public:
  static constexpr const char* kName = "splitmix64-ctr";

  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_(splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ULL))) {}

  constexpr std::uint64_t at(std::uint64_t counter) const noexcept {
    return splitmix64(key_ + counter * 0x9E3779B97F4A7C15ULL);
  }

  // Sequential interface.
  constexpr std::uint64_t next() noexcept { return at(counter_++); }

  // Uniform in [0, 1) with 53 random bits.
  static constexpr double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }
  // Uniform in (0, 1); safe as a log argument.
  static constexpr double to_open_unit(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform() noexcept { return to_unit(next()); }
  double open_uniform() noexcept { return to_open_unit(next()); }

  // Box-Muller; consumes two draws and discards the sine branch so the
  // stream position stays a simple function of the number of calls.
  double normal() noexcept {
    const double u1 = open_uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  std::uint64_t position() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// FNV-1a over bytes, then mixed with the seed.
inline std::uint64_t seeded_hash(std::uint64_t seed, const char* data, std::size_t size) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001B3ULL;
  }
  return splitmix64(h ^ splitmix64(seed));
}

}  // namespace balpack
