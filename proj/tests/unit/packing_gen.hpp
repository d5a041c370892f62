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

#include <random>
#include <string>
#include <vector>

#include "balpack/packing.hpp"

namespace balpack::testing {

inline std::vector<PackItem> items_from_lengths(const std::vector<std::uint64_t>& lengths) {
  std::vector<PackItem> items;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    items.push_back({"x" + std::to_string(i), lengths[i], "src" + std::to_string(i % 3)});
  }
  return items;
}

inline std::vector<PackItem> random_items(std::mt19937_64& gen, std::size_t n, std::uint64_t max_len,
                                          std::size_t num_sources = 4) {
  std::vector<PackItem> items;
  for (std::size_t i = 0; i < n; ++i) {
    items.push_back({"id" + std::to_string(gen() % 1000000) + "_" + std::to_string(i), 1 + gen() % max_len,
                     "s" + std::to_string(gen() % num_sources)});
  }
  return items;
}

inline std::vector<std::uint64_t> lengths_of(const std::vector<PackItem>& pack) {
  std::vector<std::uint64_t> out;
  for (const auto& it : pack) out.push_back(it.length);
  return out;
}

}  // namespace balpack::testing
