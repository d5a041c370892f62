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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "balpack/concepts.hpp"

namespace balpack {

struct ConceptFrequencyTable {
  std::vector<std::uint64_t> counts;  // counts[c] = #assignments containing c
  std::uint64_t total_samples = 0;
};

ConceptFrequencyTable concept_frequencies(std::span<const ConceptAssignment> assignments,
                                          std::size_t vocab_size);

enum class WeightMode {
  mean,  // (1/k_i) * sum_c 1/f_c
  sum,   // sum_c 1/f_c
};

WeightMode parse_weight_mode(const std::string& s);
const char* weight_mode_name(WeightMode mode) noexcept;

// Normalized inverse-frequency weights, one per assignment (same order).
// A sample that references a zero-frequency concept is an error.
std::vector<double> image_weights(std::span<const ConceptAssignment> assignments,
                                  const ConceptFrequencyTable& freqs,
                                  WeightMode mode = WeightMode::mean);

inline constexpr double kWeightSumTolerance = 1e-9;

// Draws n positions from `weights` (which must be non-negative and sum to 1).
//
// Without replacement, positions come back in draw order of a sequential
// weighted draw with renormalization, realized as an exponential race: each
// position i gets key -ln(u_i)/w_i from its own counter, and the n smallest
// keys win (ties to the lower position). With replacement, draw j is an
// inverse-CDF lookup on counter j. Either way the result is a pure function of
// (weights, n, seed, replacement); `threads` only affects wall time.
std::vector<std::uint64_t> sample_balanced(std::span<const double> weights, std::size_t n,
                                           std::uint64_t seed, bool replacement,
                                           unsigned threads = 1);

struct BalanceReport {
  std::size_t vocab_size = 0;
  std::size_t num_samples = 0;
  std::uint64_t total_occurrences = 0;
  double entropy_bits = 0.0;
  double gini = 0.0;
  double coverage = 0.0;
  std::vector<std::uint64_t> sorted_counts;  // descending, length vocab_size
};

BalanceReport balance_report(std::span<const ConceptAssignment> assignments, std::size_t vocab_size);

// Report over assignments[p] for each position p in `subset` (repeats count
// each time they were drawn).
BalanceReport balance_report(std::span<const ConceptAssignment> assignments,
                             std::span<const std::uint64_t> subset, std::size_t vocab_size);

nlohmann::json to_json(const BalanceReport& report);
void write_rank_csv(const BalanceReport& report, const std::filesystem::path& path);

// {"i": sample_index, "w": weight} per line.
struct WeightedSample {
  std::uint64_t sample_index;
  double weight;
};
void write_weights(std::span<const WeightedSample> weights, const std::filesystem::path& path);
std::vector<WeightedSample> read_weights(const std::filesystem::path& path);

struct SubsetHeader {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  bool replacement = false;
};
// "# seed=<s> n=<n> replacement=<true|false>" followed by one index per line.
void write_subset(const SubsetHeader& header, std::span<const std::uint64_t> indices,
                  const std::filesystem::path& path);
std::vector<std::uint64_t> read_subset(const std::filesystem::path& path, SubsetHeader* header = nullptr);

}  // namespace balpack
