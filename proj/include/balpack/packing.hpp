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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace balpack {

inline constexpr std::uint64_t kDefaultCapacity = 8192;

struct PackItem {
  std::string sample_id;
  std::uint64_t length = 0;  // tokens, >= 1
  std::string source;

  friend bool operator==(const PackItem&, const PackItem&) = default;
};

struct PackPlan {
  std::uint64_t capacity = 0;
  std::vector<std::vector<PackItem>> packs;
  std::vector<PackItem> overflow;  // items longer than capacity

  std::uint64_t used(std::size_t pack) const;
  std::uint64_t padding(std::size_t pack) const { return capacity - used(pack); }

  friend bool operator==(const PackPlan&, const PackPlan&) = default;
};

enum class PackStrategy { ffd, bucket };

PackStrategy parse_strategy(const std::string& s);
const char* strategy_name(PackStrategy s) noexcept;

// Per-pack caps shared by both strategies. 0 means "no cap".
struct PackCaps {
  std::size_t max_samples_per_pack = 0;
  std::size_t max_sources_per_pack = 0;
};

struct PackingConfig {
  std::uint64_t capacity = kDefaultCapacity;
  PackStrategy strategy = PackStrategy::bucket;
  std::size_t num_buckets = 6;
  std::size_t max_samples_per_pack = 0;
  double min_utilization = 0.9;
  std::size_t max_sources_per_pack = 0;
  std::size_t shards = 1;
  std::uint64_t seed = 0;

  PackCaps caps() const noexcept { return {max_samples_per_pack, max_sources_per_pack}; }
  // Throws Error("invalid_config") on the first violated constraint.
  void validate() const;
};

nlohmann::json to_json(const PackingConfig& config);

// First-fit decreasing: items sorted by length descending (ties by sample_id
// ascending, then input order), each placed in the lowest-indexed pack with
// room that also satisfies `caps`. Items longer than capacity go to overflow
// in input order.
PackPlan pack_ffd(std::span<const PackItem> items, std::uint64_t capacity, PackCaps caps = {});

// Sharded, length-bucketed FFD with a cross-bucket refill pass; see
// README for the full procedure. `threads` never changes the result.
PackPlan pack_bucketed(std::span<const PackItem> items, const PackingConfig& config,
                       unsigned threads = 1);

PackPlan pack(std::span<const PackItem> items, const PackingConfig& config, unsigned threads = 1);

// Bucket index for a length: bucket b holds (capacity/2^(b+1), capacity/2^b];
// the last bucket also takes everything shorter.
std::size_t length_bucket(std::uint64_t length, std::uint64_t capacity, std::size_t num_buckets) noexcept;

std::size_t shard_of(const std::string& sample_id, std::uint64_t seed, std::size_t shards) noexcept;

inline constexpr std::size_t kMaxOracleItems = 16;

// Minimum number of packs over all partitions (subset DP). Test oracle only.
std::size_t pack_optimal_oracle(std::span<const std::uint64_t> lengths, std::uint64_t capacity);

struct PackingStats {
  std::size_t num_samples = 0;  // packed + overflow
  std::size_t num_packed = 0;
  std::size_t num_packs = 0;
  std::size_t overflow_count = 0;
  std::uint64_t packed_tokens = 0;
  std::uint64_t padding_tokens = 0;
  double compression_ratio = 0.0;                   // num_packed / num_packs
  double compression_ratio_including_overflow = 0.0;  // num_samples / num_packs
  double utilization = 0.0;
  double success_rate = 0.0;
  double min_utilization = 0.0;
  std::size_t max_items_in_pack = 0;
  std::size_t max_sources_in_pack = 0;
  bool empty = true;
};

PackingStats packing_stats(const PackPlan& plan, double min_utilization);
nlohmann::json to_json(const PackingStats& stats);

// Checks the partition, capacity, non-empty and composition invariants of
// `plan` against `items`; returns a description of the first violation.
std::optional<std::string> check_plan(const PackPlan& plan, std::span<const PackItem> items,
                                      PackCaps caps = {});

// JSON Lines, one record per pack:
//   {"pack": n, "capacity": C, "items": [{"id", "len", "off", "src"}], "pad": p}
// then one trailing object {"stats": {...}, "overflow": [{"id","len","src"}]}.
void emit_plan(const PackPlan& plan, const std::filesystem::path& path,
               const nlohmann::json& stats);
void emit_plan(const PackPlan& plan, std::ostream& out, const nlohmann::json& stats);
// Validates every record; duplicated sample ids raise Error("partition_violation").
PackPlan load_plan(const std::filesystem::path& path, nlohmann::json* stats = nullptr);

}  // namespace balpack
