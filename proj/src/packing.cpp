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

#include "balpack/packing.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <tuple>

#include "balpack/error.hpp"
#include "balpack/parallel.hpp"
#include "balpack/rng.hpp"

namespace balpack {

std::uint64_t PackPlan::used(std::size_t pack) const {
  std::uint64_t total = 0;
  for (const auto& item : packs.at(pack)) total += item.length;
  return total;
}

PackStrategy parse_strategy(const std::string& s) {
  if (s == "ffd") return PackStrategy::ffd;
  if (s == "bucket") return PackStrategy::bucket;
  throw Error("invalid_argument", "unknown strategy \"" + s + "\" (expected ffd|bucket)");
}

const char* strategy_name(PackStrategy s) noexcept { return s == PackStrategy::ffd ? "ffd" : "bucket"; }

void PackingConfig::validate() const {
  const auto fail = [](const std::string& what) { throw Error("invalid_config", what); };
  if (capacity < 1) fail("capacity must be >= 1");
  if (!(min_utilization > 0.0 && min_utilization <= 1.0)) fail("min_utilization must be in (0, 1]");
  if (shards < 1) fail("shards must be >= 1");
  if (num_buckets < 1 || num_buckets > 63) fail("num_buckets must be in [1, 63]");
}

nlohmann::json to_json(const PackingConfig& c) {
  return {{"capacity", c.capacity},
          {"strategy", strategy_name(c.strategy)},
          {"num_buckets", c.num_buckets},
          {"max_samples_per_pack", c.max_samples_per_pack},
          {"max_sources_per_pack", c.max_sources_per_pack},
          {"min_utilization", c.min_utilization},
          {"shards", c.shards},
          {"seed", c.seed}};
}

namespace {

// Max-tree over the remaining capacity of pack slots. Unopened slots hold the
// full capacity, closed ones -1, so "first slot with room" is a single descent.
class FirstFitTree {
 public:
  FirstFitTree(std::size_t slots, std::int64_t capacity) {
    size_ = 1;
    while (size_ < std::max<std::size_t>(slots, 1)) size_ <<= 1;
    tree_.assign(2 * size_, capacity);
  }

  void set(std::size_t slot, std::int64_t remaining) {
    std::size_t node = slot + size_;
    tree_[node] = remaining;
    for (node >>= 1; node >= 1; node >>= 1) tree_[node] = std::max(tree_[2 * node], tree_[2 * node + 1]);
  }

  // Lowest slot >= from whose remaining capacity is >= need, or npos.
  std::size_t find_first(std::size_t from, std::int64_t need) const {
    return descend(1, 0, size_, from, need);
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::size_t descend(std::size_t node, std::size_t lo, std::size_t hi, std::size_t from,
                      std::int64_t need) const {
    if (hi <= from || tree_[node] < need) return npos;
    if (hi - lo == 1) return lo;
    const std::size_t mid = (lo + hi) / 2;
    const std::size_t left = descend(2 * node, lo, mid, from, need);
    if (left != npos) return left;
    return descend(2 * node + 1, mid, hi, from, need);
  }

  std::size_t size_ = 1;
  std::vector<std::int64_t> tree_;
};

struct OpenPack {
  std::vector<PackItem> items;
  std::uint64_t used = 0;
  std::vector<std::string> sources;  // distinct, only tracked under a source cap
};

bool has_source(const OpenPack& p, const std::string& src) {
  return std::any_of(p.sources.begin(), p.sources.end(), [&](const std::string& s) { return s == src; });
}

// FFD over items that all fit in `capacity`.
std::vector<std::vector<PackItem>> ffd_in_range(std::vector<PackItem> items, std::uint64_t capacity,
                                                PackCaps caps) {
  std::stable_sort(items.begin(), items.end(), [](const PackItem& a, const PackItem& b) {
    if (a.length != b.length) return a.length > b.length;
    return a.sample_id < b.sample_id;
  });
  FirstFitTree tree(items.size(), static_cast<std::int64_t>(capacity));
  std::vector<OpenPack> packs;
  for (auto& item : items) {
    const auto need = static_cast<std::int64_t>(item.length);
    std::size_t slot = tree.find_first(0, need);
    if (caps.max_sources_per_pack != 0) {
      while (slot < packs.size() && !has_source(packs[slot], item.source) &&
             packs[slot].sources.size() >= caps.max_sources_per_pack) {
        slot = tree.find_first(slot + 1, need);
      }
    }
    if (slot == packs.size()) packs.emplace_back();
    auto& pack = packs[slot];
    pack.used += item.length;
    pack.items.push_back(std::move(item));
    if (caps.max_sources_per_pack != 0 && !has_source(pack, pack.items.back().source)) {
      pack.sources.push_back(pack.items.back().source);
    }
    const bool full = caps.max_samples_per_pack != 0 && pack.items.size() >= caps.max_samples_per_pack;
    tree.set(slot, full ? -1 : static_cast<std::int64_t>(capacity - pack.used));
  }
  std::vector<std::vector<PackItem>> out;
  out.reserve(packs.size());
  for (auto& p : packs) out.push_back(std::move(p.items));
  return out;
}

std::uint64_t total_length(const std::vector<PackItem>& pack) {
  std::uint64_t t = 0;
  for (const auto& it : pack) t += it.length;
  return t;
}

bool meets_threshold(std::uint64_t used, std::uint64_t capacity, double min_utilization) {
  return static_cast<double>(used) / static_cast<double>(capacity) >= min_utilization;
}

std::vector<std::vector<PackItem>> pack_shard(const std::vector<PackItem>& shard_items,
                                              const PackingConfig& config) {
  std::vector<std::vector<PackItem>> buckets(config.num_buckets);
  for (const auto& item : shard_items) {
    buckets[length_bucket(item.length, config.capacity, config.num_buckets)].push_back(item);
  }
  std::vector<std::vector<PackItem>> kept;
  std::vector<std::vector<PackItem>> residual;
  const bool refill = config.num_buckets > 1;
  for (auto& bucket : buckets) {
    if (bucket.empty()) continue;
    for (auto& pack : ffd_in_range(std::move(bucket), config.capacity, config.caps())) {
      if (refill && !meets_threshold(total_length(pack), config.capacity, config.min_utilization)) {
        residual.push_back(std::move(pack));
      } else {
        kept.push_back(std::move(pack));
      }
    }
  }
  if (!residual.empty()) {
    std::vector<PackItem> pool;
    for (auto& pack : residual) {
      for (auto& item : pack) pool.push_back(item);
    }
    auto repacked = ffd_in_range(std::move(pool), config.capacity, config.caps());
    // One refill pass; keep the original residuals if merging did not help.
    auto& tail = repacked.size() <= residual.size() ? repacked : residual;
    for (auto& pack : tail) kept.push_back(std::move(pack));
  }
  return kept;
}

}  // namespace

std::size_t length_bucket(std::uint64_t length, std::uint64_t capacity, std::size_t num_buckets) noexcept {
  // Largest b with length <= capacity / 2^b, i.e. length * 2^b <= capacity.
  std::size_t b = 0;
  while (b + 1 < num_buckets && (static_cast<unsigned __int128>(length) << (b + 1)) <= capacity) ++b;
  return b;
}

std::size_t shard_of(const std::string& sample_id, std::uint64_t seed, std::size_t shards) noexcept {
  if (shards <= 1) return 0;
  return static_cast<std::size_t>(seeded_hash(seed, sample_id.data(), sample_id.size()) % shards);
}

PackPlan pack_ffd(std::span<const PackItem> items, std::uint64_t capacity, PackCaps caps) {
  if (capacity < 1) throw Error("invalid_config", "capacity must be >= 1");
  PackPlan plan;
  plan.capacity = capacity;
  std::vector<PackItem> in_range;
  in_range.reserve(items.size());
  for (const auto& item : items) {
    if (item.length < 1) throw Error("malformed_item", "item \"" + item.sample_id + "\" has zero length");
    (item.length > capacity ? plan.overflow : in_range).push_back(item);
  }
  plan.packs = ffd_in_range(std::move(in_range), capacity, caps);
  return plan;
}

PackPlan pack_bucketed(std::span<const PackItem> items, const PackingConfig& config, unsigned threads) {
  config.validate();
  PackPlan plan;
  plan.capacity = config.capacity;
  std::vector<std::vector<PackItem>> shards(config.shards);
  for (const auto& item : items) {
    if (item.length < 1) throw Error("malformed_item", "item \"" + item.sample_id + "\" has zero length");
    if (item.length > config.capacity) {
      plan.overflow.push_back(item);
    } else {
      shards[shard_of(item.sample_id, config.seed, config.shards)].push_back(item);
    }
  }
  std::vector<std::vector<std::vector<PackItem>>> shard_packs(config.shards);
  parallel_for(config.shards, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) shard_packs[s] = pack_shard(shards[s], config);
  });
  for (auto& packs : shard_packs) {
    for (auto& p : packs) plan.packs.push_back(std::move(p));
  }
  return plan;
}

PackPlan pack(std::span<const PackItem> items, const PackingConfig& config, unsigned threads) {
  config.validate();
  if (config.strategy == PackStrategy::ffd) return pack_ffd(items, config.capacity, config.caps());
  return pack_bucketed(items, config, threads);
}

std::size_t pack_optimal_oracle(std::span<const std::uint64_t> lengths, std::uint64_t capacity) {
  const std::size_t n = lengths.size();
  if (n > kMaxOracleItems) {
    throw Error("instance_too_large", "oracle supports at most " + std::to_string(kMaxOracleItems) + " items, got " +
                                          std::to_string(n));
  }
  for (auto l : lengths) {
    if (l < 1 || l > capacity) throw Error("malformed_item", "oracle items must have 1 <= length <= capacity");
  }
  if (n == 0) return 0;
  // best[mask] = lexicographically smallest (packs used, fill of the last pack)
  // over all orders of placing the items in `mask` one by one.
  using State = std::pair<std::size_t, std::uint64_t>;
  const std::size_t full = (std::size_t{1} << n) - 1;
  std::vector<State> best(full + 1, {n + 1, 0});
  best[0] = {1, 0};
  for (std::size_t mask = 0; mask <= full; ++mask) {
    const auto [packs, fill] = best[mask];
    if (packs > n) continue;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::size_t{1} << i)) continue;
      const State next = fill + lengths[i] <= capacity ? State{packs, fill + lengths[i]} : State{packs + 1, lengths[i]};
      auto& slot = best[mask | (std::size_t{1} << i)];
      if (next < slot) slot = next;
    }
  }
  return best[full].first;
}

PackingStats packing_stats(const PackPlan& plan, double min_utilization) {
  PackingStats s;
  s.min_utilization = min_utilization;
  s.num_packs = plan.packs.size();
  s.overflow_count = plan.overflow.size();
  std::size_t successes = 0;
  for (const auto& pack : plan.packs) {
    s.num_packed += pack.size();
    const auto used = total_length(pack);
    s.packed_tokens += used;
    s.padding_tokens += plan.capacity - std::min(used, plan.capacity);
    if (meets_threshold(used, plan.capacity, min_utilization)) ++successes;
    s.max_items_in_pack = std::max(s.max_items_in_pack, pack.size());
    std::vector<std::string_view> sources;
    for (const auto& it : pack) sources.push_back(it.source);
    std::sort(sources.begin(), sources.end());
    s.max_sources_in_pack = std::max<std::size_t>(
        s.max_sources_in_pack, static_cast<std::size_t>(std::unique(sources.begin(), sources.end()) - sources.begin()));
  }
  s.num_samples = s.num_packed + s.overflow_count;
  s.empty = s.num_packs == 0;
  if (!s.empty) {
    const double packs = static_cast<double>(s.num_packs);
    s.compression_ratio = static_cast<double>(s.num_packed) / packs;
    s.compression_ratio_including_overflow = static_cast<double>(s.num_samples) / packs;
    s.utilization = static_cast<double>(s.packed_tokens) / (packs * static_cast<double>(plan.capacity));
    s.success_rate = static_cast<double>(successes) / packs;
  }
  return s;
}

nlohmann::json to_json(const PackingStats& s) {
  return {{"num_samples", s.num_samples},
          {"num_packed", s.num_packed},
          {"num_packs", s.num_packs},
          {"overflow_count", s.overflow_count},
          {"packed_tokens", s.packed_tokens},
          {"padding_tokens", s.padding_tokens},
          {"compression_ratio", s.compression_ratio},
          {"compression_ratio_including_overflow", s.compression_ratio_including_overflow},
          {"utilization", s.utilization},
          {"success_rate", s.success_rate},
          {"min_utilization", s.min_utilization},
          {"max_items_in_pack", s.max_items_in_pack},
          {"max_sources_in_pack", s.max_sources_in_pack},
          {"empty", s.empty}};
}

std::optional<std::string> check_plan(const PackPlan& plan, std::span<const PackItem> items, PackCaps caps) {
  using Key = std::tuple<std::string, std::uint64_t, std::string>;
  std::map<Key, long long> balance;
  for (const auto& it : items) ++balance[{it.sample_id, it.length, it.source}];
  for (std::size_t p = 0; p < plan.packs.size(); ++p) {
    const auto& pack = plan.packs[p];
    const auto where = "pack " + std::to_string(p);
    if (pack.empty()) return where + " is empty";
    if (caps.max_samples_per_pack != 0 && pack.size() > caps.max_samples_per_pack) {
      return where + " holds " + std::to_string(pack.size()) + " items over the cap";
    }
    std::uint64_t used = 0;
    std::vector<std::string_view> sources;
    for (const auto& it : pack) {
      used += it.length;
      sources.push_back(it.source);
      --balance[{it.sample_id, it.length, it.source}];
    }
    if (used > plan.capacity) return where + " exceeds capacity";
    if (plan.padding(p) != plan.capacity - used) return where + " has inconsistent padding";
    std::sort(sources.begin(), sources.end());
    const auto distinct = static_cast<std::size_t>(std::unique(sources.begin(), sources.end()) - sources.begin());
    if (caps.max_sources_per_pack != 0 && distinct > caps.max_sources_per_pack) {
      return where + " mixes " + std::to_string(distinct) + " sources over the cap";
    }
  }
  for (const auto& it : plan.overflow) {
    if (it.length <= plan.capacity) return "overflow item \"" + it.sample_id + "\" fits in capacity";
    --balance[{it.sample_id, it.length, it.source}];
  }
  for (const auto& [key, count] : balance) {
    if (count != 0) return "item \"" + std::get<0>(key) + "\" appears " + std::to_string(count < 0 ? -count : count) +
                           (count < 0 ? " extra time(s)" : " fewer time(s)") + " than in the input";
  }
  return std::nullopt;
}

}  // namespace balpack
