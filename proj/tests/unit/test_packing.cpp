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

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "balpack/error.hpp"
#include "balpack/packing.hpp"
#include "oracles.hpp"
#include "packing_gen.hpp"

using namespace balpack;
using testing::items_from_lengths;
using testing::lengths_of;

TEST_CASE("FFD worked example {5,5,4,3,3} at capacity 10") {
  const auto plan = pack_ffd(items_from_lengths({5, 5, 4, 3, 3}), 10);
  REQUIRE(plan.packs.size() == 2);
  CHECK(lengths_of(plan.packs[0]) == std::vector<std::uint64_t>{5, 5});
  CHECK(lengths_of(plan.packs[1]) == std::vector<std::uint64_t>{4, 3, 3});
  const auto stats = packing_stats(plan, 0.9);
  CHECK(stats.compression_ratio == 2.5);
  CHECK(stats.utilization == 1.0);
  CHECK(stats.success_rate == 1.0);
  CHECK(pack_optimal_oracle(std::vector<std::uint64_t>{5, 5, 4, 3, 3}, 10) == 2);
}

TEST_CASE("items equal to capacity get one pack each with no padding") {
  const auto plan = pack_ffd(items_from_lengths({7, 7, 7}), 7);
  CHECK(plan.packs.size() == 3);
  for (std::size_t p = 0; p < 3; ++p) CHECK(plan.padding(p) == 0);
  CHECK(packing_stats(plan, 1.0).compression_ratio == 1.0);
}

TEST_CASE("an item longer than capacity goes to overflow") {
  const auto plan = pack_ffd(items_from_lengths({11}), 10);
  CHECK(plan.packs.empty());
  const auto stats = packing_stats(plan, 0.9);
  CHECK(stats.overflow_count == 1);
  CHECK(stats.empty);
  CHECK(stats.num_packs == 0);
  CHECK(stats.compression_ratio == 0.0);
}

TEST_CASE("FFD ties are broken by sample id then input order") {
  std::vector<PackItem> items{{"b", 4, "s"}, {"a", 4, "s"}, {"c", 6, "s"}};
  const auto plan = pack_ffd(items, 10);
  REQUIRE(plan.packs.size() == 2);
  CHECK(plan.packs[0][0].sample_id == "c");
  CHECK(plan.packs[0][1].sample_id == "a");
  CHECK(plan.packs[1][0].sample_id == "b");
}

TEST_CASE("packing_stats edge cases") {
  CHECK(packing_stats(pack_ffd({}, 10), 0.9).empty);
  const auto one = pack_ffd(items_from_lengths({8}), 10);
  const auto s = packing_stats(one, 0.9);
  CHECK(s.success_rate == 0.0);
  CHECK(s.utilization == doctest::Approx(0.8));
  CHECK(s.padding_tokens == 2);
}

TEST_CASE("optimal oracle worked examples and agreement with partition enumeration") {
  CHECK(pack_optimal_oracle(std::vector<std::uint64_t>{6, 6, 5, 5}, 11) == 2);
  CHECK(pack_optimal_oracle(std::vector<std::uint64_t>{4}, 11) == 1);
  CHECK(pack_optimal_oracle(std::vector<std::uint64_t>{10, 10}, 10) == 2);
  CHECK(pack_optimal_oracle(std::vector<std::uint64_t>{}, 10) == 0);
  CHECK_THROWS_AS(pack_optimal_oracle(std::vector<std::uint64_t>(17, 1), 10), Error);
  std::mt19937_64 gen(101);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + gen() % 9;
    const std::uint64_t cap = 5 + gen() % 30;
    std::vector<std::uint64_t> lengths(n);
    for (auto& l : lengths) l = 1 + gen() % cap;
    CHECK(pack_optimal_oracle(lengths, cap) == testing::brute_force_min_bins(lengths, cap));
  }
}

TEST_CASE("length buckets are geometric in capacity") {
  CHECK(length_bucket(8192, 8192, 6) == 0);
  CHECK(length_bucket(4097, 8192, 6) == 0);
  CHECK(length_bucket(4096, 8192, 6) == 1);
  CHECK(length_bucket(2049, 8192, 6) == 1);
  CHECK(length_bucket(2048, 8192, 6) == 2);
  CHECK(length_bucket(257, 8192, 6) == 4);
  CHECK(length_bucket(256, 8192, 6) == 5);
  CHECK(length_bucket(1, 8192, 6) == 5);
  CHECK(length_bucket(1, 8192, 1) == 0);
  // Odd capacity: (5/2, 5] -> 0, (5/4, 5/2] -> 1
  CHECK(length_bucket(3, 5, 4) == 0);
  CHECK(length_bucket(2, 5, 4) == 1);
  CHECK(length_bucket(1, 5, 4) == 2);
}

TEST_CASE("degenerate bucketed config reproduces pack_ffd") {
  std::mt19937_64 gen(8);
  PackingConfig cfg;
  cfg.capacity = 100;
  cfg.num_buckets = 1;
  cfg.shards = 1;
  for (int trial = 0; trial < 100; ++trial) {
    const auto items = testing::random_items(gen, gen() % 80, 130);
    CHECK(pack_bucketed(items, cfg) == pack_ffd(items, cfg.capacity));
  }
}

TEST_CASE("max_samples_per_pack = 1 packs one item per sequence") {
  std::mt19937_64 gen(9);
  const auto items = testing::random_items(gen, 200, 150);
  PackingConfig cfg;
  cfg.capacity = 100;
  cfg.max_samples_per_pack = 1;
  cfg.shards = 3;
  for (auto strategy : {PackStrategy::ffd, PackStrategy::bucket}) {
    cfg.strategy = strategy;
    const auto plan = pack(items, cfg);
    const auto stats = packing_stats(plan, cfg.min_utilization);
    CHECK(stats.num_packs == stats.num_packed);
    CHECK(stats.compression_ratio == 1.0);
  }
}

TEST_CASE("partition, capacity and composition invariants hold for random configs") {
  std::mt19937_64 gen(2718);
  for (int trial = 0; trial < 400; ++trial) {
    PackingConfig cfg;
    cfg.capacity = 16 + gen() % 300;
    cfg.strategy = gen() % 2 ? PackStrategy::bucket : PackStrategy::ffd;
    cfg.num_buckets = 1 + gen() % 8;
    cfg.max_samples_per_pack = gen() % 3 == 0 ? 0 : 1 + gen() % 6;
    cfg.max_sources_per_pack = gen() % 3 == 0 ? 0 : 1 + gen() % 3;
    cfg.min_utilization = 0.05 + 0.95 * std::uniform_real_distribution<double>()(gen);
    cfg.shards = 1 + gen() % 5;
    cfg.seed = gen();
    const auto items = testing::random_items(gen, gen() % 120, cfg.capacity + cfg.capacity / 4, 1 + gen() % 5);
    const auto plan = pack(items, cfg, 1 + static_cast<unsigned>(gen() % 4));
    const auto violation = check_plan(plan, items, cfg.caps());
    CHECK_MESSAGE(!violation.has_value(), violation.value_or(""));
  }
}

TEST_CASE("check_plan detects violations") {
  const auto items = items_from_lengths({5, 5, 4});
  auto plan = pack_ffd(items, 10);
  CHECK(!check_plan(plan, items).has_value());
  auto dup = plan;
  dup.packs[1].push_back(items[0]);
  CHECK(check_plan(dup, items).has_value());
  auto lost = plan;
  lost.packs.pop_back();
  CHECK(check_plan(lost, items).has_value());
  auto empty = plan;
  empty.packs.emplace_back();
  CHECK(check_plan(empty, items).has_value());
  CHECK(check_plan(plan, items, {1, 0}).has_value());
}

TEST_CASE("bucketed plans are identical across worker counts") {
  std::mt19937_64 gen(77);
  const auto items = testing::random_items(gen, 3000, 2000);
  PackingConfig cfg;
  cfg.capacity = 2048;
  cfg.shards = 7;
  cfg.max_sources_per_pack = 2;
  const auto one = pack_bucketed(items, cfg, 1);
  CHECK(one == pack_bucketed(items, cfg, 2));
  CHECK(one == pack_bucketed(items, cfg, 8));
  cfg.seed = 1;
  CHECK_FALSE(one == pack_bucketed(items, cfg, 1));
}

TEST_CASE("FFD stays within ceil(11/9 OPT) + 1 on small instances") {
  std::mt19937_64 gen(404);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + gen() % 12;
    const std::uint64_t cap = 10 + gen() % 90;
    std::vector<std::uint64_t> lengths(n);
    for (auto& l : lengths) l = 1 + gen() % cap;
    const auto ffd = pack_ffd(items_from_lengths(lengths), cap).packs.size();
    CHECK(ffd <= testing::ceil_11_9_plus_1(pack_optimal_oracle(lengths, cap)));
  }
}

TEST_CASE("raising max_samples_per_pack never increases the FFD pack count") {
  std::mt19937_64 gen(5150);
  for (int trial = 0; trial < 500; ++trial) {
    const std::uint64_t cap = 20 + gen() % 200;
    const auto items = testing::random_items(gen, 1 + gen() % 60, cap);
    std::size_t previous = SIZE_MAX;
    for (std::size_t limit = 1; limit <= 12; ++limit) {
      const auto count = pack_ffd(items, cap, {limit, 0}).packs.size();
      CHECK(count <= previous);
      previous = count;
    }
    CHECK(pack_ffd(items, cap).packs.size() <= previous);
  }
}

// First-fit decreasing has the classical capacity anomaly: one extra token of
// room changes which items share the early packs and costs a pack later on.
TEST_CASE("FFD pack count is not monotone in capacity") {
  const std::vector<std::uint64_t> lengths{66, 66, 66, 22, 36, 41, 24, 66, 66, 36,
                                           35, 41, 22, 41, 33, 41, 28, 41, 62, 66};
  const auto items = testing::items_from_lengths(lengths);
  const auto at_127 = pack_ffd(items, 127);
  const auto at_128 = pack_ffd(items, 128);
  CHECK(!check_plan(at_127, items, {}).has_value());
  CHECK(!check_plan(at_128, items, {}).has_value());
  CHECK(at_127.packs.size() == 8);
  CHECK(at_128.packs.size() == 9);
}

TEST_CASE("source cap limits distinct sources per pack") {
  std::mt19937_64 gen(6);
  const auto items = testing::random_items(gen, 500, 50, 6);
  for (std::size_t cap_sources = 1; cap_sources <= 3; ++cap_sources) {
    const auto plan = pack_ffd(items, 200, {0, cap_sources});
    CHECK(packing_stats(plan, 0.5).max_sources_in_pack <= cap_sources);
    CHECK(!check_plan(plan, items, {0, cap_sources}).has_value());
  }
}

TEST_CASE("invalid configs are rejected") {
  PackingConfig cfg;
  cfg.min_utilization = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.min_utilization = 1.0;
  cfg.shards = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.shards = 1;
  cfg.capacity = 0;
  CHECK_THROWS_AS(pack_bucketed({}, cfg), Error);
  CHECK_THROWS_AS(pack_ffd(items_from_lengths({0}), 10), Error);
  CHECK_THROWS_AS(parse_strategy("best-fit"), Error);
}
