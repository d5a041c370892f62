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

#include <set>

#include "balpack/error.hpp"
#include "balpack/jsonl.hpp"
#include "balpack/packing.hpp"

namespace balpack {

using OrderedJson = nlohmann::ordered_json;

void emit_plan(const PackPlan& plan, std::ostream& out, const nlohmann::json& stats) {
  for (std::size_t p = 0; p < plan.packs.size(); ++p) {
    OrderedJson items = OrderedJson::array();
    std::uint64_t offset = 0;
    for (const auto& it : plan.packs[p]) {
      items.push_back({{"id", it.sample_id}, {"len", it.length}, {"off", offset}, {"src", it.source}});
      offset += it.length;
    }
    OrderedJson rec;
    rec["pack"] = p;
    rec["capacity"] = plan.capacity;
    rec["items"] = std::move(items);
    rec["pad"] = plan.capacity - offset;
    out << rec.dump() << '\n';
  }
  OrderedJson overflow = OrderedJson::array();
  for (const auto& it : plan.overflow) overflow.push_back({{"id", it.sample_id}, {"len", it.length}, {"src", it.source}});
  OrderedJson tail;
  tail["capacity"] = plan.capacity;
  tail["stats"] = OrderedJson::parse(stats.dump());
  tail["overflow"] = std::move(overflow);
  out << tail.dump() << '\n';
}

void emit_plan(const PackPlan& plan, const std::filesystem::path& path, const nlohmann::json& stats) {
  auto out = jsonl::open_output(path);
  emit_plan(plan, out, stats);
}

PackPlan load_plan(const std::filesystem::path& path, nlohmann::json* stats) {
  PackPlan plan;
  bool have_capacity = false;
  bool have_tail = false;
  std::set<std::string> seen;
  jsonl::for_each(path, [&](const jsonl::Json& j, std::size_t line) {
    const auto fail = [&](const std::string& code, const std::string& what) {
      throw Error(code, path.string() + ":" + std::to_string(line) + ": " + what);
    };
    if (have_tail) fail("malformed_plan", "record after the trailing stats object");
    const auto capacity = static_cast<std::uint64_t>(jsonl::get_int(j, "capacity", line));
    if (capacity < 1) fail("malformed_plan", "capacity must be >= 1");
    if (have_capacity && capacity != plan.capacity) fail("malformed_plan", "capacity differs between records");
    plan.capacity = capacity;
    have_capacity = true;

    const auto read_item = [&](const jsonl::Json& e) {
      if (!e.is_object()) fail("malformed_plan", "item must be an object");
      PackItem item;
      item.sample_id = jsonl::get_string(e, "id", line);
      const auto len = jsonl::get_int(e, "len", line);
      if (len < 1) fail("malformed_plan", "item \"" + item.sample_id + "\" has non-positive length");
      item.length = static_cast<std::uint64_t>(len);
      if (e.contains("src")) item.source = jsonl::get_string(e, "src", line);
      if (!seen.insert(item.sample_id).second) {
        fail("partition_violation", "sample id \"" + item.sample_id + "\" appears more than once");
      }
      return item;
    };

    if (j.contains("stats")) {
      have_tail = true;
      if (stats != nullptr) *stats = j["stats"];
      const auto overflow = j.find("overflow");
      if (overflow != j.end()) {
        if (!overflow->is_array()) fail("malformed_plan", "\"overflow\" must be an array");
        for (const auto& e : *overflow) {
          auto item = read_item(e);
          if (item.length <= plan.capacity) fail("malformed_plan", "overflow item \"" + item.sample_id + "\" fits in capacity");
          plan.overflow.push_back(std::move(item));
        }
      }
      return;
    }

    const auto index = jsonl::get_int(j, "pack", line);
    if (index != static_cast<long long>(plan.packs.size())) {
      fail("malformed_plan", "expected pack " + std::to_string(plan.packs.size()) + ", got " + std::to_string(index));
    }
    const auto items = j.find("items");
    if (items == j.end() || !items->is_array() || items->empty()) fail("malformed_plan", "\"items\" must be a non-empty array");
    std::vector<PackItem> pack;
    std::uint64_t offset = 0;
    for (const auto& e : *items) {
      if (e.is_object() && jsonl::get_int(e, "off", line) != static_cast<long long>(offset)) {
        fail("malformed_plan", "offset of item \"" + jsonl::get_string(e, "id", line) + "\" is not the prefix sum of lengths");
      }
      auto item = read_item(e);
      offset += item.length;
      pack.push_back(std::move(item));
    }
    if (offset > plan.capacity) fail("capacity_violation", "pack " + std::to_string(index) + " exceeds capacity");
    if (jsonl::get_int(j, "pad", line) != static_cast<long long>(plan.capacity - offset)) {
      fail("malformed_plan", "pad of pack " + std::to_string(index) + " is not capacity minus total length");
    }
    plan.packs.push_back(std::move(pack));
  });
  if (!have_tail) throw Error("malformed_plan", path.string() + ": missing trailing stats object");
  return plan;
}

}  // namespace balpack
