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

#include "balpack/manifest.hpp"

#include <set>

#include "balpack/error.hpp"
#include "balpack/jsonl.hpp"

namespace balpack {

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

}  // namespace

std::uint64_t visual_tokens(const ImageSize& image, std::uint32_t patch, std::uint32_t merge) {
  if (patch == 0 || merge == 0) throw Error("invalid_record", "patch and merge must be >= 1");
  if (image.width < patch || image.height < patch) {
    throw Error("image_too_small", "image " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                                       " is smaller than one " + std::to_string(patch) + "px patch");
  }
  const auto cols = ceil_div(ceil_div(image.width, patch), merge);
  const auto rows = ceil_div(ceil_div(image.height, patch), merge);
  return cols * rows;
}

std::uint64_t estimate_tokens(const SampleRecord& rec) {
  const std::uint64_t visual = rec.image ? visual_tokens(*rec.image, rec.patch, rec.merge) : 0;
  const std::uint64_t total = visual + rec.text_tokens;
  if (total == 0) throw Error("empty_record", "record \"" + rec.id + "\" has zero tokens");
  return total;
}

std::vector<SampleRecord> ingest_manifest(const std::filesystem::path& path) {
  std::vector<SampleRecord> out;
  std::set<std::string> ids;
  jsonl::for_each(path, [&](const jsonl::Json& j, std::size_t line) {
    const auto where = path.string() + ":" + std::to_string(line) + ": ";
    const auto non_negative = [&](const char* key) {
      const auto v = jsonl::get_int(j, key, line);
      if (v < 0) throw Error("malformed_record", where + "\"" + key + "\" must be non-negative");
      return static_cast<std::uint64_t>(v);
    };
    SampleRecord rec;
    rec.id = jsonl::get_string(j, "id", line);
    rec.source = j.contains("source") ? jsonl::get_string(j, "source", line) : std::string();
    if (j.contains("text_tokens")) {
      rec.text_tokens = non_negative("text_tokens");
    } else if (j.contains("length")) {
      rec.text_tokens = non_negative("length");
    } else {
      throw Error("malformed_record", where + "missing \"text_tokens\"");
    }
    if (j.contains("patch")) rec.patch = static_cast<std::uint32_t>(non_negative("patch"));
    if (j.contains("merge")) rec.merge = static_cast<std::uint32_t>(non_negative("merge"));
    if (const auto img = j.find("image"); img != j.end() && !img->is_null()) {
      if (!img->is_object()) throw Error("malformed_record", where + "\"image\" must be an object");
      const auto w = jsonl::get_int(*img, "w", line);
      const auto h = jsonl::get_int(*img, "h", line);
      if (w < 0 || h < 0 || w > UINT32_MAX || h > UINT32_MAX) {
        throw Error("malformed_record", where + "image dimensions out of range");
      }
      rec.image = ImageSize{static_cast<std::uint32_t>(w), static_cast<std::uint32_t>(h)};
    }
    try {
      estimate_tokens(rec);
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what());
    }
    if (!ids.insert(rec.id).second) throw Error("duplicate_id", where + "duplicate id \"" + rec.id + "\"");
    out.push_back(std::move(rec));
  });
  return out;
}

void emit_manifest(std::span<const SampleRecord> records, const std::filesystem::path& path) {
  auto out = jsonl::open_output(path);
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["source"] = r.source;
    j["text_tokens"] = r.text_tokens;
    if (r.image) j["image"] = {{"w", r.image->width}, {"h", r.image->height}};
    if (r.patch != kDefaultPatch) j["patch"] = r.patch;
    if (r.merge != kDefaultMerge) j["merge"] = r.merge;
    out << j.dump() << '\n';
  }
}

std::vector<PackItem> to_pack_items(std::span<const SampleRecord> records) {
  std::vector<PackItem> items;
  items.reserve(records.size());
  for (const auto& r : records) items.push_back({r.id, estimate_tokens(r), r.source});
  return items;
}

}  // namespace balpack
