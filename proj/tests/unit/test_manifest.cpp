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

#include <filesystem>
#include <fstream>
#include <random>

#include "balpack/error.hpp"
#include "balpack/manifest.hpp"

using namespace balpack;

namespace {

SampleRecord image_record(std::uint32_t w, std::uint32_t h, std::uint64_t text = 0) {
  SampleRecord r;
  r.id = "r";
  r.text_tokens = text;
  r.image = ImageSize{w, h};
  return r;
}

struct TempDir {
  std::filesystem::path path = std::filesystem::temp_directory_path() / "balpack_manifest_test";
  TempDir() { std::filesystem::create_directories(path); }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("visual token arithmetic: 336x336 -> 144, 448x448 -> 256") {
  CHECK(estimate_tokens(image_record(336, 336)) == 144);
  CHECK(estimate_tokens(image_record(448, 448)) == 256);
  SampleRecord text;
  text.id = "t";
  text.text_tokens = 57;
  CHECK(estimate_tokens(text) == 57);
  CHECK(estimate_tokens(image_record(336, 336, 10)) == 154);
}

TEST_CASE("ragged grids round up per side before merging") {
  // 350 px -> 25 patches -> 13 merged columns; 336 px -> 24 -> 12 rows
  CHECK(estimate_tokens(image_record(350, 336)) == 13 * 12);
  // 15 px -> 2 patches -> 1 merged column
  CHECK(estimate_tokens(image_record(15, 14)) == 1);
  CHECK(visual_tokens({29, 29}, 14, 1) == 9);
}

TEST_CASE("images smaller than a patch and empty records are errors") {
  CHECK_THROWS_AS(estimate_tokens(image_record(13, 100)), Error);
  SampleRecord empty;
  empty.id = "e";
  CHECK_THROWS_AS(estimate_tokens(empty), Error);
}

TEST_CASE("token estimate is monotone and exact on divisible grids") {
  std::mt19937_64 gen(14);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::uint32_t w = 14 + gen() % 2000, h = 14 + gen() % 2000;
    const std::uint64_t t = gen() % 500;
    const auto base = estimate_tokens(image_record(w, h, t));
    CHECK(estimate_tokens(image_record(w + 1 + gen() % 50, h, t)) >= base);
    CHECK(estimate_tokens(image_record(w, h + 1 + gen() % 50, t)) >= base);
    CHECK(estimate_tokens(image_record(w, h, t + 1)) > base);

    const std::uint32_t cols = 1 + gen() % 60, rows = 1 + gen() % 60;
    const auto exact = estimate_tokens(image_record(cols * 28, rows * 28));
    CHECK(exact == (cols * 2ull) * (rows * 2ull) / 4);
  }
}

TEST_CASE("ingest: happy path, legacy length field and duplicate ids") {
  TempDir dir;
  const auto p = dir.path / "m.jsonl";
  std::ofstream(p) << R"({"id":"a","source":"web","text_tokens":10,"image":{"w":336,"h":336}})" "\n"
                   << R"({"id":"b","source":"web","text_tokens":57})" "\n"
                   << R"({"id":"c","source":"book","length":900})" "\n";
  const auto recs = ingest_manifest(p);
  REQUIRE(recs.size() == 3);
  const auto items = to_pack_items(recs);
  CHECK(items[0].length == 154);
  CHECK(items[1].length == 57);
  CHECK(items[2].length == 900);
  CHECK(items[2].source == "book");

  std::ofstream(p) << R"({"id":"a","source":"web","text_tokens":10})" "\n"
                   << R"({"id":"a","source":"web","text_tokens":11})" "\n";
  CHECK_THROWS_WITH_AS(ingest_manifest(p), doctest::Contains("\"a\""), Error);

  std::ofstream(p) << R"({"id":"a","source":"web","text_tokens":10})" "\n"
                   << "{oops\n";
  CHECK_THROWS_WITH_AS(ingest_manifest(p), doctest::Contains(":2:"), Error);
}

TEST_CASE("emit then ingest reproduces randomized records") {
  TempDir dir;
  std::mt19937_64 gen(33);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SampleRecord> recs;
    for (std::size_t i = 0, n = 1 + gen() % 30; i < n; ++i) {
      SampleRecord r;
      r.id = "id\"" + std::to_string(i) + "\\é";
      r.source = "src" + std::to_string(gen() % 4);
      r.text_tokens = 1 + gen() % 2000;
      if (gen() % 2) {
        r.patch = gen() % 3 == 0 ? 16 : kDefaultPatch;
        r.merge = gen() % 3 == 0 ? 1 : kDefaultMerge;
        r.image = ImageSize{static_cast<std::uint32_t>(r.patch + gen() % 3000), static_cast<std::uint32_t>(r.patch + gen() % 3000)};
      }
      recs.push_back(r);
    }
    emit_manifest(recs, dir.path / "m.jsonl");
    CHECK(ingest_manifest(dir.path / "m.jsonl") == recs);
  }
}
