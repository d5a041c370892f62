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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "balpack/concepts.hpp"
#include "balpack/packing.hpp"

namespace balpack {

inline constexpr std::uint32_t kDefaultPatch = 14;
inline constexpr std::uint32_t kDefaultMerge = 2;

struct ImageSize {
  std::uint32_t width = 0;
  std::uint32_t height = 0;

  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

struct SampleRecord {
  std::string id;
  std::string source;
  std::uint64_t text_tokens = 0;
  std::optional<ImageSize> image;
  std::uint32_t patch = kDefaultPatch;
  std::uint32_t merge = kDefaultMerge;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

// Visual tokens after merging merge x merge neighbourhoods of the patch grid.
// Ragged grids round up per side: ceil(ceil(w/patch)/merge) * ceil(ceil(h/patch)/merge).
std::uint64_t visual_tokens(const ImageSize& image, std::uint32_t patch, std::uint32_t merge);

// visual_tokens (if any image) + text_tokens. Throws on images smaller than a
// patch and on records that would have zero tokens.
std::uint64_t estimate_tokens(const SampleRecord& rec);

// {"id", "source", "text_tokens", "image": {"w", "h"}?} per line; "patch" and
// "merge" are optional and written only when non-default. Lines carrying a
// plain "length" instead of "text_tokens" are accepted as text-only records.
// Duplicate ids are rejected.
std::vector<SampleRecord> ingest_manifest(const std::filesystem::path& path);
void emit_manifest(std::span<const SampleRecord> records, const std::filesystem::path& path);

std::vector<PackItem> to_pack_items(std::span<const SampleRecord> records);

struct SynthConfig {
  std::size_t n_samples = 100000;
  double zipf_exponent = 1.5;
  std::size_t vocab_size = 1000;
  std::size_t k = 5;
  double length_mu = std::log(700.0);
  double length_sigma = 0.35;
  std::uint64_t length_min = 32;
  std::uint64_t length_max = 8192;
  double image_fraction = 0.9;
  std::map<std::string, double> sources{{"caption_free", 0.2}, {"interleaved", 0.3}, {"web", 0.5}};
  std::size_t embedding_dim = 0;  // > 0 also synthesizes image/concept embeddings
  double embedding_noise = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const SynthConfig& cfg);
SynthConfig synth_config_from_json(const nlohmann::json& j);

struct SynthCorpus {
  std::vector<SampleRecord> records;
  std::vector<ConceptAssignment> assignments;  // concept r-1 has Zipf rank r
  std::optional<EmbeddingMatrix> image_embeddings;
  std::optional<EmbeddingMatrix> concept_embeddings;
  std::vector<std::string> concept_names;
};

// Records are generated in fixed blocks, each from its own (seed, block)
// substream, so the corpus is a pure function of the config regardless of
// `threads`.
SynthCorpus synth_corpus(const SynthConfig& cfg, unsigned threads = 1);

inline constexpr std::size_t kSynthBlock = 4096;

// Normalized Zipf rank probabilities p(r) ∝ r^-s for r = 1..m.
std::vector<double> zipf_probabilities(std::size_t m, double s);

}  // namespace balpack
