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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace balpack {

// Dense row-major float32 matrix of embeddings. Always non-empty and finite.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<float> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const float> row(std::size_t i) const noexcept {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<const float> data() const noexcept { return data_; }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t rows_;
  std::size_t dim_;
  std::vector<float> data_;
};

// Binary "EMB1" format: magic, u32 LE rows, u32 LE dim, rows*dim f32 LE.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
EmbeddingMatrix parse_embeddings(std::span<const std::byte> bytes);
void store_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path);
std::vector<std::byte> serialize_embeddings(const EmbeddingMatrix& m);

inline constexpr double kMinRowNorm = 1e-12;

// Rows scaled to unit Euclidean norm. Rows with norm below kMinRowNorm are an
// error (code "zero_row") naming the row.
EmbeddingMatrix l2_normalize(const EmbeddingMatrix& m);

class ConceptVocabulary {
 public:
  // Names are trimmed; duplicates after trimming are rejected.
  ConceptVocabulary(std::vector<std::string> names, EmbeddingMatrix embeddings);

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const EmbeddingMatrix& embeddings() const noexcept { return embeddings_; }

 private:
  std::vector<std::string> names_;
  EmbeddingMatrix embeddings_;
};

// TSV `index<TAB>name`, indices 0..M-1 (any line order), paired with an EMB1
// file whose row r is concept r.
ConceptVocabulary load_vocabulary(const std::filesystem::path& tsv,
                                  const std::filesystem::path& embeddings);
void store_vocabulary_names(const std::vector<std::string>& names, const std::filesystem::path& tsv);

struct ScoredConcept {
  std::uint32_t concept_index;
  double similarity;

  friend bool operator==(const ScoredConcept&, const ScoredConcept&) = default;
};

struct ConceptAssignment {
  std::uint64_t sample_index = 0;
  std::vector<ScoredConcept> concepts;  // descending similarity

  std::size_t k() const noexcept { return concepts.size(); }
  friend bool operator==(const ConceptAssignment&, const ConceptAssignment&) = default;
};

// Ranking order used everywhere: higher similarity first, lower concept index
// on ties.
inline bool ranks_before(const ScoredConcept& a, const ScoredConcept& b) noexcept {
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.concept_index < b.concept_index;
}

// Exact top-k by cosine similarity. Rows whose norm is not 1 (to 1e-6) are
// normalized first. Image rows are split across `threads` workers; the
// result is ordered by sample index and does not depend on the split.
std::vector<ConceptAssignment> topk_concepts(const EmbeddingMatrix& images,
                                             const ConceptVocabulary& vocab, std::size_t k,
                                             unsigned threads = 1);

inline constexpr const char* kCaptionSeparator = ", ";

std::string build_pseudo_caption(const ConceptAssignment& a, const ConceptVocabulary& vocab);

// JSON Lines: {"i": sample_index, "c": [concept...], "s": [similarity...]}.
// "s" may be omitted on input (similarities read as 0).
void write_assignments(const std::vector<ConceptAssignment>& assignments,
                       const std::filesystem::path& path);
std::vector<ConceptAssignment> read_assignments(const std::filesystem::path& path);

}  // namespace balpack
