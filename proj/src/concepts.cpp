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

#include "balpack/concepts.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>

#include "balpack/error.hpp"
#include "balpack/jsonl.hpp"
#include "balpack/kernels.hpp"
#include "balpack/parallel.hpp"

namespace balpack {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

void normalize_row(std::span<const float> in, std::span<float> out, std::size_t row_index) {
  const double norm = std::sqrt(kernels::squared_norm(in));
  if (!(norm >= kMinRowNorm)) {
    throw Error("zero_row", "row " + std::to_string(row_index) + " has norm " + std::to_string(norm) +
                                " below " + std::to_string(kMinRowNorm));
  }
  for (std::size_t j = 0; j < in.size(); ++j) out[j] = static_cast<float>(in[j] / norm);
}

// A copy with every non-unit row normalized, or nullopt when all rows are
// already unit length.
std::optional<EmbeddingMatrix> normalized_if_needed(const EmbeddingMatrix& m) {
  std::vector<std::size_t> off_rows;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (std::abs(std::sqrt(kernels::squared_norm(m.row(r))) - 1.0) > 1e-6) off_rows.push_back(r);
  }
  if (off_rows.empty()) return std::nullopt;
  std::vector<float> data(m.data().begin(), m.data().end());
  for (std::size_t r : off_rows) {
    normalize_row(m.row(r), std::span(data).subspan(r * m.dim(), m.dim()), r);
  }
  return EmbeddingMatrix(m.rows(), m.dim(), std::move(data));
}

}  // namespace

EmbeddingMatrix l2_normalize(const EmbeddingMatrix& m) {
  std::vector<float> data(m.data().size());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    normalize_row(m.row(r), std::span(data).subspan(r * m.dim(), m.dim()), r);
  }
  return EmbeddingMatrix(m.rows(), m.dim(), std::move(data));
}

ConceptVocabulary::ConceptVocabulary(std::vector<std::string> names, EmbeddingMatrix embeddings)
    : names_(std::move(names)), embeddings_(std::move(embeddings)) {
  if (names_.size() != embeddings_.rows()) {
    throw Error("vocab_mismatch", "vocabulary has " + std::to_string(names_.size()) + " names but " +
                                      std::to_string(embeddings_.rows()) + " embedding rows");
  }
  std::set<std::string> seen;
  for (auto& n : names_) {
    n = trim(n);
    if (!seen.insert(n).second) throw Error("duplicate_concept", "duplicate concept name: \"" + n + "\"");
  }
}

ConceptVocabulary load_vocabulary(const std::filesystem::path& tsv,
                                  const std::filesystem::path& embeddings) {
  auto in = jsonl::open_input(tsv);
  std::map<std::size_t, std::string> by_index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    std::size_t index = 0;
    bool ok = tab != std::string::npos && tab > 0;
    if (ok) {
      const auto idx = trim(std::string_view(line).substr(0, tab));
      ok = !idx.empty() && std::all_of(idx.begin(), idx.end(), [](char c) { return c >= '0' && c <= '9'; });
      if (ok) index = std::stoull(idx);
    }
    if (!ok) throw Error("malformed_vocab", tsv.string() + ":" + std::to_string(line_no) + ": expected index<TAB>name");
    if (!by_index.emplace(index, line.substr(tab + 1)).second) {
      throw Error("malformed_vocab", tsv.string() + ":" + std::to_string(line_no) + ": repeated index " + std::to_string(index));
    }
  }
  std::vector<std::string> names;
  names.reserve(by_index.size());
  for (const auto& [index, name] : by_index) {
    if (index != names.size()) {
      throw Error("malformed_vocab", tsv.string() + ": indices must be 0.." + std::to_string(by_index.size() - 1) +
                                         ", missing " + std::to_string(names.size()));
    }
    names.push_back(name);
  }
  return ConceptVocabulary(std::move(names), load_embeddings(embeddings));
}

void store_vocabulary_names(const std::vector<std::string>& names, const std::filesystem::path& tsv) {
  auto out = jsonl::open_output(tsv);
  for (std::size_t i = 0; i < names.size(); ++i) out << i << '\t' << names[i] << '\n';
}

std::vector<ConceptAssignment> topk_concepts(const EmbeddingMatrix& images,
                                             const ConceptVocabulary& vocab, std::size_t k,
                                             unsigned threads) {
  const std::size_t m = vocab.size();
  if (images.dim() != vocab.embeddings().dim()) {
    throw Error("dim_mismatch", "image dim " + std::to_string(images.dim()) + " != concept dim " +
                                    std::to_string(vocab.embeddings().dim()));
  }
  if (k < 1 || k > m) {
    throw Error("k_out_of_range", "k=" + std::to_string(k) + " outside [1, " + std::to_string(m) + "]");
  }
  const auto images_norm = normalized_if_needed(images);
  const auto concepts_norm = normalized_if_needed(vocab.embeddings());
  const EmbeddingMatrix& img = images_norm ? *images_norm : images;
  const EmbeddingMatrix& con = concepts_norm ? *concepts_norm : vocab.embeddings();

  std::vector<ConceptAssignment> out(img.rows());
  parallel_for(img.rows(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> sims(m);
    std::vector<ScoredConcept> scored(m);
    for (std::size_t i = begin; i < end; ++i) {
      kernels::dot_rows(img.row(i), con.data(), con.dim(), sims);
      for (std::size_t c = 0; c < m; ++c) scored[c] = {static_cast<std::uint32_t>(c), sims[c]};
      std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                        ranks_before);
      auto& a = out[i];
      a.sample_index = i;
      a.concepts.assign(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k));
      // Rounding can push |cos| a few ulps past 1; ranking used the raw value.
      for (auto& sc : a.concepts) sc.similarity = std::clamp(sc.similarity, -1.0, 1.0);
    }
  });
  return out;
}

std::string build_pseudo_caption(const ConceptAssignment& a, const ConceptVocabulary& vocab) {
  std::string caption;
  for (std::size_t r = 0; r < a.concepts.size(); ++r) {
    const auto idx = a.concepts[r].concept_index;
    if (idx >= vocab.size()) {
      throw Error("index_out_of_range", "sample " + std::to_string(a.sample_index) + ": concept " +
                                            std::to_string(idx) + " >= vocabulary size " +
                                            std::to_string(vocab.size()));
    }
    if (r > 0) caption += kCaptionSeparator;
    caption += vocab.name(idx);
  }
  return caption;
}

void write_assignments(const std::vector<ConceptAssignment>& assignments,
                       const std::filesystem::path& path) {
  auto out = jsonl::open_output(path);
  for (const auto& a : assignments) {
    jsonl::Json c = jsonl::Json::array();
    jsonl::Json s = jsonl::Json::array();
    for (const auto& sc : a.concepts) {
      c.push_back(sc.concept_index);
      s.push_back(sc.similarity);
    }
    jsonl::Json j;
    j["i"] = a.sample_index;
    j["c"] = std::move(c);
    j["s"] = std::move(s);
    jsonl::write_line(out, j);
  }
}

std::vector<ConceptAssignment> read_assignments(const std::filesystem::path& path) {
  std::vector<ConceptAssignment> out;
  jsonl::for_each(path, [&](const jsonl::Json& j, std::size_t line) {
    const auto bad = [&](const std::string& what) {
      return Error("malformed_record", path.string() + ":" + std::to_string(line) + ": " + what);
    };
    const auto i = j.find("i");
    const auto c = j.find("c");
    if (i == j.end() || !i->is_number_unsigned()) throw bad("\"i\" must be a non-negative integer");
    if (c == j.end() || !c->is_array() || c->empty()) throw bad("\"c\" must be a non-empty array");
    const auto s = j.find("s");
    if (s != j.end() && (!s->is_array() || s->size() != c->size())) throw bad("\"s\" must match \"c\" in length");
    ConceptAssignment a;
    a.sample_index = i->get<std::uint64_t>();
    std::set<std::uint32_t> distinct;
    for (std::size_t r = 0; r < c->size(); ++r) {
      const auto& ci = (*c)[r];
      if (!ci.is_number_unsigned() || ci.get<std::uint64_t>() > UINT32_MAX) throw bad("concept indices must be non-negative integers");
      const auto idx = ci.get<std::uint32_t>();
      if (!distinct.insert(idx).second) throw bad("repeated concept " + std::to_string(idx));
      double sim = 0.0;
      if (s != j.end()) {
        if (!(*s)[r].is_number()) throw bad("similarities must be numbers");
        sim = (*s)[r].get<double>();
      }
      a.concepts.push_back({idx, sim});
    }
    out.push_back(std::move(a));
  });
  return out;
}

}  // namespace balpack
