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
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>

#include "balpack/concepts.hpp"
#include "balpack/error.hpp"
#include "oracles.hpp"

using namespace balpack;

namespace {

EmbeddingMatrix random_matrix(std::mt19937_64& gen, std::size_t rows, std::size_t dim) {
  std::normal_distribution<float> dist;
  std::vector<float> data(rows * dim);
  for (auto& x : data) x = dist(gen);
  return EmbeddingMatrix(rows, dim, std::move(data));
}

ConceptVocabulary make_vocab(EmbeddingMatrix embeddings) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < embeddings.rows(); ++i) names.push_back("c" + std::to_string(i));
  return ConceptVocabulary(std::move(names), std::move(embeddings));
}

}  // namespace

TEST_CASE("l2_normalize worked examples") {
  const auto m = l2_normalize(EmbeddingMatrix(2, 3, {3, 4, 0, 1, 0, 0}));
  CHECK(m.row(0)[0] == doctest::Approx(0.6).epsilon(1e-7));
  CHECK(m.row(0)[1] == doctest::Approx(0.8).epsilon(1e-7));
  CHECK(m.row(1)[0] == 1.0f);
  CHECK(m.row(1)[1] == 0.0f);
}

TEST_CASE("l2_normalize matches per-row v/|v| and is idempotent") {
  std::mt19937_64 gen(8);
  const auto m = random_matrix(gen, 8, 16);
  const auto n = l2_normalize(m);
  for (std::size_t r = 0; r < 8; ++r) {
    double norm = 0;
    for (float x : m.row(r)) norm += double(x) * x;
    norm = std::sqrt(norm);
    double out_norm = 0;
    for (std::size_t j = 0; j < 16; ++j) {
      CHECK(n.row(r)[j] == doctest::Approx(m.row(r)[j] / norm).epsilon(1e-6));
      out_norm += double(n.row(r)[j]) * n.row(r)[j];
    }
    CHECK(std::abs(std::sqrt(out_norm) - 1.0) <= 1e-6);
  }
  const auto twice = l2_normalize(n);
  for (std::size_t i = 0; i < n.data().size(); ++i) CHECK(std::abs(twice.data()[i] - n.data()[i]) <= 1e-6);
}

TEST_CASE("near-zero row is an error naming the row") {
  try {
    l2_normalize(EmbeddingMatrix(3, 2, {1, 0, 0, 0, 0, 1}));
    FAIL("expected zero_row");
  } catch (const Error& e) {
    CHECK(e.code() == "zero_row");
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
}

TEST_CASE("cosine of normalized rows stays within [-1, 1] up to 1e-6") {
  std::mt19937_64 gen(3);
  const auto n = l2_normalize(random_matrix(gen, 40, 24));
  for (std::size_t a = 0; a < n.rows(); ++a) {
    for (std::size_t b = 0; b < n.rows(); ++b) {
      const double c = testing::reference_dot(n.row(a).data(), n.row(b).data(), n.dim());
      CHECK(c >= -1.0 - 1e-6);
      CHECK(c <= 1.0 + 1e-6);
    }
  }
}

TEST_CASE("image equal to a concept ranks that concept first with similarity 1") {
  std::mt19937_64 gen(1);
  const auto concepts = l2_normalize(random_matrix(gen, 6, 5));
  const auto vocab = make_vocab(concepts);
  const EmbeddingMatrix image(1, 5, std::vector<float>(concepts.row(4).begin(), concepts.row(4).end()));
  const auto a = topk_concepts(image, vocab, 3);
  REQUIRE(a.size() == 1);
  CHECK(a[0].concepts[0].concept_index == 4);
  CHECK(a[0].concepts[0].similarity == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("k = M yields a permutation of all concepts") {
  std::mt19937_64 gen(2);
  const auto vocab = make_vocab(l2_normalize(random_matrix(gen, 9, 4)));
  const auto images = l2_normalize(random_matrix(gen, 3, 4));
  for (const auto& a : topk_concepts(images, vocab, 9)) {
    std::set<std::uint32_t> seen;
    for (const auto& sc : a.concepts) seen.insert(sc.concept_index);
    CHECK(seen.size() == 9);
    CHECK(*seen.rbegin() == 8);
  }
}

TEST_CASE("5 images x 4 concepts in 3 dims, k=2, equals scan-and-sort") {
  std::mt19937_64 gen(42);
  const auto images = l2_normalize(random_matrix(gen, 5, 3));
  const auto concepts = l2_normalize(random_matrix(gen, 4, 3));
  const auto vocab = make_vocab(concepts);
  const std::vector<float> cdata(concepts.data().begin(), concepts.data().end());
  const auto got = topk_concepts(images, vocab, 2);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto want = testing::scan_and_sort_topk(images.row(i).data(), cdata, 4, 3, 2);
    CHECK(got[i].sample_index == i);
    for (std::size_t r = 0; r < 2; ++r) {
      CHECK(got[i].concepts[r].concept_index == want[r].index);
      CHECK(got[i].concepts[r].similarity == std::clamp(want[r].score, -1.0, 1.0));
    }
  }
}

TEST_CASE("equal similarities resolve to the lower concept index") {
  // Concepts 1 and 3 are identical, and so are 0 and 2.
  const EmbeddingMatrix concepts(4, 2, {0, 1, 1, 0, 0, 1, 1, 0});
  const auto vocab = make_vocab(concepts);
  const EmbeddingMatrix image(1, 2, {1, 0});
  const auto a = topk_concepts(image, vocab, 4);
  std::vector<std::uint32_t> order;
  for (const auto& sc : a[0].concepts) order.push_back(sc.concept_index);
  CHECK(order == std::vector<std::uint32_t>{1, 3, 0, 2});
}

TEST_CASE("output is independent of the worker count and non-increasing") {
  std::mt19937_64 gen(17);
  const auto vocab = make_vocab(l2_normalize(random_matrix(gen, 50, 20)));
  const auto images = l2_normalize(random_matrix(gen, 200, 20));
  const auto one = topk_concepts(images, vocab, 7, 1);
  const auto many = topk_concepts(images, vocab, 7, 8);
  CHECK(one == many);
  for (const auto& a : one) {
    CHECK(a.k() == 7);
    for (std::size_t r = 1; r < a.k(); ++r) CHECK(a.concepts[r - 1].similarity >= a.concepts[r].similarity);
  }
}

TEST_CASE("unnormalized inputs are normalized before ranking") {
  std::mt19937_64 gen(23);
  const auto concepts = random_matrix(gen, 12, 6);
  const auto images = random_matrix(gen, 10, 6);
  const auto raw = topk_concepts(images, make_vocab(concepts), 4);
  const auto pre = topk_concepts(l2_normalize(images), make_vocab(l2_normalize(concepts)), 4);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    for (std::size_t r = 0; r < 4; ++r) {
      CHECK(raw[i].concepts[r].concept_index == pre[i].concepts[r].concept_index);
      CHECK(std::abs(raw[i].concepts[r].similarity) <= 1.0);
    }
  }
}

TEST_CASE("topk validates dimensions and k") {
  const auto vocab = make_vocab(EmbeddingMatrix(3, 2, {1, 0, 0, 1, 1, 1}));
  CHECK_THROWS_WITH_AS(topk_concepts(EmbeddingMatrix(1, 3, {1, 0, 0}), vocab, 1), doctest::Contains("dim"), Error);
  CHECK_THROWS_AS(topk_concepts(EmbeddingMatrix(1, 2, {1, 0}), vocab, 0), Error);
  CHECK_THROWS_AS(topk_concepts(EmbeddingMatrix(1, 2, {1, 0}), vocab, 4), Error);
}

TEST_CASE("vocabulary trims names and rejects duplicates") {
  const ConceptVocabulary v({" dog ", "cat\t"}, EmbeddingMatrix(2, 1, {1, 1}));
  CHECK(v.name(0) == "dog");
  CHECK(v.name(1) == "cat");
  CHECK_THROWS_AS(ConceptVocabulary({"dog", " dog"}, EmbeddingMatrix(2, 1, {1, 1})), Error);
  CHECK_THROWS_AS(ConceptVocabulary({"dog"}, EmbeddingMatrix(2, 1, {1, 1})), Error);
}

TEST_CASE("pseudo-caption joins names in rank order") {
  const ConceptVocabulary v({"animal", "cat", "dog"}, EmbeddingMatrix(3, 1, {1, 1, 1}));
  ConceptAssignment a{0, {{2, 0.9}, {0, 0.5}}};
  CHECK(build_pseudo_caption(a, v) == "dog, animal");
  CHECK(build_pseudo_caption({0, {{1, 0.3}}}, v) == "cat");
  CHECK_THROWS_AS(build_pseudo_caption({0, {{3, 0.3}}}, v), Error);
}

TEST_CASE("pseudo-caption splits back into the rank-ordered names") {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + gen() % 20;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < m; ++i) names.push_back("concept " + std::to_string(gen() % 1000) + "_" + std::to_string(i));
    const ConceptVocabulary v(names, EmbeddingMatrix(m, 1, std::vector<float>(m, 1.f)));
    std::vector<std::uint32_t> order(m);
    std::iota(order.begin(), order.end(), 0u);
    std::shuffle(order.begin(), order.end(), gen);
    const std::size_t k = 1 + gen() % m;
    ConceptAssignment a;
    for (std::size_t r = 0; r < k; ++r) a.concepts.push_back({order[r], 1.0 - 0.01 * r});
    const auto caption = build_pseudo_caption(a, v);
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (auto pos = caption.find(", "); pos != std::string::npos; pos = caption.find(", ", start)) {
      parts.push_back(caption.substr(start, pos - start));
      start = pos + 2;
    }
    parts.push_back(caption.substr(start));
    REQUIRE(parts.size() == k);
    for (std::size_t r = 0; r < k; ++r) CHECK(parts[r] == v.name(order[r]));
  }
}

TEST_CASE("assignment JSONL and vocabulary TSV round-trip") {
  const auto dir = std::filesystem::temp_directory_path() / "balpack_concepts_test";
  std::filesystem::create_directories(dir);
  std::vector<ConceptAssignment> as{{0, {{3, 0.25}, {1, -0.1}}}, {7, {{0, 1.0}}}};
  write_assignments(as, dir / "a.jsonl");
  CHECK(read_assignments(dir / "a.jsonl") == as);

  store_vocabulary_names({"alpha", "beta"}, dir / "v.tsv");
  store_embeddings(EmbeddingMatrix(2, 2, {1, 0, 0, 1}), dir / "v.emb");
  const auto vocab = load_vocabulary(dir / "v.tsv", dir / "v.emb");
  CHECK(vocab.size() == 2);
  CHECK(vocab.name(1) == "beta");
  std::filesystem::remove_all(dir);
}
