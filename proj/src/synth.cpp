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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "balpack/error.hpp"
#include "balpack/manifest.hpp"
#include "balpack/parallel.hpp"
#include "balpack/rng.hpp"

namespace balpack {

namespace {

// Substream ids; record block b uses (b << 4) | purpose.
constexpr std::uint64_t kRecordStream = 1;
constexpr std::uint64_t kImageEmbeddingStream = 2;
constexpr std::uint64_t kConceptEmbeddingStream = 3;
constexpr int kMaxLengthRejections = 10000;

std::size_t draw_from_cdf(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u * cdf.back());
  return it == cdf.end() ? cdf.size() - 1 : static_cast<std::size_t>(it - cdf.begin());
}

std::string sample_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%08zu", i);
  return buf;
}

}  // namespace

std::vector<double> zipf_probabilities(std::size_t m, double s) {
  std::vector<double> p(m);
  for (std::size_t r = 0; r < m; ++r) p[r] = std::pow(static_cast<double>(r + 1), -s);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= total;
  return p;
}

void SynthConfig::validate() const {
  const auto fail = [](const std::string& what) { throw Error("invalid_config", what); };
  if (n_samples < 1) fail("n_samples must be >= 1");
  if (vocab_size < 1) fail("vocab_size must be >= 1");
  if (k < 1 || k > vocab_size) fail("k must be in [1, vocab_size]");
  if (!(zipf_exponent >= 0.0) || !std::isfinite(zipf_exponent)) fail("zipf exponent must be >= 0");
  if (!(length_sigma > 0.0) || !std::isfinite(length_mu)) fail("length distribution needs sigma > 0 and finite mu");
  if (length_min < 1 || length_min > length_max) fail("length bounds need 1 <= min <= max");
  if (!(image_fraction >= 0.0 && image_fraction <= 1.0)) fail("image_fraction must be in [0, 1]");
  if (!(embedding_noise >= 0.0)) fail("embedding noise must be >= 0");
  if (sources.empty()) fail("source mixture is empty");
  double total = 0.0;
  for (const auto& [tag, p] : sources) {
    if (!(p >= 0.0)) fail("source probability for \"" + tag + "\" is negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) fail("source probabilities must sum to 1");
}

nlohmann::json to_json(const SynthConfig& c) {
  return {{"n_samples", c.n_samples},
          {"zipf_exponent", c.zipf_exponent},
          {"vocab_size", c.vocab_size},
          {"k", c.k},
          {"length_mu", c.length_mu},
          {"length_sigma", c.length_sigma},
          {"length_min", c.length_min},
          {"length_max", c.length_max},
          {"image_fraction", c.image_fraction},
          {"sources", c.sources},
          {"embedding_dim", c.embedding_dim},
          {"embedding_noise", c.embedding_noise},
          {"seed", c.seed},
          {"rng", CounterRng::kName}};
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig c;
  try {
    c.n_samples = j.at("n_samples").get<std::size_t>();
    c.zipf_exponent = j.at("zipf_exponent").get<double>();
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.k = j.at("k").get<std::size_t>();
    c.length_mu = j.at("length_mu").get<double>();
    c.length_sigma = j.at("length_sigma").get<double>();
    c.length_min = j.at("length_min").get<std::uint64_t>();
    c.length_max = j.at("length_max").get<std::uint64_t>();
    c.image_fraction = j.at("image_fraction").get<double>();
    c.sources = j.at("sources").get<std::map<std::string, double>>();
    c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    c.embedding_noise = j.at("embedding_noise").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid_config", std::string("synth config: ") + e.what());
  }
  return c;
}

SynthCorpus synth_corpus(const SynthConfig& cfg, unsigned threads) {
  cfg.validate();
  const std::size_t n = cfg.n_samples;
  const std::size_t m = cfg.vocab_size;

  std::vector<double> zipf_cdf = zipf_probabilities(m, cfg.zipf_exponent);
  std::partial_sum(zipf_cdf.begin(), zipf_cdf.end(), zipf_cdf.begin());
  std::vector<std::string> source_tags;
  std::vector<double> source_cdf;
  for (const auto& [tag, p] : cfg.sources) {
    source_tags.push_back(tag);
    source_cdf.push_back((source_cdf.empty() ? 0.0 : source_cdf.back()) + p);
  }

  SynthCorpus corpus;
  corpus.records.resize(n);
  corpus.assignments.resize(n);
  corpus.concept_names.reserve(m);
  for (std::size_t c = 0; c < m; ++c) corpus.concept_names.push_back("concept_" + std::to_string(c));

  std::vector<float> concept_data;
  const std::size_t dim = cfg.embedding_dim;
  if (dim > 0) {
    CounterRng rng(cfg.seed, kConceptEmbeddingStream);
    concept_data.resize(m * dim);
    for (std::size_t c = 0; c < m; ++c) {
      double norm = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double x = rng.normal();
        concept_data[c * dim + d] = static_cast<float>(x);
        norm += x * x;
      }
      norm = std::sqrt(norm);
      for (std::size_t d = 0; d < dim; ++d) {
        concept_data[c * dim + d] = static_cast<float>(concept_data[c * dim + d] / norm);
      }
    }
  }
  std::vector<float> image_data(dim > 0 ? n * dim : 0);

  const std::size_t blocks = (n + kSynthBlock - 1) / kSynthBlock;
  parallel_for(blocks, threads, [&](std::size_t block_begin, std::size_t block_end) {
    std::vector<double> mix(dim);
    for (std::size_t b = block_begin; b < block_end; ++b) {
      CounterRng rng(cfg.seed, (static_cast<std::uint64_t>(b) << 4) | kRecordStream);
      CounterRng emb_rng(cfg.seed, (static_cast<std::uint64_t>(b) << 4) | kImageEmbeddingStream);
      const std::size_t end = std::min(n, (b + 1) * kSynthBlock);
      for (std::size_t i = b * kSynthBlock; i < end; ++i) {
        std::uint64_t length = 0;
        for (int attempt = 0;; ++attempt) {
          if (attempt == kMaxLengthRejections) {
            throw Error("invalid_config", "length bounds reject almost all of the log-normal mass");
          }
          const double x = std::exp(cfg.length_mu + cfg.length_sigma * rng.normal());
          if (!(x < 1e18)) continue;
          const auto rounded = static_cast<std::uint64_t>(std::llround(x));
          if (rounded >= cfg.length_min && rounded <= cfg.length_max) {
            length = rounded;
            break;
          }
        }

        SampleRecord& rec = corpus.records[i];
        rec.id = sample_id(i);
        rec.source = source_tags[draw_from_cdf(source_cdf, rng.uniform())];
        const bool has_image = rng.uniform() < cfg.image_fraction;
        const double visual_share = 0.3 + 0.6 * rng.uniform();
        if (has_image) {
          const auto budget = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(static_cast<double>(length) * visual_share));
          const auto cols = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::sqrt(static_cast<double>(budget))));
          const auto rows = std::max<std::uint64_t>(1, budget / cols);
          const std::uint64_t tile = std::uint64_t{rec.patch} * rec.merge;
          rec.image = ImageSize{static_cast<std::uint32_t>(cols * tile), static_cast<std::uint32_t>(rows * tile)};
          rec.text_tokens = length - cols * rows;
        } else {
          rec.text_tokens = length;
        }

        // k distinct concepts: sequential Zipf draws, rejecting repeats.
        ConceptAssignment& a = corpus.assignments[i];
        a.sample_index = i;
        a.concepts.clear();
        while (a.concepts.size() < cfg.k) {
          const auto c = static_cast<std::uint32_t>(draw_from_cdf(zipf_cdf, rng.uniform()));
          const bool repeat = std::any_of(a.concepts.begin(), a.concepts.end(),
                                          [c](const ScoredConcept& sc) { return sc.concept_index == c; });
          if (!repeat) a.concepts.push_back({c, 0.0});
        }

        if (dim > 0) {
          // Image embedding: rank-weighted mix of its concepts plus noise.
          std::fill(mix.begin(), mix.end(), 0.0);
          for (std::size_t r = 0; r < a.concepts.size(); ++r) {
            const double w = 1.0 / static_cast<double>(r + 1);
            const float* row = concept_data.data() + a.concepts[r].concept_index * dim;
            for (std::size_t d = 0; d < dim; ++d) mix[d] += w * row[d];
          }
          for (std::size_t d = 0; d < dim; ++d) {
            image_data[i * dim + d] = static_cast<float>(mix[d] + cfg.embedding_noise * emb_rng.normal());
          }
        }
      }
    }
  });

  if (dim > 0) {
    corpus.concept_embeddings.emplace(m, dim, std::move(concept_data));
    corpus.image_embeddings.emplace(n, dim, std::move(image_data));
  }
  return corpus;
}

}  // namespace balpack
