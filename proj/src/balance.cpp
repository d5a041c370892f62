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

#include "balpack/balance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "balpack/error.hpp"
#include "balpack/jsonl.hpp"
#include "balpack/parallel.hpp"
#include "balpack/rng.hpp"

namespace balpack {

namespace {

constexpr std::uint64_t kStreamWithoutReplacement = 1;
constexpr std::uint64_t kStreamWithReplacement = 2;

void check_index(std::uint32_t c, std::size_t vocab_size, std::uint64_t sample) {
  if (c >= vocab_size) {
    throw Error("index_out_of_range", "sample " + std::to_string(sample) + ": concept " + std::to_string(c) +
                                          " >= vocabulary size " + std::to_string(vocab_size));
  }
}

}  // namespace

ConceptFrequencyTable concept_frequencies(std::span<const ConceptAssignment> assignments,
                                          std::size_t vocab_size) {
  ConceptFrequencyTable t;
  t.counts.assign(vocab_size, 0);
  t.total_samples = assignments.size();
  for (const auto& a : assignments) {
    for (const auto& sc : a.concepts) {
      check_index(sc.concept_index, vocab_size, a.sample_index);
      ++t.counts[sc.concept_index];
    }
  }
  return t;
}

WeightMode parse_weight_mode(const std::string& s) {
  if (s == "mean") return WeightMode::mean;
  if (s == "sum") return WeightMode::sum;
  throw Error("invalid_argument", "unknown weight mode \"" + s + "\" (expected mean|sum)");
}

const char* weight_mode_name(WeightMode mode) noexcept {
  return mode == WeightMode::mean ? "mean" : "sum";
}

std::vector<double> image_weights(std::span<const ConceptAssignment> assignments,
                                  const ConceptFrequencyTable& freqs, WeightMode mode) {
  std::vector<double> w(assignments.size());
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    const auto& a = assignments[i];
    if (a.concepts.empty()) throw Error("empty_assignment", "sample " + std::to_string(a.sample_index) + " has no concepts");
    double raw = 0.0;
    for (const auto& sc : a.concepts) {
      check_index(sc.concept_index, freqs.counts.size(), a.sample_index);
      const auto f = freqs.counts[sc.concept_index];
      if (f == 0) {
        throw Error("zero_frequency", "sample " + std::to_string(a.sample_index) + " references concept " +
                                          std::to_string(sc.concept_index) + " with zero frequency");
      }
      raw += 1.0 / static_cast<double>(f);
    }
    if (mode == WeightMode::mean) raw /= static_cast<double>(a.concepts.size());
    w[i] = raw;
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;
  return w;
}

std::vector<std::uint64_t> sample_balanced(std::span<const double> weights, std::size_t n,
                                           std::uint64_t seed, bool replacement, unsigned threads) {
  const std::size_t N = weights.size();
  double total = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw Error("invalid_weights", "weight at position " + std::to_string(i) + " is negative or non-finite");
    }
    total += weights[i];
  }
  if (N == 0 || std::abs(total - 1.0) > kWeightSumTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "weights must sum to 1 within " << kWeightSumTolerance << " (sum=" << total << ")";
    throw Error("invalid_weights", msg.str());
  }
  if (!replacement && n > N) {
    throw Error("n_exceeds_population", "n=" + std::to_string(n) + " exceeds population size N=" +
                                            std::to_string(N) + " without replacement");
  }

  std::vector<std::uint64_t> out;
  if (n == 0) return out;

  if (replacement) {
    std::vector<double> cdf(N);
    std::partial_sum(weights.begin(), weights.end(), cdf.begin());
    const double top = cdf.back();
    const CounterRng rng(seed, kStreamWithReplacement);
    out.resize(n);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t j = begin; j < end; ++j) {
        const double u = CounterRng::to_unit(rng.at(j)) * top;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        // u < top always, so `it` is valid; skip to the last positive weight
        // only if rounding pushed past the end.
        std::size_t pos = it == cdf.end() ? N - 1 : static_cast<std::size_t>(it - cdf.begin());
        while (weights[pos] == 0.0 && pos > 0) --pos;
        out[j] = pos;
      }
    });
    return out;
  }

  struct Keyed {
    double key;
    std::uint64_t pos;
  };
  std::vector<Keyed> keys(N);
  const CounterRng rng(seed, kStreamWithoutReplacement);
  parallel_for(N, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double e = -std::log(CounterRng::to_open_unit(rng.at(i)));
      keys[i] = {weights[i] > 0.0 ? e / weights[i] : std::numeric_limits<double>::infinity(), i};
    }
  });
  const auto before = [](const Keyed& a, const Keyed& b) {
    return a.key != b.key ? a.key < b.key : a.pos < b.pos;
  };
  std::nth_element(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n - 1), keys.end(), before);
  std::sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n), before);
  out.reserve(n);
  for (std::size_t j = 0; j < n; ++j) out.push_back(keys[j].pos);
  return out;
}

namespace {

BalanceReport report_from_counts(std::vector<std::uint64_t> counts, std::size_t num_samples) {
  BalanceReport r;
  r.vocab_size = counts.size();
  r.num_samples = num_samples;
  r.total_occurrences = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  if (num_samples == 0 || r.total_occurrences == 0) throw Error("empty_subset", "balance report over an empty subset");
  const double total = static_cast<double>(r.total_occurrences);
  std::size_t live = 0;
  for (auto c : counts) {
    if (c == 0) continue;
    ++live;
    const double p = static_cast<double>(c) / total;
    r.entropy_bits -= p * std::log2(p);
  }
  r.entropy_bits = std::max(0.0, r.entropy_bits);
  r.coverage = static_cast<double>(live) / static_cast<double>(counts.size());

  std::sort(counts.begin(), counts.end());
  const double m = static_cast<double>(counts.size());
  double weighted = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    weighted += (2.0 * static_cast<double>(i + 1) - m - 1.0) * static_cast<double>(counts[i]);
  }
  r.gini = std::clamp(weighted / (m * total), 0.0, 1.0);
  r.sorted_counts.assign(counts.rbegin(), counts.rend());
  return r;
}

}  // namespace

BalanceReport balance_report(std::span<const ConceptAssignment> assignments, std::size_t vocab_size) {
  return report_from_counts(concept_frequencies(assignments, vocab_size).counts, assignments.size());
}

BalanceReport balance_report(std::span<const ConceptAssignment> assignments,
                             std::span<const std::uint64_t> subset, std::size_t vocab_size) {
  std::vector<std::uint64_t> counts(vocab_size, 0);
  for (auto p : subset) {
    if (p >= assignments.size()) {
      throw Error("index_out_of_range", "subset position " + std::to_string(p) + " >= " + std::to_string(assignments.size()));
    }
    const auto& a = assignments[p];
    for (const auto& sc : a.concepts) {
      check_index(sc.concept_index, vocab_size, a.sample_index);
      ++counts[sc.concept_index];
    }
  }
  return report_from_counts(std::move(counts), subset.size());
}

nlohmann::json to_json(const BalanceReport& r) {
  return {{"vocab_size", r.vocab_size},
          {"num_samples", r.num_samples},
          {"total_occurrences", r.total_occurrences},
          {"entropy_bits", r.entropy_bits},
          {"max_entropy_bits", std::log2(static_cast<double>(r.vocab_size))},
          {"gini", r.gini},
          {"coverage", r.coverage},
          {"sorted_counts", r.sorted_counts}};
}

void write_rank_csv(const BalanceReport& report, const std::filesystem::path& path) {
  auto out = jsonl::open_output(path);
  out << "rank,count\n";
  for (std::size_t i = 0; i < report.sorted_counts.size(); ++i) {
    out << (i + 1) << ',' << report.sorted_counts[i] << '\n';
  }
}

void write_weights(std::span<const WeightedSample> weights, const std::filesystem::path& path) {
  auto out = jsonl::open_output(path);
  for (const auto& w : weights) jsonl::write_line(out, {{"i", w.sample_index}, {"w", w.weight}});
}

std::vector<WeightedSample> read_weights(const std::filesystem::path& path) {
  std::vector<WeightedSample> out;
  jsonl::for_each(path, [&](const jsonl::Json& j, std::size_t line) {
    const auto i = j.find("i");
    const auto w = j.find("w");
    if (i == j.end() || !i->is_number_unsigned() || w == j.end() || !w->is_number()) {
      throw Error("malformed_record", path.string() + ":" + std::to_string(line) + ": expected {\"i\": uint, \"w\": number}");
    }
    out.push_back({i->get<std::uint64_t>(), w->get<double>()});
  });
  return out;
}

void write_subset(const SubsetHeader& header, std::span<const std::uint64_t> indices,
                  const std::filesystem::path& path) {
  auto out = jsonl::open_output(path);
  out << "# seed=" << header.seed << " n=" << header.n << " replacement=" << (header.replacement ? "true" : "false")
      << '\n';
  for (auto i : indices) out << i << '\n';
}

std::vector<std::uint64_t> read_subset(const std::filesystem::path& path, SubsetHeader* header) {
  auto in = jsonl::open_input(path);
  std::vector<std::uint64_t> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (header != nullptr) {
        std::istringstream fields(line.substr(1));
        std::string kv;
        while (fields >> kv) {
          const auto eq = kv.find('=');
          if (eq == std::string::npos) continue;
          const auto key = kv.substr(0, eq);
          const auto value = kv.substr(eq + 1);
          if (key == "seed") header->seed = std::stoull(value);
          else if (key == "n") header->n = std::stoull(value);
          else if (key == "replacement") header->replacement = value == "true";
        }
      }
      continue;
    }
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(line, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != line.size() || line[0] == '-') {
      throw Error("malformed_record", path.string() + ":" + std::to_string(line_no) + ": expected an index");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace balpack
