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

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>

#include "balpack/balance.hpp"
#include "balpack/concepts.hpp"
#include "balpack/error.hpp"
#include "balpack/jsonl.hpp"
#include "balpack/kernels.hpp"
#include "balpack/manifest.hpp"
#include "balpack/packing.hpp"
#include "balpack/rng.hpp"

namespace balpack::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

constexpr const char* kToolName = "balpack";
constexpr const char* kEchoVersion = "1";

class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.code(), cause.what()), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

template <typename Fn>
auto run_stage(const std::string& name, std::ostream& out, Fn&& fn) {
  out << "[" << name << "] ...\n";
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  }
}

struct SynthArgs {
  fs::path output;
  std::size_t n = 100000;
  std::uint64_t seed = 0;
  double zipf = 1.5;
  std::size_t vocab_size = 1000;
  std::size_t k = 5;
  double length_median = 700.0;
  double length_sigma = 0.35;
  std::uint64_t min_length = 32;
  std::uint64_t max_length = 8192;
  double image_fraction = 0.9;
  std::string sources = "caption_free:0.2,interleaved:0.3,web:0.5";
  std::size_t dim = 0;
  double noise = 0.1;
};

struct PackArgs {
  std::uint64_t capacity = kDefaultCapacity;
  std::string strategy = "bucket";
  std::size_t buckets = 6;
  double min_utilization = 0.9;
  std::size_t max_samples_per_pack = 0;
  std::size_t max_sources_per_pack = 0;
  std::size_t shards = 8;
  std::uint64_t seed = 0;

  PackingConfig config() const {
    PackingConfig c;
    c.capacity = capacity;
    c.strategy = parse_strategy(strategy);
    c.num_buckets = buckets;
    c.min_utilization = min_utilization;
    c.max_samples_per_pack = max_samples_per_pack;
    c.max_sources_per_pack = max_sources_per_pack;
    c.shards = shards;
    c.seed = seed;
    c.validate();
    return c;
  }
};

std::map<std::string, double> parse_sources(const std::string& text) {
  std::map<std::string, double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = std::min(text.find(',', start), text.size());
    const auto entry = text.substr(start, comma - start);
    const auto colon = entry.rfind(':');
    if (entry.empty() || colon == std::string::npos || colon == 0) {
      throw Error("invalid_argument", "--sources expects tag:prob[,tag:prob...], got \"" + text + "\"");
    }
    try {
      out[entry.substr(0, colon)] = std::stod(entry.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error("invalid_argument", "bad probability in --sources entry \"" + entry + "\"");
    }
    start = comma + 1;
  }
  return out;
}

SynthConfig synth_config(const SynthArgs& a) {
  SynthConfig c;
  c.n_samples = a.n;
  c.seed = a.seed;
  c.zipf_exponent = a.zipf;
  c.vocab_size = a.vocab_size;
  c.k = a.k;
  if (!(a.length_median > 0.0)) throw Error("invalid_argument", "--length-median must be > 0");
  c.length_mu = std::log(a.length_median);
  c.length_sigma = a.length_sigma;
  c.length_min = a.min_length;
  c.length_max = a.max_length;
  c.image_fraction = a.image_fraction;
  c.sources = parse_sources(a.sources);
  c.embedding_dim = a.dim;
  c.embedding_noise = a.noise;
  c.validate();
  return c;
}

void add_synth_options(CLI::App* sub, SynthArgs& a) {
  sub->add_option("--n", a.n, "Number of synthetic samples");
  sub->add_option("--zipf", a.zipf, "Zipf exponent of the concept marginal");
  sub->add_option("--vocab-size", a.vocab_size, "Concept vocabulary size");
  sub->add_option("--k", a.k, "Concepts per sample");
  sub->add_option("--length-median", a.length_median, "Median of the log-normal length distribution (e^mu)");
  sub->add_option("--length-sigma", a.length_sigma, "Sigma of the log-normal length distribution");
  sub->add_option("--min-length", a.min_length, "Lower truncation bound for lengths");
  sub->add_option("--max-length", a.max_length, "Upper truncation bound for lengths");
  sub->add_option("--image-fraction", a.image_fraction, "Fraction of samples carrying an image");
  sub->add_option("--sources", a.sources, "Source mixture tag:prob[,tag:prob...]");
  sub->add_option("--dim", a.dim, "Also synthesize embeddings of this dimension (0 = off)");
  sub->add_option("--noise", a.noise, "Gaussian noise on synthesized image embeddings");
}

void add_pack_options(CLI::App* sub, PackArgs& a) {
  sub->add_option("--capacity", a.capacity, "Tokens per packed sequence");
  sub->add_option("--strategy", a.strategy, "Packing strategy")->check(CLI::IsMember({"ffd", "bucket"}));
  sub->add_option("--buckets", a.buckets, "Number of geometric length buckets");
  sub->add_option("--min-utilization", a.min_utilization, "Success threshold on pack utilization");
  sub->add_option("--max-samples-per-pack", a.max_samples_per_pack, "Cap on items per pack (0 = none)");
  sub->add_option("--max-sources-per-pack", a.max_sources_per_pack, "Cap on distinct sources per pack (0 = none)");
  sub->add_option("--shards", a.shards, "Hash shards for the bucket strategy");
}

// Every option except help and --threads, with its effective value. Flags
// become booleans, everything else the exact string that was parsed (or the
// captured default).
OrderedJson collect_args(const CLI::App& sub) {
  OrderedJson args = OrderedJson::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help" || name == "threads") continue;
    if (opt->get_expected_max() == 0) {
      args[name] = opt->count() > 0;
      continue;
    }
    std::string value;
    if (opt->count() > 0) {
      const auto& results = opt->results();
      for (std::size_t i = 0; i < results.size(); ++i) value += (i ? "," : "") + results[i];
    } else {
      value = opt->get_default_str();
    }
    if (opt->count() == 0 && value.empty()) continue;
    args[name] = value;
  }
  return args;
}

void write_echo(const fs::path& path, const CLI::App& sub) {
  OrderedJson echo;
  echo["tool"] = kToolName;
  echo["echo_version"] = kEchoVersion;
  echo["subcommand"] = sub.get_name();
  echo["rng"] = CounterRng::kName;
  echo["args"] = collect_args(sub);
  auto out = jsonl::open_output(path);
  out << echo.dump(2) << '\n';
}

fs::path echo_path_for_file(const fs::path& output) { return fs::path(output.string() + ".config.json"); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("io_error", "cannot create directory " + dir.string() + ": " + ec.message());
}

void write_synth_outputs(const SynthCorpus& corpus, const SynthConfig& cfg, const fs::path& dir) {
  ensure_dir(dir);
  emit_manifest(corpus.records, dir / "manifest.jsonl");
  write_assignments(corpus.assignments, dir / "assignments.jsonl");
  store_vocabulary_names(corpus.concept_names, dir / "concepts.tsv");
  if (corpus.image_embeddings) store_embeddings(*corpus.image_embeddings, dir / "images.emb");
  if (corpus.concept_embeddings) store_embeddings(*corpus.concept_embeddings, dir / "concepts.emb");
  jsonl::write_json_file(dir / "synth.json", to_json(cfg));
}

std::vector<WeightedSample> weigh(const std::vector<ConceptAssignment>& assignments, std::size_t vocab_size,
                                  WeightMode mode) {
  const auto freqs = concept_frequencies(assignments, vocab_size);
  const auto w = image_weights(assignments, freqs, mode);
  std::vector<WeightedSample> out(assignments.size());
  for (std::size_t i = 0; i < assignments.size(); ++i) out[i] = {assignments[i].sample_index, w[i]};
  return out;
}

std::vector<std::uint64_t> sample_indices(const std::vector<WeightedSample>& weighted, std::size_t n,
                                          std::uint64_t seed, bool replacement, unsigned threads) {
  std::vector<double> w(weighted.size());
  for (std::size_t i = 0; i < weighted.size(); ++i) w[i] = weighted[i].weight;
  auto positions = sample_balanced(w, n, seed, replacement, threads);
  for (auto& p : positions) p = weighted[p].sample_index;
  return positions;
}

// Manifest records selected by sample index. Repeated draws get "#<n>"
// suffixes so every packed item keeps a unique id.
std::vector<PackItem> select_items(const std::vector<SampleRecord>& records,
                                   const std::vector<std::uint64_t>& subset) {
  std::vector<PackItem> items;
  items.reserve(subset.size());
  std::map<std::uint64_t, std::size_t> seen;
  for (auto idx : subset) {
    if (idx >= records.size()) {
      throw Error("index_out_of_range", "subset index " + std::to_string(idx) + " >= manifest size " +
                                            std::to_string(records.size()));
    }
    const auto& r = records[idx];
    const auto occurrence = seen[idx]++;
    items.push_back({occurrence == 0 ? r.id : r.id + "#" + std::to_string(occurrence), estimate_tokens(r), r.source});
  }
  return items;
}

Json stats_document(const PackingStats& stats, const PackingConfig& config) {
  Json j = to_json(stats);
  j["config"] = to_json(config);
  j["seed"] = config.seed;
  return j;
}

std::vector<std::uint64_t> positions_of(const std::vector<ConceptAssignment>& assignments,
                                        const std::vector<std::uint64_t>& sample_indices) {
  std::map<std::uint64_t, std::uint64_t> position;
  for (std::size_t p = 0; p < assignments.size(); ++p) position.emplace(assignments[p].sample_index, p);
  std::vector<std::uint64_t> out;
  out.reserve(sample_indices.size());
  for (auto i : sample_indices) {
    const auto it = position.find(i);
    if (it == position.end()) throw Error("index_out_of_range", "subset index " + std::to_string(i) + " has no assignment");
    out.push_back(it->second);
  }
  return out;
}

void print_error(std::ostream& err, const std::string& code, const std::string& message,
                 const std::string& stage = {}) {
  OrderedJson e;
  e["code"] = code;
  e["message"] = message;
  if (!stage.empty()) e["stage"] = stage;
  err << OrderedJson{{"error", e}}.dump() << '\n';
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const StageError& e) {
    print_error(err, e.code(), e.what(), e.stage());
    return 1;
  } catch (const Error& e) {
    print_error(err, e.code(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return 1;
  }
}

namespace {

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Concept-balanced sampling and offline sequence packing for multimodal corpora", kToolName};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  unsigned threads = 0;

  // synth
  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic Zipf-concept corpus");
  synth_cmd->add_option("--output", synth.output, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "Seed");
  add_synth_options(synth_cmd, synth);
  synth_cmd->add_option("--threads", threads, "Worker threads (0 = all)");

  // assign
  fs::path assign_input, assign_concepts, assign_vocab, assign_output, assign_captions;
  std::size_t assign_k = 5;
  auto* assign_cmd = app.add_subcommand("assign", "Top-k concept assignment from embeddings");
  assign_cmd->add_option("--input", assign_input, "Image embeddings (EMB1)")->required();
  assign_cmd->add_option("--concepts", assign_concepts, "Concept embeddings (EMB1)")->required();
  assign_cmd->add_option("--vocab", assign_vocab, "Concept names TSV")->required();
  assign_cmd->add_option("--k", assign_k, "Concepts per image");
  assign_cmd->add_option("--output", assign_output, "Assignments JSONL")->required();
  assign_cmd->add_option("--captions", assign_captions, "Optional pseudo-caption JSONL");
  assign_cmd->add_option("--threads", threads, "Worker threads (0 = all)");

  // weigh
  fs::path weigh_input, weigh_output;
  std::size_t weigh_vocab = 0;
  std::string weigh_mode = "mean";
  auto* weigh_cmd = app.add_subcommand("weigh", "Inverse-frequency image weights");
  weigh_cmd->add_option("--input", weigh_input, "Assignments JSONL")->required();
  weigh_cmd->add_option("--vocab-size", weigh_vocab, "Concept vocabulary size")->required();
  weigh_cmd->add_option("--mode", weigh_mode, "Weight formula")->check(CLI::IsMember({"mean", "sum"}));
  weigh_cmd->add_option("--output", weigh_output, "Weights JSONL")->required();
  weigh_cmd->add_option("--threads", threads, "Worker threads (0 = all)");

  // sample
  fs::path sample_input, sample_output;
  std::size_t sample_n = 0;
  std::uint64_t sample_seed = 0;
  bool sample_replacement = false;
  auto* sample_cmd = app.add_subcommand("sample", "Weighted sampling of sample indices");
  sample_cmd->add_option("--input", sample_input, "Weights JSONL")->required();
  sample_cmd->add_option("--n", sample_n, "Number of draws")->required();
  sample_cmd->add_option("--seed", sample_seed, "Seed");
  sample_cmd->add_flag("--replacement", sample_replacement, "Sample with replacement");
  sample_cmd->add_option("--output", sample_output, "Subset file")->required();
  sample_cmd->add_option("--threads", threads, "Worker threads (0 = all)");

  // pack
  fs::path pack_input, pack_subset, pack_output;
  PackArgs pack_args;
  auto* pack_cmd = app.add_subcommand("pack", "Pack manifest samples into fixed-capacity sequences");
  pack_cmd->add_option("--input", pack_input, "Manifest JSONL")->required();
  pack_cmd->add_option("--subset", pack_subset, "Optional subset file selecting sample indices");
  pack_cmd->add_option("--seed", pack_args.seed, "Seed for hash sharding");
  add_pack_options(pack_cmd, pack_args);
  pack_cmd->add_option("--output", pack_output, "Plan JSONL")->required();
  pack_cmd->add_option("--threads", threads, "Worker threads (0 = all)");

  // stats
  fs::path stats_input, stats_output;
  double stats_min_util = 0.9;
  auto* stats_cmd = app.add_subcommand("stats", "Recompute packing statistics from a plan");
  stats_cmd->add_option("--input", stats_input, "Plan JSONL")->required();
  stats_cmd->add_option("--min-utilization", stats_min_util, "Success threshold");
  stats_cmd->add_option("--output", stats_output, "Stats JSON")->required();
  stats_cmd->add_option("--threads", threads, "Worker threads (0 = all)");

  // coverage
  fs::path cov_input, cov_subset, cov_output, cov_csv;
  std::size_t cov_vocab = 0;
  auto* cov_cmd = app.add_subcommand("coverage", "Concept balance and coverage report");
  cov_cmd->add_option("--input", cov_input, "Assignments JSONL")->required();
  cov_cmd->add_option("--vocab-size", cov_vocab, "Concept vocabulary size")->required();
  cov_cmd->add_option("--subset", cov_subset, "Optional subset file");
  cov_cmd->add_option("--output", cov_output, "Report JSON")->required();
  cov_cmd->add_option("--csv", cov_csv, "Optional rank,count CSV");
  cov_cmd->add_option("--threads", threads, "Worker threads (0 = all)");

  // pipeline
  SynthArgs pipe_synth;
  PackArgs pipe_pack;
  double pipe_fraction = 0.1;
  bool pipe_replacement = false;
  std::string pipe_mode = "mean";
  pipe_synth.dim = 32;
  auto* pipe_cmd = app.add_subcommand("pipeline", "synth -> assign -> weigh -> sample -> pack -> report");
  pipe_cmd->add_option("--output", pipe_synth.output, "Output directory")->required();
  pipe_cmd->add_option("--seed", pipe_synth.seed, "Seed for every stage");
  add_synth_options(pipe_cmd, pipe_synth);
  pipe_cmd->add_option("--sample-fraction", pipe_fraction, "Fraction of the corpus to sample");
  pipe_cmd->add_flag("--replacement", pipe_replacement, "Sample with replacement");
  pipe_cmd->add_option("--mode", pipe_mode, "Weight formula")->check(CLI::IsMember({"mean", "sum"}));
  add_pack_options(pipe_cmd, pipe_pack);
  pipe_cmd->add_option("--threads", threads, "Worker threads (0 = all)");

  // rerun
  fs::path rerun_config;
  auto* rerun_cmd = app.add_subcommand("rerun", "Re-execute a run from its config echo");
  rerun_cmd->add_option("--config", rerun_config, "Config echo JSON")->required();
  rerun_cmd->add_option("--threads", threads, "Worker threads (0 = all)");

  // kernels
  auto* isa_cmd = app.add_subcommand("kernels", "List available similarity kernel variants");

  std::vector<std::string> argv_storage{kToolName};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error(err, "usage", e.what());
    return 2;
  }

  if (*synth_cmd) {
    const auto cfg = synth_config(synth);
    const auto corpus = run_stage("synth", out, [&] { return synth_corpus(cfg, threads); });
    write_synth_outputs(corpus, cfg, synth.output);
    write_echo(synth.output / "config.json", *synth_cmd);
    out << "synth: " << corpus.records.size() << " records -> " << synth.output.string() << "\n";
    return 0;
  }

  if (*assign_cmd) {
    const auto images = load_embeddings(assign_input);
    const auto vocab = load_vocabulary(assign_vocab, assign_concepts);
    const auto assignments = topk_concepts(images, vocab, assign_k, threads);
    write_assignments(assignments, assign_output);
    if (!assign_captions.empty()) {
      auto cap_out = jsonl::open_output(assign_captions);
      for (const auto& a : assignments) {
        jsonl::write_line(cap_out, {{"i", a.sample_index}, {"caption", build_pseudo_caption(a, vocab)}});
      }
    }
    write_echo(echo_path_for_file(assign_output), *assign_cmd);
    out << "assign: " << assignments.size() << " images, k=" << assign_k << ", kernels="
        << kernels::isa_name(kernels::active_isa()) << "\n";
    return 0;
  }

  if (*weigh_cmd) {
    const auto assignments = read_assignments(weigh_input);
    const auto weights = weigh(assignments, weigh_vocab, parse_weight_mode(weigh_mode));
    write_weights(weights, weigh_output);
    write_echo(echo_path_for_file(weigh_output), *weigh_cmd);
    out << "weigh: " << weights.size() << " weights (" << weigh_mode << ")\n";
    return 0;
  }

  if (*sample_cmd) {
    const auto weighted = read_weights(sample_input);
    const auto subset = sample_indices(weighted, sample_n, sample_seed, sample_replacement, threads);
    write_subset({sample_seed, sample_n, sample_replacement}, subset, sample_output);
    write_echo(echo_path_for_file(sample_output), *sample_cmd);
    out << "sample: " << subset.size() << " of " << weighted.size() << "\n";
    return 0;
  }

  if (*pack_cmd) {
    const auto config = pack_args.config();
    const auto records = ingest_manifest(pack_input);
    std::vector<PackItem> items;
    if (pack_subset.empty()) {
      items = to_pack_items(records);
    } else {
      items = select_items(records, read_subset(pack_subset));
    }
    const auto plan = pack(items, config, threads);
    const auto stats = packing_stats(plan, config.min_utilization);
    const auto doc = stats_document(stats, config);
    emit_plan(plan, pack_output, doc);
    jsonl::write_json_file(fs::path(pack_output.string() + ".stats.json"), doc);
    write_echo(echo_path_for_file(pack_output), *pack_cmd);
    out << "pack: " << stats.num_samples << " samples -> " << stats.num_packs << " packs (ratio "
        << stats.compression_ratio << ", utilization " << stats.utilization << ", overflow "
        << stats.overflow_count << ")\n";
    return 0;
  }

  if (*stats_cmd) {
    if (!(stats_min_util > 0.0 && stats_min_util <= 1.0)) {
      throw Error("invalid_argument", "--min-utilization must be in (0, 1]");
    }
    const auto plan = load_plan(stats_input);
    const auto stats = packing_stats(plan, stats_min_util);
    Json doc = to_json(stats);
    doc["capacity"] = plan.capacity;
    jsonl::write_json_file(stats_output, doc);
    write_echo(echo_path_for_file(stats_output), *stats_cmd);
    out << "stats: " << stats.num_packs << " packs\n";
    return 0;
  }

  if (*cov_cmd) {
    const auto assignments = read_assignments(cov_input);
    BalanceReport report;
    if (cov_subset.empty()) {
      report = balance_report(assignments, cov_vocab);
    } else {
      report = balance_report(assignments, positions_of(assignments, read_subset(cov_subset)), cov_vocab);
    }
    jsonl::write_json_file(cov_output, to_json(report));
    if (!cov_csv.empty()) write_rank_csv(report, cov_csv);
    write_echo(echo_path_for_file(cov_output), *cov_cmd);
    out << "coverage: entropy " << report.entropy_bits << " bits, coverage " << report.coverage << "\n";
    return 0;
  }

  if (*pipe_cmd) {
    // Validate everything before the first stage runs.
    const auto cfg = synth_config(pipe_synth);
    auto pack_config = pipe_pack.config();
    pack_config.seed = pipe_synth.seed;
    const auto mode = parse_weight_mode(pipe_mode);
    if (!(pipe_fraction > 0.0 && pipe_fraction <= 1.0)) {
      throw Error("invalid_argument", "--sample-fraction must be in (0, 1]");
    }
    const auto n_draw = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(pipe_fraction * static_cast<double>(cfg.n_samples))));
    const fs::path dir = pipe_synth.output;

    const auto corpus = run_stage("synth", out, [&] {
      auto c = synth_corpus(cfg, threads);
      write_synth_outputs(c, cfg, dir);
      return c;
    });
    const auto assignments = run_stage("assign", out, [&] {
      if (!corpus.image_embeddings) return corpus.assignments;
      const ConceptVocabulary vocab(corpus.concept_names, *corpus.concept_embeddings);
      auto a = topk_concepts(*corpus.image_embeddings, vocab, cfg.k, threads);
      write_assignments(a, dir / "assignments.topk.jsonl");
      return a;
    });
    const auto weighted = run_stage("weigh", out, [&] {
      auto w = weigh(assignments, cfg.vocab_size, mode);
      write_weights(w, dir / "weights.jsonl");
      return w;
    });
    const auto [balanced, uniform] = run_stage("sample", out, [&] {
      auto b = sample_indices(weighted, n_draw, cfg.seed, pipe_replacement, threads);
      write_subset({cfg.seed, n_draw, pipe_replacement}, b, dir / "subset.txt");
      std::vector<WeightedSample> flat(weighted.size());
      for (std::size_t i = 0; i < flat.size(); ++i) {
        flat[i] = {weighted[i].sample_index, 1.0 / static_cast<double>(flat.size())};
      }
      auto u = sample_indices(flat, n_draw, cfg.seed, pipe_replacement, threads);
      write_subset({cfg.seed, n_draw, pipe_replacement}, u, dir / "subset.uniform.txt");
      return std::pair{std::move(b), std::move(u)};
    });
    const auto stats = run_stage("pack", out, [&] {
      const auto plan = pack(select_items(corpus.records, balanced), pack_config, threads);
      auto s = packing_stats(plan, pack_config.min_utilization);
      emit_plan(plan, dir / "plan.jsonl", stats_document(s, pack_config));
      return s;
    });
    run_stage("report", out, [&] {
      OrderedJson report;
      report["seed"] = cfg.seed;
      report["rng"] = CounterRng::kName;
      report["num_samples"] = cfg.n_samples;
      report["num_sampled"] = n_draw;
      report["weight_mode"] = weight_mode_name(mode);
      report["replacement"] = pipe_replacement;
      report["corpus"] = to_json(balance_report(assignments, cfg.vocab_size));
      report["unbalanced"] = to_json(balance_report(assignments, positions_of(assignments, uniform), cfg.vocab_size));
      report["balanced"] = to_json(balance_report(assignments, positions_of(assignments, balanced), cfg.vocab_size));
      report["packing"] = OrderedJson::parse(stats_document(stats, pack_config).dump());
      auto file = jsonl::open_output(dir / "report.json");
      file << report.dump(2) << '\n';
      out << "pipeline: entropy unbalanced " << report["unbalanced"]["entropy_bits"].get<double>() << " -> balanced "
          << report["balanced"]["entropy_bits"].get<double>() << " bits; compression " << stats.compression_ratio
          << "\n";
      return 0;
    });
    write_echo(dir / "config.json", *pipe_cmd);
    return 0;
  }

  if (*rerun_cmd) {
    const auto echo = jsonl::read_json_file(rerun_config);
    if (!echo.is_object() || echo.value("tool", "") != kToolName || !echo.contains("subcommand") ||
        !echo.contains("args") || !echo["args"].is_object()) {
      throw Error("invalid_config", rerun_config.string() + " is not a " + std::string(kToolName) + " config echo");
    }
    const auto subcommand = echo["subcommand"].get<std::string>();
    if (subcommand == "rerun") throw Error("invalid_config", "cannot rerun a rerun");
    std::vector<std::string> replay{subcommand};
    for (const auto& [name, value] : echo["args"].items()) {
      if (value.is_boolean()) {
        if (value.get<bool>()) replay.push_back("--" + name);
      } else if (value.is_string()) {
        replay.push_back("--" + name);
        replay.push_back(value.get<std::string>());
      } else {
        throw Error("invalid_config", "argument \"" + name + "\" must be a string or boolean");
      }
    }
    replay.push_back("--threads");
    replay.push_back(std::to_string(threads));
    return dispatch(replay, out, err);
  }

  if (*isa_cmd) {
    for (auto isa : kernels::available_isas()) {
      out << kernels::isa_name(isa) << (isa == kernels::active_isa() ? " (active)" : "") << "\n";
    }
    return 0;
  }
  return 2;
}

}  // namespace

}  // namespace balpack::cli
