#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "opttree/bench.hpp"
#include "opttree/corpus.hpp"
#include "opttree/decoding.hpp"
#include "opttree/ngram.hpp"
#include "opttree/simd/kernels.hpp"
#include "opttree/synthetic.hpp"

namespace opttree::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Thrown for bad flag combinations detected after parsing.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct OracleOptions {
  std::string target_path;
  std::string draft_path;
  bool synthetic = false;
  SyntheticSpec spec;
};

struct DecodeOptions {
  std::size_t nodes = 50;
  double threshold = 0.7;
  std::size_t max_depth = 0;
  double temperature = 0.0;
  std::string builder = "opt";
  std::string shape_path;
  std::size_t seq_k = 2;
  std::size_t seq_m = 4;
  std::uint64_t seed = 0;
  std::size_t max_new_tokens = 64;
};

struct Oracles {
  OraclePtr target;
  OraclePtr draft;
};

void add_oracle_flags(CLI::App& cmd, OracleOptions& o) {
  cmd.add_option("--target", o.target_path, "Target n-gram model file");
  cmd.add_option("--draft", o.draft_path, "Draft n-gram model file");
  cmd.add_flag("--synthetic", o.synthetic, "Use a synthetic target/draft pair instead of model files");
  cmd.add_option("--agreement", o.spec.agreement, "Synthetic draft/target agreement in [0,1]")
      ->capture_default_str();
  cmd.add_option("--vocab", o.spec.vocab, "Synthetic vocabulary size")->capture_default_str();
  cmd.add_option("--context", o.spec.context, "Synthetic context length")->capture_default_str();
  cmd.add_option("--sharpness", o.spec.sharpness, "Synthetic distribution sharpness")
      ->capture_default_str();
  cmd.add_option("--synthetic-seed", o.spec.seed, "Synthetic table seed")->capture_default_str();
}

void add_decode_flags(CLI::App& cmd, DecodeOptions& d) {
  cmd.add_option("--nodes", d.nodes, "Node budget n")->capture_default_str();
  cmd.add_option("--threshold", d.threshold, "Drafting threshold delta")->capture_default_str();
  cmd.add_option("--max-depth", d.max_depth, "Depth cap (0: same as --nodes)")
      ->capture_default_str();
  cmd.add_option("--temperature", d.temperature, "Sampling temperature (0: greedy)")
      ->capture_default_str();
  cmd.add_option("--builder", d.builder, "Draft structure")
      ->check(CLI::IsMember({"opt", "binary", "fixed", "sequence", "none"}))
      ->capture_default_str();
  cmd.add_option("--shape", d.shape_path, "Tree shape JSON for --builder fixed")
      ->check(CLI::ExistingFile);
  cmd.add_option("--seq-k", d.seq_k, "Number of sequence drafts")->capture_default_str();
  cmd.add_option("--seq-m", d.seq_m, "Length of each sequence draft")->capture_default_str();
  cmd.add_option("--seed", d.seed, "Seed for all stochastic behaviour")->capture_default_str();
  cmd.add_option("--max-new-tokens", d.max_new_tokens, "Tokens to generate per prompt")
      ->capture_default_str();
}

Oracles load_oracles(const OracleOptions& o) {
  if (o.synthetic) {
    if (!o.target_path.empty() || !o.draft_path.empty()) {
      throw UsageError("--synthetic cannot be combined with --target/--draft");
    }
    auto pair = make_synthetic_pair(o.spec);
    return {pair.target, pair.draft};
  }
  if (o.target_path.empty() || o.draft_path.empty()) {
    throw UsageError("need --target and --draft model files, or --synthetic");
  }
  return {std::make_shared<NgramModel>(NgramModel::load(o.target_path)),
          std::make_shared<NgramModel>(NgramModel::load(o.draft_path))};
}

DecodeConfig make_config(const DecodeOptions& d) {
  DecodeConfig cfg;
  cfg.node_budget = d.nodes;
  cfg.threshold = d.threshold;
  cfg.max_depth = d.max_depth;
  cfg.temperature = d.temperature;
  cfg.builder = parse_builder(d.builder);
  cfg.seq_k = d.seq_k;
  cfg.seq_m = d.seq_m;
  cfg.seed = d.seed;
  cfg.max_new_tokens = d.max_new_tokens;
  if (!d.shape_path.empty()) {
    if (cfg.builder != BuilderKind::kFixed) {
      throw UsageError("--shape only applies to --builder fixed");
    }
    cfg.shape = TreeShape::load(d.shape_path);
  }
  cfg.validate();
  return cfg;
}

json config_json(const DecodeConfig& cfg) {
  return {
      {"node_budget", cfg.node_budget},
      {"threshold", cfg.threshold},
      {"max_depth", cfg.max_depth},
      {"temperature", cfg.temperature},
      {"builder", builder_name(cfg.builder)},
      {"shape", json::parse(cfg.shape.to_json())},
      {"seq_k", cfg.seq_k},
      {"seq_m", cfg.seq_m},
      {"max_new_tokens", cfg.max_new_tokens},
      {"seed", cfg.seed},
  };
}

json oracle_json(const OracleOptions& o, const Oracles& oracles) {
  return {
      {"target", oracles.target->describe()},
      {"draft", oracles.draft->describe()},
      {"target_path", o.target_path},
      {"draft_path", o.draft_path},
  };
}

json base_manifest(const std::string& command) {
  return {{"tool", "opttree"}, {"version", kToolVersion}, {"command", command}};
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<TokenSeq> load_prompts(const std::string& path, std::size_t vocab) {
  std::vector<TokenSeq> prompts;
  for (const std::string& line : read_lines(path)) {
    TokenSeq p = encode_bytes(line);
    if (std::any_of(p.begin(), p.end(), [&](TokenId t) { return t >= vocab; })) {
      throw std::invalid_argument("prompt byte outside the oracle vocabulary");
    }
    prompts.push_back(std::move(p));
  }
  if (prompts.empty()) throw std::invalid_argument("prompts file " + path + " is empty");
  return prompts;
}

json step_json(std::size_t index, const StepResult& s) {
  return {
      {"step", index},
      {"acceptance_length", s.verify.acceptance_length()},
      {"accepted", s.verify.accepted},
      {"bonus", s.verify.bonus},
      {"expectation", s.expectation},
      {"tree_nodes", s.tree_nodes},
      {"tree_depth", s.tree_depth},
      {"drafting_steps", s.drafting_steps},
      {"draft_s", s.draft_seconds},
      {"verify_s", s.verify_seconds},
  };
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> values;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      if constexpr (std::is_same_v<T, std::string>) {
        values.push_back(item);
        used = item.size();
      } else if constexpr (std::is_floating_point_v<T>) {
        values.push_back(static_cast<T>(std::stod(item, &used)));
      } else {
        values.push_back(static_cast<T>(std::stoull(item, &used)));
      }
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string("bad value '") + item + "' in " + flag);
    }
  }
  if (values.empty()) throw UsageError(std::string(flag) + " needs at least one value");
  return values;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive draft-tree speculative decoding on simulator oracles", "opttree"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  // train
  std::string corpus_path, model_out;
  std::size_t order = 3;
  double smoothing = 0.01;
  auto* train = app.add_subcommand("train", "Train a byte-level n-gram model");
  train->add_option("--corpus", corpus_path, "UTF-8 text corpus")->required();
  train->add_option("--order", order, "Conditioning tokens (0 = unigram)")->capture_default_str();
  train->add_option("--smoothing", smoothing, "Additive smoothing constant")->capture_default_str();
  train->add_option("--out", model_out, "Model output path")->required();

  // gen-corpus
  std::size_t corpus_bytes = 1 << 20;
  std::uint64_t corpus_seed = 7;
  std::string corpus_out;
  auto* gen = app.add_subcommand("gen-corpus", "Write a seeded synthetic text corpus");
  gen->add_option("--bytes", corpus_bytes, "Corpus size in bytes")->capture_default_str();
  gen->add_option("--seed", corpus_seed, "Generator seed")->capture_default_str();
  gen->add_option("--out", corpus_out, "Output path")->required();

  // decode
  OracleOptions decode_oracles;
  DecodeOptions decode_opts;
  std::string prompt_text, decode_out = "opttree-out", log_path;
  bool print_ids = false;
  auto* decode = app.add_subcommand("decode", "Speculatively decode one prompt");
  decode->add_option("--prompt", prompt_text, "Prompt text")->required();
  add_oracle_flags(*decode, decode_oracles);
  add_decode_flags(*decode, decode_opts);
  decode->add_flag("--ids", print_ids, "Print token ids instead of text");
  decode->add_option("--log", log_path, "Per-step JSON-lines log (default OUT/steps.jsonl)");
  decode->add_option("--out", decode_out, "Output directory")->capture_default_str();

  // bench
  OracleOptions bench_oracles;
  DecodeOptions bench_opts;
  std::string bench_prompts, bench_out = "opttree-out", builders = "opt,fixed,binary,sequence,none";
  std::size_t bench_jobs = 1;
  auto* bench = app.add_subcommand("bench", "Mean acceptance length per draft structure");
  bench->add_option("--prompts", bench_prompts, "Prompts file, one per line")
      ->required()->check(CLI::ExistingFile);
  add_oracle_flags(*bench, bench_oracles);
  add_decode_flags(*bench, bench_opts);
  bench->add_option("--builders", builders, "Comma-separated builders")->capture_default_str();
  bench->add_option("--jobs", bench_jobs, "Parallel configurations")->capture_default_str();
  bench->add_option("--out", bench_out, "Output directory")->capture_default_str();

  // sweep
  OracleOptions sweep_oracles;
  DecodeOptions sweep_opts;
  std::string sweep_prompts, sweep_out = "opttree-out", budgets, thresholds, temperatures;
  std::size_t sweep_jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Sweep node budget, threshold or temperature");
  sweep->add_option("--prompts", sweep_prompts, "Prompts file, one per line")
      ->required()->check(CLI::ExistingFile);
  add_oracle_flags(*sweep, sweep_oracles);
  add_decode_flags(*sweep, sweep_opts);
  sweep->add_option("--budgets", budgets, "Comma-separated ascending node budgets");
  sweep->add_option("--thresholds", thresholds, "Comma-separated thresholds");
  sweep->add_option("--temperatures", temperatures, "Comma-separated temperatures");
  sweep->add_option("--jobs", sweep_jobs, "Parallel sweep points")->capture_default_str();
  sweep->add_option("--out", sweep_out, "Output directory")->capture_default_str();

  // correlate
  OracleOptions corr_oracles;
  DecodeOptions corr_opts;
  std::string corr_prompts, corr_out = "opttree-out";
  std::size_t corr_steps = 8000;
  auto* corr = app.add_subcommand("correlate", "E(A) versus acceptance length grid");
  corr->add_option("--prompts", corr_prompts, "Prompts file, one per line")
      ->required()->check(CLI::ExistingFile);
  add_oracle_flags(*corr, corr_oracles);
  add_decode_flags(*corr, corr_opts);
  corr->add_option("--steps", corr_steps, "Decoding steps to record")->capture_default_str();
  corr->add_option("--out", corr_out, "Output directory")->capture_default_str();

  // mu
  OracleOptions mu_oracles;
  DecodeOptions mu_opts;
  std::string mu_prompt;
  std::size_t mu_trials = 20;
  auto* mu = app.add_subcommand("mu", "Measure drafting/decoding time ratio");
  mu->add_option("--prompt", mu_prompt, "Prompt text")->required();
  add_oracle_flags(*mu, mu_oracles);
  add_decode_flags(*mu, mu_opts);
  mu->add_option("--trials", mu_trials, "Timing trials")->capture_default_str();
  std::int64_t draft_delay_us = 0, target_delay_us = 0;
  mu->add_option("--draft-delay-us", draft_delay_us, "Extra latency per draft pass")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  mu->add_option("--target-delay-us", target_delay_us, "Extra latency per target pass")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (train->parsed()) {
      const std::string text = read_text_file(corpus_path);
      const NgramModel model = train_ngram(encode_bytes(text), order, smoothing);
      model.save(model_out);
      out << "vocabulary " << model.vocab_size() << "\ncontexts " << model.context_count()
          << "\n";
      return kOk;
    }

    if (gen->parsed()) {
      write_file(corpus_out, synthetic_corpus(corpus_seed, corpus_bytes));
      return kOk;
    }

    if (decode->parsed()) {
      const Oracles oracles = load_oracles(decode_oracles);
      const DecodeConfig cfg = make_config(decode_opts);
      const TokenSeq prompt = encode_bytes(prompt_text);
      const DecodeRun run = run_decoding(prompt, *oracles.target, *oracles.draft, cfg);

      if (print_ids) {
        for (std::size_t i = 0; i < run.generated.size(); ++i) {
          out << (i ? " " : "") << run.generated[i];
        }
        out << "\n";
      } else {
        out << Vocabulary(oracles.target->vocab_size()).render(run.generated) << "\n";
      }

      const fs::path dir(decode_out);
      const fs::path log = log_path.empty() ? dir / "steps.jsonl" : fs::path(log_path);
      std::string lines;
      for (std::size_t i = 0; i < run.steps.size(); ++i) {
        lines += step_json(i, run.steps[i]).dump() + "\n";
      }
      write_file(log, lines);
      json manifest = base_manifest("decode");
      manifest["config"] = config_json(cfg);
      manifest["seed"] = cfg.seed;
      manifest["oracles"] = oracle_json(decode_oracles, oracles);
      manifest["prompt"] = prompt_text;
      manifest["outputs"] = {log.string()};
      write_file(dir / "manifest.json", manifest.dump(2) + "\n");
      return kOk;
    }

    if (bench->parsed()) {
      const Oracles oracles = load_oracles(bench_oracles);
      const DecodeConfig base = make_config(bench_opts);
      const auto prompts = load_prompts(bench_prompts, oracles.target->vocab_size());
      std::vector<DecodeConfig> configs;
      for (const std::string& name : parse_list<std::string>(builders, "--builders")) {
        DecodeConfig c = base;
        try {
          c.builder = parse_builder(name);
        } catch (const std::invalid_argument& e) {
          throw UsageError(e.what());
        }
        configs.push_back(c);
      }
      const BenchReport report =
          run_benchmark(prompts, *oracles.target, *oracles.draft, configs, bench_jobs);
      const fs::path dir(bench_out);
      write_file(dir / "bench.csv", report.to_csv());
      write_file(dir / "bench.json", report.to_json().dump(2) + "\n");
      json manifest = base_manifest("bench");
      manifest["config"] = config_json(base);
      manifest["seed"] = base.seed;
      manifest["oracles"] = oracle_json(bench_oracles, oracles);
      manifest["prompts"] = bench_prompts;
      manifest["builders"] = builders;
      manifest["outputs"] = {(dir / "bench.csv").string(), (dir / "bench.json").string()};
      write_file(dir / "manifest.json", manifest.dump(2) + "\n");
      out << report.to_csv();
      return kOk;
    }

    if (sweep->parsed()) {
      const int chosen = !budgets.empty() + !thresholds.empty() + !temperatures.empty();
      if (chosen != 1) {
        throw UsageError("give exactly one of --budgets, --thresholds, --temperatures");
      }
      const Oracles oracles = load_oracles(sweep_oracles);
      const DecodeConfig base = make_config(sweep_opts);
      const auto prompts = load_prompts(sweep_prompts, oracles.target->vocab_size());
      BenchReport report;
      std::string axis;
      if (!budgets.empty()) {
        const auto values = parse_list<std::size_t>(budgets, "--budgets");
        if (!std::is_sorted(values.begin(), values.end())) {
          throw UsageError("--budgets must be ascending");
        }
        axis = "node_budget";
        report = sweep_node_budget(values, prompts, *oracles.target, *oracles.draft, base,
                                   sweep_jobs);
      } else if (!thresholds.empty()) {
        const auto values = parse_list<double>(thresholds, "--thresholds");
        axis = "threshold";
        report = sweep_threshold(values, prompts, *oracles.target, *oracles.draft, base,
                                 sweep_jobs);
      } else {
        const auto values = parse_list<double>(temperatures, "--temperatures");
        axis = "temperature";
        report = sweep_temperature(values, prompts, *oracles.target, *oracles.draft, base,
                                   sweep_jobs);
      }
      const fs::path dir(sweep_out);
      write_file(dir / "sweep.csv", report.to_csv());
      write_file(dir / "sweep.json", report.to_json().dump(2) + "\n");
      json manifest = base_manifest("sweep");
      manifest["axis"] = axis;
      manifest["config"] = config_json(base);
      manifest["seed"] = base.seed;
      manifest["oracles"] = oracle_json(sweep_oracles, oracles);
      manifest["prompts"] = sweep_prompts;
      manifest["outputs"] = {(dir / "sweep.csv").string(), (dir / "sweep.json").string()};
      write_file(dir / "manifest.json", manifest.dump(2) + "\n");
      out << report.to_csv();
      return kOk;
    }

    if (corr->parsed()) {
      const Oracles oracles = load_oracles(corr_oracles);
      const DecodeConfig cfg = make_config(corr_opts);
      const auto prompts = load_prompts(corr_prompts, oracles.target->vocab_size());
      const auto steps = collect_steps(prompts, *oracles.target, *oracles.draft, cfg, corr_steps);
      const CorrelationGrid grid = correlate(steps);
      const fs::path dir(corr_out);
      write_file(dir / "correlation.csv", grid.to_csv());
      write_file(dir / "correlation.json", grid.to_json().dump(2) + "\n");
      json manifest = base_manifest("correlate");
      manifest["config"] = config_json(cfg);
      manifest["seed"] = cfg.seed;
      manifest["oracles"] = oracle_json(corr_oracles, oracles);
      manifest["prompts"] = corr_prompts;
      manifest["steps"] = corr_steps;
      manifest["outputs"] = {(dir / "correlation.csv").string(),
                             (dir / "correlation.json").string()};
      write_file(dir / "manifest.json", manifest.dump(2) + "\n");
      out << "pearson " << grid.pearson << (grid.degenerate ? " (degenerate)" : "") << "\n";
      return kOk;
    }

    if (mu->parsed()) {
      Oracles oracles = load_oracles(mu_oracles);
      const DecodeConfig cfg = make_config(mu_opts);
      if (target_delay_us > 0) {
        oracles.target = std::make_shared<DelayedOracle>(
            oracles.target, std::chrono::microseconds(target_delay_us));
      }
      if (draft_delay_us > 0) {
        oracles.draft = std::make_shared<DelayedOracle>(
            oracles.draft, std::chrono::microseconds(draft_delay_us));
      }
      const double ratio = measure_mu(*oracles.target, *oracles.draft, cfg,
                                      encode_bytes(mu_prompt), mu_trials);
      out << "mu " << ratio << "\nkernels " << simd::isa_name(simd::active_kernels().isa)
          << "\n";
      return kOk;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kUsageError;
}

}  // namespace opttree::cli
