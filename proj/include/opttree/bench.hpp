#pragma once

// Desk-scale versions of the usual speculative-decoding experiments: mean
// acceptance length tables, E(A) vs A correlation, and sweeps over node
// budget, threshold and temperature.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "opttree/decoding.hpp"

namespace opttree {

struct BenchRow {
  std::string builder;
  std::size_t node_budget = 0;
  double threshold = 0.0;
  double temperature = 0.0;
  double mal = 0.0;
  double mean_e = 0.0;
  double mean_drafting_steps = 0.0;
  std::size_t steps = 0;
  std::size_t tokens = 0;
  double wall_seconds = 0.0;
  double tokens_per_second = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;

  static constexpr const char* kCsvHeader =
      "builder,node_budget,threshold,temperature,mal,mean_e,steps,tokens,wall_s,"
      "tokens_per_s";

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

// Counts of (round(E(A)), A) pairs plus the Pearson coefficient of the raw
// pairs. counts[e][a - 1] holds the steps with rounded expectation e and
// acceptance length a.
struct CorrelationGrid {
  std::vector<std::vector<std::size_t>> counts;
  double pearson = 0.0;
  // Set when either variable has zero variance; pearson is then 0.
  bool degenerate = false;
  std::size_t total = 0;

  std::size_t bin_total(std::size_t e_bin) const;
  // Acceptance length with the most samples in the bin (smallest on ties).
  std::size_t modal_acceptance(std::size_t e_bin) const;

  // Rounded-E rows, one column per acceptance length.
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

// Mean acceptance length etc. of one configuration over all prompts. Prompt i
// is decoded with seed cfg.seed + i.
BenchRow run_config(std::span<const TokenSeq> prompts, const Oracle& target,
                    const Oracle& draft, const DecodeConfig& cfg);

// One row per configuration. Rows are independent jobs; up to `jobs` run at
// once and the report keeps the configuration order.
BenchReport run_benchmark(std::span<const TokenSeq> prompts, const Oracle& target,
                          const Oracle& draft, std::span<const DecodeConfig> configs,
                          std::size_t jobs = 1);

// Decodes prompts round-robin (run r uses seed cfg.seed + r) until exactly
// `step_count` step records exist.
std::vector<StepResult> collect_steps(std::span<const TokenSeq> prompts,
                                      const Oracle& target, const Oracle& draft,
                                      const DecodeConfig& cfg, std::size_t step_count);

// Throws std::invalid_argument for fewer than two records.
CorrelationGrid correlate(std::span<const StepResult> records);

// `budgets` must be ascending. Builder is forced to opt.
BenchReport sweep_node_budget(std::span<const std::size_t> budgets,
                              std::span<const TokenSeq> prompts, const Oracle& target,
                              const Oracle& draft, const DecodeConfig& base,
                              std::size_t jobs = 1);

// Thresholds must lie in [0, 1]. Builder is forced to opt.
BenchReport sweep_threshold(std::span<const double> thresholds,
                            std::span<const TokenSeq> prompts, const Oracle& target,
                            const Oracle& draft, const DecodeConfig& base,
                            std::size_t jobs = 1);

BenchReport sweep_temperature(std::span<const double> temperatures,
                              std::span<const TokenSeq> prompts, const Oracle& target,
                              const Oracle& draft, const DecodeConfig& base,
                              std::size_t jobs = 1);

// Median over `trials` of (time per drafting step of build_opt_tree) divided
// by (time of one target verification: tree forward pass plus greedy walk).
// Thresholds in (mu, 1) are the useful range.
double measure_mu(const Oracle& target, const Oracle& draft, const DecodeConfig& cfg,
                  std::span<const TokenId> prompt, std::size_t trials);

}  // namespace opttree
