#include "opttree/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <stdexcept>

#include "opttree/attention.hpp"

namespace opttree {
namespace {

using Clock = std::chrono::steady_clock;

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::size_t tree_budget(const DecodeConfig& cfg) {
  switch (cfg.builder) {
    case BuilderKind::kFixed:
      return cfg.shape.node_count();
    case BuilderKind::kSequence:
      return cfg.seq_k * cfg.seq_m;
    case BuilderKind::kNone:
      return 0;
    default:
      return cfg.node_budget;
  }
}

template <typename Fn>
auto parallel_map(std::size_t count, std::size_t jobs, Fn fn)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using Result = decltype(fn(std::size_t{}));
  std::vector<Result> out(count);
  jobs = std::max<std::size_t>(jobs, 1);
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  for (std::size_t start = 0; start < count; start += jobs) {
    std::vector<std::future<Result>> running;
    const std::size_t end = std::min(count, start + jobs);
    for (std::size_t i = start; i < end; ++i) {
      running.push_back(std::async(std::launch::async, fn, i));
    }
    for (std::size_t i = start; i < end; ++i) out[i] = running[i - start].get();
  }
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

std::string BenchReport::to_csv() const {
  std::string out = kCsvHeader;
  out += '\n';
  for (const BenchRow& r : rows) {
    out += r.builder + ',' + std::to_string(r.node_budget) + ',' + fixed6(r.threshold) +
           ',' + fixed6(r.temperature) + ',' + fixed6(r.mal) + ',' + fixed6(r.mean_e) +
           ',' + std::to_string(r.steps) + ',' + std::to_string(r.tokens) + ',' +
           fixed6(r.wall_seconds) + ',' + fixed6(r.tokens_per_second) + '\n';
  }
  return out;
}

nlohmann::json BenchReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const BenchRow& r : rows) {
    rows_json.push_back({
        {"builder", r.builder},
        {"node_budget", r.node_budget},
        {"threshold", r.threshold},
        {"temperature", r.temperature},
        {"mal", r.mal},
        {"mean_e", r.mean_e},
        {"mean_drafting_steps", r.mean_drafting_steps},
        {"steps", r.steps},
        {"tokens", r.tokens},
        {"wall_s", r.wall_seconds},
        {"tokens_per_s", r.tokens_per_second},
    });
  }
  return {{"rows", rows_json}};
}

std::size_t CorrelationGrid::bin_total(std::size_t e_bin) const {
  std::size_t total_in_bin = 0;
  for (std::size_t c : counts.at(e_bin)) total_in_bin += c;
  return total_in_bin;
}

std::size_t CorrelationGrid::modal_acceptance(std::size_t e_bin) const {
  const auto& row = counts.at(e_bin);
  const auto it = std::max_element(row.begin(), row.end());
  return static_cast<std::size_t>(it - row.begin()) + 1;
}

std::string CorrelationGrid::to_csv() const {
  const std::size_t columns = counts.empty() ? 0 : counts.front().size();
  std::string out = "e_bin";
  for (std::size_t a = 1; a <= columns; ++a) out += ",a" + std::to_string(a);
  out += '\n';
  for (std::size_t e = 0; e < counts.size(); ++e) {
    out += std::to_string(e);
    for (std::size_t c : counts[e]) out += ',' + std::to_string(c);
    out += '\n';
  }
  return out;
}

nlohmann::json CorrelationGrid::to_json() const {
  return {{"counts", counts},
          {"pearson", pearson},
          {"degenerate", degenerate},
          {"total", total}};
}

BenchRow run_config(std::span<const TokenSeq> prompts, const Oracle& target,
                    const Oracle& draft, const DecodeConfig& cfg) {
  if (prompts.empty()) throw std::invalid_argument("benchmark needs at least one prompt");
  BenchRow row;
  row.builder = std::string(builder_name(cfg.builder));
  row.node_budget = tree_budget(cfg);
  row.threshold = cfg.threshold;
  row.temperature = cfg.temperature;

  std::size_t accepted = 0;
  std::size_t drafting = 0;
  long double expectation = 0.0L;
  const auto start = Clock::now();
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    DecodeConfig c = cfg;
    c.seed = cfg.seed + i;
    const DecodeRun run = run_decoding(prompts[i], target, draft, c);
    for (const StepResult& s : run.steps) {
      accepted += s.verify.acceptance_length();
      drafting += s.drafting_steps;
      expectation += s.expectation;
    }
    row.steps += run.steps.size();
    row.tokens += run.generated.size();
  }
  row.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();

  if (row.steps > 0) {
    const auto steps = static_cast<double>(row.steps);
    row.mal = static_cast<double>(accepted) / steps;
    row.mean_e = static_cast<double>(expectation / row.steps);
    row.mean_drafting_steps = static_cast<double>(drafting) / steps;
  }
  row.tokens_per_second =
      row.wall_seconds > 0.0 ? static_cast<double>(row.tokens) / row.wall_seconds : 0.0;
  return row;
}

BenchReport run_benchmark(std::span<const TokenSeq> prompts, const Oracle& target,
                          const Oracle& draft, std::span<const DecodeConfig> configs,
                          std::size_t jobs) {
  if (prompts.empty()) throw std::invalid_argument("benchmark needs at least one prompt");
  BenchReport report;
  report.rows = parallel_map(configs.size(), jobs, [&](std::size_t i) {
    return run_config(prompts, target, draft, configs[i]);
  });
  return report;
}

std::vector<StepResult> collect_steps(std::span<const TokenSeq> prompts,
                                      const Oracle& target, const Oracle& draft,
                                      const DecodeConfig& cfg, std::size_t step_count) {
  if (prompts.empty()) throw std::invalid_argument("need at least one prompt");
  if (cfg.max_new_tokens == 0) throw std::invalid_argument("max_new_tokens must be >= 1");
  std::vector<StepResult> steps;
  steps.reserve(step_count);
  for (std::size_t r = 0; steps.size() < step_count; ++r) {
    DecodeConfig c = cfg;
    c.seed = cfg.seed + r;
    DecodeRun run = run_decoding(prompts[r % prompts.size()], target, draft, c);
    for (StepResult& s : run.steps) {
      if (steps.size() == step_count) break;
      steps.push_back(std::move(s));
    }
  }
  return steps;
}

CorrelationGrid correlate(std::span<const StepResult> records) {
  if (records.size() < 2) throw std::invalid_argument("correlate needs at least 2 records");
  CorrelationGrid grid;
  grid.total = records.size();

  std::size_t max_bin = 0;
  std::size_t max_a = 1;
  for (const StepResult& r : records) {
    max_bin = std::max(max_bin, static_cast<std::size_t>(std::lround(r.expectation)));
    max_a = std::max(max_a, r.verify.acceptance_length());
  }
  grid.counts.assign(max_bin + 1, std::vector<std::size_t>(max_a, 0));

  long double sum_e = 0.0L, sum_a = 0.0L;
  for (const StepResult& r : records) {
    const auto bin = static_cast<std::size_t>(std::lround(r.expectation));
    ++grid.counts[bin][r.verify.acceptance_length() - 1];
    sum_e += r.expectation;
    sum_a += static_cast<long double>(r.verify.acceptance_length());
  }
  const long double n = static_cast<long double>(records.size());
  const long double mean_e = sum_e / n;
  const long double mean_a = sum_a / n;
  long double cov = 0.0L, var_e = 0.0L, var_a = 0.0L;
  for (const StepResult& r : records) {
    const long double de = r.expectation - mean_e;
    const long double da = static_cast<long double>(r.verify.acceptance_length()) - mean_a;
    cov += de * da;
    var_e += de * de;
    var_a += da * da;
  }
  if (var_e <= 0.0L || var_a <= 0.0L) {
    grid.degenerate = true;
    grid.pearson = 0.0;
  } else {
    grid.pearson = static_cast<double>(cov / std::sqrt(var_e * var_a));
  }
  return grid;
}

BenchReport sweep_node_budget(std::span<const std::size_t> budgets,
                              std::span<const TokenSeq> prompts, const Oracle& target,
                              const Oracle& draft, const DecodeConfig& base,
                              std::size_t jobs) {
  if (!std::is_sorted(budgets.begin(), budgets.end())) {
    throw std::invalid_argument("budgets must be ascending");
  }
  std::vector<DecodeConfig> configs;
  for (std::size_t b : budgets) {
    DecodeConfig c = base;
    c.builder = BuilderKind::kOpt;
    c.node_budget = b;
    configs.push_back(c);
  }
  return run_benchmark(prompts, target, draft, configs, jobs);
}

BenchReport sweep_threshold(std::span<const double> thresholds,
                            std::span<const TokenSeq> prompts, const Oracle& target,
                            const Oracle& draft, const DecodeConfig& base,
                            std::size_t jobs) {
  std::vector<DecodeConfig> configs;
  for (double delta : thresholds) {
    if (!(delta >= 0.0 && delta <= 1.0)) {
      throw std::invalid_argument("thresholds must lie in [0,1]");
    }
    DecodeConfig c = base;
    c.builder = BuilderKind::kOpt;
    c.threshold = delta;
    configs.push_back(c);
  }
  return run_benchmark(prompts, target, draft, configs, jobs);
}

BenchReport sweep_temperature(std::span<const double> temperatures,
                              std::span<const TokenSeq> prompts, const Oracle& target,
                              const Oracle& draft, const DecodeConfig& base,
                              std::size_t jobs) {
  std::vector<DecodeConfig> configs;
  for (double t : temperatures) {
    if (!(t >= 0.0)) throw std::invalid_argument("temperatures must be >= 0");
    DecodeConfig c = base;
    c.temperature = t;
    configs.push_back(c);
  }
  return run_benchmark(prompts, target, draft, configs, jobs);
}

double measure_mu(const Oracle& target, const Oracle& draft, const DecodeConfig& cfg,
                  std::span<const TokenId> prompt, std::size_t trials) {
  if (trials == 0) throw std::invalid_argument("measure_mu needs at least one trial");
  if (prompt.empty()) throw std::invalid_argument("measure_mu needs a prompt");
  const std::span<const TokenId> context(prompt.data(), prompt.size() - 1);

  std::vector<double> ratios;
  ratios.reserve(trials);
  for (std::size_t i = 0; i < trials; ++i) {
    const auto draft_start = Clock::now();
    const OptTreeResult built = build_opt_tree(prompt, draft, cfg.builder_config());
    const double per_step =
        std::chrono::duration<double>(Clock::now() - draft_start).count() /
        static_cast<double>(built.drafting_steps);

    const auto verify_start = Clock::now();
    const FlatTree flat = flatten(built.tree);
    const TreeMask mask = build_mask(flat);
    const auto dists = target.batch_tree_forward(context, flat, mask);
    verify_greedy(built.tree, dists);
    const double verify =
        std::chrono::duration<double>(Clock::now() - verify_start).count();
    ratios.push_back(verify > 0.0 ? per_step / verify : 0.0);
  }
  return median(std::move(ratios));
}

}  // namespace opttree
