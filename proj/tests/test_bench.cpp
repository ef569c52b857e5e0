#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <sstream>
#include <stdexcept>

#include "opttree/bench.hpp"
#include "opttree/synthetic.hpp"
#include "support/tree_fixtures.hpp"

using namespace opttree;

namespace {

StepResult record(double expectation, std::size_t acceptance) {
  StepResult s;
  s.expectation = expectation;
  s.verify.accepted.assign(acceptance - 1, 0);
  return s;
}

SyntheticPair synthetic(double agreement) {
  SyntheticSpec spec;
  spec.agreement = agreement;
  spec.table_rows = 512;
  return make_synthetic_pair(spec);
}

std::size_t line_count(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

// Drops the two timing columns.
std::string without_timing(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    for (int i = 0; i < 2; ++i) line = line.substr(0, line.rfind(','));
    out += line + "\n";
  }
  return out;
}

}  // namespace

TEST_CASE("correlation of matching and constant series") {
  std::vector<StepResult> same;
  for (std::size_t a = 1; a <= 5; ++a) same.push_back(record(static_cast<double>(a), a));
  const CorrelationGrid grid = correlate(same);
  CHECK(grid.pearson == doctest::Approx(1.0));
  CHECK_FALSE(grid.degenerate);
  CHECK(grid.total == 5);
  CHECK(grid.bin_total(3) == 1);
  CHECK(grid.modal_acceptance(3) == 3);
  CHECK(grid.counts[2][1] == 1);

  std::vector<StepResult> flat{record(2.0, 1), record(2.0, 3), record(2.0, 3)};
  const CorrelationGrid f = correlate(flat);
  CHECK(f.degenerate);
  CHECK(f.pearson == 0.0);
  CHECK(f.modal_acceptance(2) == 3);

  std::vector<StepResult> reversed{record(1.0, 3), record(2.0, 2), record(3.0, 1)};
  CHECK(correlate(reversed).pearson == doctest::Approx(-1.0));

  CHECK_THROWS_AS(correlate(std::vector<StepResult>{record(1.0, 1)}), std::invalid_argument);
  CHECK_THROWS_AS(correlate(std::vector<StepResult>{}), std::invalid_argument);
}

TEST_CASE("correlation grid csv") {
  std::vector<StepResult> recs{record(0.4, 1), record(1.6, 2), record(1.4, 3)};
  const CorrelationGrid grid = correlate(recs);
  const std::string csv = grid.to_csv();
  CHECK(csv.rfind("e_bin,a1,a2,a3\n", 0) == 0);
  CHECK(csv.find("\n0,1,0,0\n") != std::string::npos);
  CHECK(csv.find("\n1,0,0,1\n") != std::string::npos);
  CHECK(csv.find("\n2,0,1,0\n") != std::string::npos);
  CHECK(grid.to_json()["total"] == 3);
}

TEST_CASE("benchmark report layout") {
  const auto pair = synthetic(0.8);
  const auto prompts = opttree::testing::random_prompts(6, 3);
  std::vector<DecodeConfig> configs;
  for (BuilderKind k : {BuilderKind::kOpt, BuilderKind::kFixed, BuilderKind::kNone}) {
    DecodeConfig cfg;
    cfg.builder = k;
    cfg.max_new_tokens = 20;
    configs.push_back(cfg);
  }
  const BenchReport report = run_benchmark(prompts, *pair.target, *pair.draft, configs, 2);
  REQUIRE(report.rows.size() == 3);
  const std::string csv = report.to_csv();
  CHECK(csv.rfind(std::string(BenchReport::kCsvHeader) + "\n", 0) == 0);
  CHECK(line_count(csv) == 4);
  CHECK(report.rows[0].builder == "opt");
  CHECK(report.rows[1].node_budget == 25);
  CHECK(report.rows[2].mal == 1.0);
  CHECK(report.rows[2].mean_e == 0.0);
  CHECK(csv.find("\nnone,0,0.700000,0.000000,1.000000,0.000000,120,120,") != std::string::npos);
  for (const auto& row : report.rows) {
    CHECK(row.tokens == 120);
    CHECK(row.mal >= 1.0);
  }
  CHECK(report.to_json()["rows"].size() == 3);
}

TEST_CASE("benchmarks are deterministic apart from timing") {
  const auto pair = synthetic(0.7);
  const auto prompts = opttree::testing::random_prompts(5, 8);
  DecodeConfig cfg;
  cfg.max_new_tokens = 30;
  cfg.temperature = 0.8;
  const std::size_t budgets[] = {5, 20, 40};
  const auto a = sweep_node_budget(budgets, prompts, *pair.target, *pair.draft, cfg, 3);
  const auto b = sweep_node_budget(budgets, prompts, *pair.target, *pair.draft, cfg, 1);
  CHECK(without_timing(a.to_csv()) == without_timing(b.to_csv()));
  CHECK(a.rows.size() == 3);

  const std::size_t descending[] = {20, 5};
  CHECK_THROWS_AS(sweep_node_budget(descending, prompts, *pair.target, *pair.draft, cfg),
                  std::invalid_argument);
  const double bad[] = {0.5, 1.5};
  CHECK_THROWS_AS(sweep_threshold(bad, prompts, *pair.target, *pair.draft, cfg),
                  std::invalid_argument);
}

TEST_CASE("collect_steps returns exactly the requested count") {
  const auto pair = synthetic(0.8);
  const auto prompts = opttree::testing::random_prompts(3, 5);
  DecodeConfig cfg;
  cfg.max_new_tokens = 16;
  const auto steps = collect_steps(prompts, *pair.target, *pair.draft, cfg, 101);
  CHECK(steps.size() == 101);
  const auto again = collect_steps(prompts, *pair.target, *pair.draft, cfg, 101);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    CHECK(steps[i].verify.accepted == again[i].verify.accepted);
    CHECK(steps[i].expectation == again[i].expectation);
  }
}

TEST_CASE("mu reflects the draft-to-target cost ratio") {
  using std::chrono::microseconds;
  const auto pair = synthetic(0.8);
  DecodeConfig cfg;
  cfg.node_budget = 10;
  const TokenSeq prompt{1, 2, 3};

  const DelayedOracle slow_target(pair.target, microseconds(3000));
  const DelayedOracle slow_draft(pair.draft, microseconds(3000));
  CHECK(measure_mu(slow_target, slow_draft, cfg, prompt, 7) == doctest::Approx(1.0).epsilon(0.2));

  const DelayedOracle slower_target(pair.target, microseconds(30000));
  CHECK(measure_mu(slower_target, slow_draft, cfg, prompt, 7) ==
        doctest::Approx(0.1).epsilon(0.2));

  CHECK_THROWS_AS(measure_mu(slow_target, slow_draft, cfg, prompt, 0), std::invalid_argument);
}
