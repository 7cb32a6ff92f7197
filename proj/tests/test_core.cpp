#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "scale/core.hpp"
#include "scale/serialize.hpp"

using namespace scale;

namespace {

std::string rejected_field(const ScaleConfig& config) {
  try {
    validate_config(config);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

CallRecord call(CallStage stage, std::int64_t tokens) {
  CallRecord c;
  c.stage = stage;
  c.usage.completion_tokens = tokens;
  c.usage.prompt_tokens = 3 * tokens;
  return c;
}

}  // namespace

TEST(ValidateConfig, AcceptsTableTwoSetting) {
  ScaleConfig c;
  c.threshold = 0.2;
  c.k_decompositions = 3;
  c.system1_max_tokens = 1024;
  c.system2_max_tokens = 32768;
  EXPECT_EQ(validate_config(c), c);
}

TEST(ValidateConfig, ThresholdOutOfRange) {
  ScaleConfig c;
  c.threshold = 1.5;
  try {
    validate_config(c);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "threshold");
    EXPECT_STREQ(e.what(), "threshold out of [0,1]");
  }
  c.threshold = -0.01;
  EXPECT_EQ(rejected_field(c), "threshold");
  c.threshold = std::nan("");
  EXPECT_EQ(rejected_field(c), "threshold");
}

TEST(ValidateConfig, System2BelowSystem1) {
  ScaleConfig c;
  c.system1_max_tokens = 1024;
  c.system2_max_tokens = 512;
  EXPECT_EQ(rejected_field(c), "system2_max_tokens");
}

TEST(ValidateConfig, EachInvariantNamed) {
  ScaleConfig c;
  c.k_decompositions = 0;
  EXPECT_EQ(rejected_field(c), "k_decompositions");
  c = {};
  c.k_decompositions = 27;
  EXPECT_EQ(rejected_field(c), "k_decompositions");
  c = {};
  c.system1_max_tokens = 0;
  EXPECT_EQ(rejected_field(c), "system1_max_tokens");
  c = {};
  c.temperature = -0.1;
  EXPECT_EQ(rejected_field(c), "temperature");
  c = {};
  c.top_p = 0.0;
  EXPECT_EQ(rejected_field(c), "top_p");
  c.top_p = 1.01;
  EXPECT_EQ(rejected_field(c), "top_p");
  c = {};
  c.samples_per_problem = 0;
  EXPECT_EQ(rejected_field(c), "samples_per_problem");
  c = {};
  c.retries = -1;
  EXPECT_EQ(rejected_field(c), "retries");
}

TEST(ValidateConfig, Defaults) {
  ScaleConfig c;
  EXPECT_DOUBLE_EQ(c.temperature, 0.6);
  EXPECT_DOUBLE_EQ(c.top_p, 0.95);
  EXPECT_EQ(c.samples_per_problem, 8);
  EXPECT_NO_THROW(validate_config(c));
}

TEST(ConfigRoundTrip, RandomConfigsSurviveSerialization) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    ScaleConfig c;
    c.threshold = unit(rng);
    c.k_decompositions = 1 + static_cast<int>(rng() % 26);
    c.system1_max_tokens = 1 + static_cast<std::int64_t>(rng() % 4096);
    c.system2_max_tokens = c.system1_max_tokens + static_cast<std::int64_t>(rng() % 65536);
    c.temperature = 2.0 * unit(rng);
    c.top_p = 1.0 - unit(rng) * 0.999;
    c.samples_per_problem = 1 + static_cast<int>(rng() % 16);
    c.retries = static_cast<int>(rng() % 6);
    c.seed = rng();
    EXPECT_EQ(parse_config(serialize_config(c)), c);
  }
}

TEST(ConfigValues, AppliesAndRejects) {
  ScaleConfig c;
  apply_config_values(c, {{"threshold", "0.35"}, {"k_decompositions", "5"}, {"seed", "9"}});
  EXPECT_DOUBLE_EQ(c.threshold, 0.35);
  EXPECT_EQ(c.k_decompositions, 5);
  EXPECT_EQ(c.seed, 9u);

  try {
    apply_config_values(c, {{"thresh", "0.3"}});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "thresh");
  }
  EXPECT_THROW(apply_config_values(c, {{"k_decompositions", "3x"}}), ConfigError);
  EXPECT_THROW(apply_config_values(c, {{"threshold", ""}}), ConfigError);
}

TEST(ConfigValues, ReadsFlatJsonFile) {
  auto path = std::filesystem::temp_directory_path() / "scale-test-core-config.json";
  write_file(path, R"({"threshold": 0.4, "samples_per_problem": 2, "seed": "17"})");
  auto values = read_config_file(path);
  EXPECT_EQ(values.at("threshold"), "0.4");
  EXPECT_EQ(values.at("samples_per_problem"), "2");
  EXPECT_EQ(values.at("seed"), "17");

  write_file(path, R"({"threshold": [0.4]})");
  EXPECT_THROW(read_config_file(path), ConfigError);
  write_file(path, "[1, 2]");
  EXPECT_THROW(read_config_file(path), ConfigError);
  std::filesystem::remove(path);
}

TEST(TokenTotals, RecordCallSplitsOverhead) {
  SolveTrace t;
  record_call(t, call(CallStage::Decompose, 100));
  record_call(t, call(CallStage::Judge, 50));
  record_call(t, call(CallStage::Assess, 5));
  record_call(t, call(CallStage::Solve, 700));
  record_call(t, call(CallStage::Summarize, 40));
  EXPECT_EQ(t.total_tokens, 895);
  EXPECT_EQ(t.overhead_tokens, 155);

  auto copy = t;
  copy.total_tokens = copy.overhead_tokens = -1;
  recompute_totals(copy);
  EXPECT_EQ(copy, t);
}

TEST(TokenTotals, EstimatedUsageIsDetected) {
  SolveTrace t;
  record_call(t, call(CallStage::Solve, 10));
  EXPECT_FALSE(has_estimated_tokens(t));
  auto c = call(CallStage::Assess, 2);
  c.usage.reported = false;
  record_call(t, c);
  EXPECT_TRUE(has_estimated_tokens(t));
}

TEST(Seeds, DeriveSeedIsStableAndSpread) {
  EXPECT_EQ(derive_seed(0, "p1", 0), derive_seed(0, "p1", 0));
  std::set<std::uint64_t> seen;
  for (std::uint64_t base : {0ULL, 1ULL}) {
    for (const char* id : {"p1", "p2", "aime-2024-01"}) {
      for (std::uint64_t k = 0; k < 8; ++k) {
        auto s = derive_seed(base, id, k);
        EXPECT_LE(s, kSeedMask);
        seen.insert(s);
      }
    }
  }
  EXPECT_EQ(seen.size(), 48u);
}

TEST(Seeds, OffsetSeedWrapsWithinMask) {
  EXPECT_EQ(offset_seed(5, 3), 8u);
  EXPECT_EQ(offset_seed(kSeedMask, 1), 0u);
}

TEST(Enums, RoundTripNames) {
  for (auto m : {Method::Scale, Method::Cot, Method::Majority, Method::Iterative}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  for (auto s : {CallStage::Decompose, CallStage::Judge, CallStage::Assess, CallStage::Solve,
                 CallStage::Summarize}) {
    EXPECT_EQ(parse_call_stage(to_string(s)), s);
  }
  EXPECT_EQ(parse_processing_mode("system1"), ProcessingMode::System1);
  EXPECT_THROW(parse_method("beam"), ParseError);
}

TEST(TraceRoundTrip, AllFieldsSurvive) {
  SolveTrace t;
  t.problem = {"p7", "Compute 1+1.", std::string("2")};
  t.method = Method::Scale;
  t.seed = 123;
  t.sample_index = 3;
  t.decomposition.raw_text = "1. Add";
  t.decomposition.subproblems = {{1, "Add"}};
  t.candidates.candidates = {t.decomposition};
  t.candidates.judge_rationale = "Best: A";
  SubSolution s;
  s.difficulty = {0.125, "0.125", false};
  s.mode = ProcessingMode::System1;
  s.solution_text = "\\boxed{2}";
  s.usage = {10, 4, true};
  s.truncated = true;
  t.subsolutions = {s};
  auto c = call(CallStage::Solve, 4);
  c.seed = 99;
  c.finish_reason = "length";
  c.reused = true;
  record_call(t, c);
  t.final_answer = "2";
  t.votes = {"2", ""};
  t.n_iterations = 1;
  t.warnings = {"truncated"};
  EXPECT_EQ(parse_trace(serialize_trace(t)), t);

  t.n_iterations.reset();
  t.problem.gold_answer.reset();
  t.failed = true;
  t.error = "boom";
  EXPECT_EQ(parse_trace(serialize_trace(t)), t);
}
