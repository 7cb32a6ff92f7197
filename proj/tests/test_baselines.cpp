#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "scale/baselines.hpp"
#include "scale/eval.hpp"

using namespace scale;

namespace {

Problem problem() { return {"q", "Find 2 + 3.", std::string("5")}; }

ModelResponse reply(std::string text, std::int64_t tokens) {
  return {std::move(text), {4, tokens, true}, FinishReason::Stop};
}

// Exhaustive oracle: highest count, ties to the smallest first index.
std::optional<std::string> oracle_winner(const std::vector<std::string>& answers) {
  std::optional<std::string> best;
  int best_count = 0;
  std::size_t best_first = 0;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    if (answers[i].empty()) continue;
    int count = static_cast<int>(std::count(answers.begin(), answers.end(), answers[i]));
    std::size_t first = static_cast<std::size_t>(
        std::find(answers.begin(), answers.end(), answers[i]) - answers.begin());
    if (!best || count > best_count || (count == best_count && first < best_first)) {
      best = answers[i];
      best_count = count;
      best_first = first;
    }
  }
  return best;
}

}  // namespace

TEST(MajorityWinner, Examples) {
  std::vector<std::string> clear{"5", "5", "3"};
  EXPECT_EQ(majority_winner(clear), "5");
  std::vector<std::string> tie{"3", "5"};
  EXPECT_EQ(majority_winner(tie), "3");
  std::vector<std::string> with_failures{"", "7", "", "7", "8"};
  EXPECT_EQ(majority_winner(with_failures), "7");
  std::vector<std::string> none{"", ""};
  EXPECT_EQ(majority_winner(none), std::nullopt);
  EXPECT_EQ(majority_winner({}), std::nullopt);
}

TEST(MajorityWinner, ExhaustiveOverThreeSymbols) {
  const std::vector<std::string> symbols{"1", "2", "3"};
  int cases = 0;
  for (int n = 1; n <= 6; ++n) {
    int total = 1;
    for (int i = 0; i < n; ++i) total *= 3;
    for (int code = 0; code < total; ++code) {
      std::vector<std::string> answers;
      for (int i = 0, c = code; i < n; ++i, c /= 3) answers.push_back(symbols[c % 3]);
      ASSERT_EQ(majority_winner(answers), oracle_winner(answers));
      ++cases;
    }
  }
  EXPECT_EQ(cases, 3 + 9 + 27 + 81 + 243 + 729);
}

TEST(MajorityWinner, UniqueMaximumIsPermutationInvariant) {
  std::mt19937 rng(5);
  std::vector<std::string> answers{"a", "b", "b", "c", "b", "a", "", "d"};
  auto expected = majority_winner(answers);
  for (int i = 0; i < 2000; ++i) {
    std::shuffle(answers.begin(), answers.end(), rng);
    ASSERT_EQ(majority_winner(answers), expected);
  }
}

TEST(MajorityWinner, VoteConservation) {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> answers;
    const int n = 1 + static_cast<int>(rng() % 10);
    for (int i = 0; i < n; ++i) {
      int v = static_cast<int>(rng() % 4);
      answers.push_back(v == 0 ? "" : std::to_string(v));
    }
    std::map<std::string, int> counts;
    for (const auto& a : answers) {
      if (!a.empty()) ++counts[a];
    }
    int sum = 0;
    for (const auto& [a, c] : counts) sum += c;
    EXPECT_EQ(sum, n - static_cast<int>(std::count(answers.begin(), answers.end(), "")));
    auto w = majority_winner(answers);
    EXPECT_EQ(w.has_value(), sum > 0);
    if (w) {
      for (const auto& [a, c] : counts) EXPECT_LE(c, counts[*w]);
    }
  }
}

TEST(Cot, SingleCallWithInstruction) {
  std::vector<ModelRequest> seen;
  FunctionBackend backend([&](const ModelRequest& r) {
    seen.push_back(r);
    return reply("2 + 3 = 5, so \\boxed{5}", 7409);
  });
  ScaleConfig config;
  auto t = run_cot(problem(), config, backend);
  ASSERT_EQ(seen.size(), 1u);
  EXPECT_EQ(seen[0].messages.back().content,
            "Find 2 + 3.\n\nPlease reason step by step, and put your final answer within "
            "\\boxed{}.");
  EXPECT_EQ(seen[0].mode, ProcessingMode::System2);
  EXPECT_EQ(seen[0].max_tokens, config.system2_max_tokens);
  EXPECT_EQ(t.final_answer, "5");
  EXPECT_EQ(t.n_iterations, 1);
  EXPECT_EQ(t.total_tokens, 7409);
  EXPECT_EQ(t.overhead_tokens, 0);
  EXPECT_EQ(trace_tpi(t, false), 7409.0);
  EXPECT_EQ(trace_tok(t, true), 7409.0);
}

TEST(Cot, FallbackExtractionAndFailure) {
  FunctionBackend plain([](const ModelRequest&) { return reply("the answer is 5", 4); });
  EXPECT_EQ(run_cot(problem(), {}, plain).final_answer, "5");

  FunctionBackend down([](const ModelRequest&) -> ModelResponse {
    throw BackendError(BackendError::Kind::Server, "down");
  });
  auto t = run_cot(problem(), {}, down);
  EXPECT_TRUE(t.failed);
}

TEST(Majority, VotesWithDistinctSeeds) {
  // Sample i answers according to its seed offset.
  const std::vector<std::string> scripted{"\\boxed{5}", "\\boxed{3}", "\\boxed{005}",
                                          "no answer here", "\\boxed{3}", "\\boxed{5.0}"};
  FunctionBackend backend([&](const ModelRequest& r) {
    return reply(scripted[*r.seed - 40], 10 + static_cast<std::int64_t>(*r.seed - 40));
  });
  ScaleConfig config;
  config.seed = 40;
  auto t = run_majority_vote(problem(), 6, config, backend);
  EXPECT_EQ(t.votes, (std::vector<std::string>{"5", "3", "5", "", "3", "5"}));
  EXPECT_EQ(t.final_answer, "5");
  EXPECT_EQ(t.total_tokens, 10 + 11 + 12 + 13 + 14 + 15);
  EXPECT_EQ(t.n_iterations, std::nullopt);
  EXPECT_EQ(trace_tpi(t, false), std::nullopt);
  ASSERT_EQ(t.calls.size(), 6u);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(t.calls[i].seed, 40u + i);
}

TEST(Majority, TieGoesToFirstSample) {
  FunctionBackend backend([](const ModelRequest& r) {
    return reply(*r.seed == 0 ? "\\boxed{3}" : "\\boxed{5}", 1);
  });
  EXPECT_EQ(run_majority_vote(problem(), 2, {}, backend).final_answer, "3");
}

TEST(Majority, AllFailingSamplesFailTheTrace) {
  FunctionBackend backend([](const ModelRequest& r) -> ModelResponse {
    if (*r.seed == 1) throw BackendError(BackendError::Kind::Server, "down");
    return reply("nothing numeric", 2);
  });
  auto t = run_majority_vote(problem(), 3, {}, backend);
  EXPECT_TRUE(t.failed);
  EXPECT_EQ(t.votes.size(), 3u);
  EXPECT_EQ(t.calls.size(), 2u);
  EXPECT_THROW(run_majority_vote(problem(), 0, {}, backend), ConfigError);
}

TEST(Iterative, AnswerInFirstRound) {
  int calls = 0;
  FunctionBackend backend([&](const ModelRequest&) {
    ++calls;
    return reply("\\boxed{5}", 100);
  });
  auto t = run_iterative(problem(), {}, {}, backend);
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(t.n_iterations, 1);
  EXPECT_EQ(t.final_answer, "5");
}

TEST(Iterative, AnswerInThirdRound) {
  std::vector<ModelRequest> seen;
  FunctionBackend backend([&](const ModelRequest& r) {
    seen.push_back(r);
    if (r.stage == CallStage::Summarize) return reply("summary " + std::to_string(r.step), 20);
    if (r.step < 3) return reply("still working", 300 + r.step);
    return reply("done: \\boxed{5}", 250);
  });
  IterativeConfig ic;
  ic.per_round_max_tokens = 4096;
  auto t = run_iterative(problem(), ic, {}, backend);
  ASSERT_EQ(seen.size(), 5u);
  // Hand total: 301 + 20 + 302 + 20 + 250.
  EXPECT_EQ(t.total_tokens, 893);
  EXPECT_EQ(t.n_iterations, 3);
  EXPECT_EQ(t.final_answer, "5");
  EXPECT_DOUBLE_EQ(*trace_tpi(t, false), 893.0 / 3.0);
  EXPECT_EQ(seen[1].mode, ProcessingMode::System1);
  EXPECT_EQ(seen[1].max_tokens, 512);
  EXPECT_EQ(seen[0].max_tokens, 4096);
  EXPECT_NE(seen[4].messages.back().content.find("summary 2"), std::string::npos);
  EXPECT_TRUE(t.warnings.empty());
}

TEST(Iterative, ExhaustionFallsBack) {
  int reasoning = 0;
  int summaries = 0;
  FunctionBackend backend([&](const ModelRequest& r) {
    if (r.stage == CallStage::Summarize) {
      ++summaries;
      return reply("so far 4", 5);
    }
    ++reasoning;
    return reply("partial value 5", 50);
  });
  auto t = run_iterative(problem(), {}, {}, backend);
  EXPECT_EQ(reasoning, 8);
  EXPECT_EQ(summaries, 7);
  EXPECT_EQ(t.n_iterations, 8);
  EXPECT_EQ(t.final_answer, "5");
  EXPECT_FALSE(t.warnings.empty());
}

TEST(Iterative, RoundBoundProperty) {
  for (int max_rounds = 1; max_rounds <= 5; ++max_rounds) {
    for (int answer_round = 1; answer_round <= 6; ++answer_round) {
      int reasoning = 0;
      int summaries = 0;
      FunctionBackend backend([&](const ModelRequest& r) {
        if (r.stage == CallStage::Summarize) {
          ++summaries;
          return reply("s", 1);
        }
        ++reasoning;
        return reply(r.step == answer_round ? "\\boxed{1}" : "thinking", 1);
      });
      IterativeConfig ic;
      ic.max_rounds = max_rounds;
      run_iterative(problem(), ic, {}, backend);
      EXPECT_LE(reasoning, max_rounds);
      if (answer_round <= max_rounds) {
        EXPECT_EQ(reasoning, answer_round);
        EXPECT_EQ(summaries, reasoning - 1);
      } else {
        EXPECT_EQ(summaries, max_rounds - 1);
      }
    }
  }
}

TEST(Iterative, ConfigValidation) {
  IterativeConfig ic;
  ic.max_rounds = 0;
  EXPECT_THROW(validate_iterative_config(ic), ConfigError);
  ic = {};
  ic.summary_max_tokens = 0;
  EXPECT_THROW(validate_iterative_config(ic), ConfigError);
  ic = {};
  ic.per_round_max_tokens = -1;
  EXPECT_THROW(validate_iterative_config(ic), ConfigError);
}
