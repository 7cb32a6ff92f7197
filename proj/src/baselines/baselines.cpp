#include <future>
#include <map>
#include <stdexcept>

#include "scale/baselines.hpp"
#include "scale/eval.hpp"
#include "scale/pipeline.hpp"

namespace scale {
namespace {

ModelRequest user_request(std::string prompt, ProcessingMode mode, std::int64_t max_tokens,
                          std::uint64_t seed, const ScaleConfig& config, CallStage stage,
                          int step) {
  ModelRequest request;
  request.messages.push_back(ChatMessage{Role::User, std::move(prompt)});
  request.mode = mode;
  request.max_tokens = max_tokens;
  request.temperature = config.temperature;
  request.top_p = config.top_p;
  request.seed = seed;
  request.stage = stage;
  request.step = step;
  return request;
}

std::string cot_prompt(const Problem& problem) {
  return problem.statement + "\n\n" + std::string(kCotInstruction);
}

SubSolution pseudo_step(int index, ProcessingMode mode, const ModelResponse& response,
                        SolutionKind kind = SolutionKind::Step) {
  SubSolution s;
  s.subproblem_index = index;
  s.mode = mode;
  s.difficulty = DifficultyScore{1.0, "", false};
  s.solution_text = response.text;
  s.usage = response.usage;
  s.kind = kind;
  s.truncated = response.finish_reason == FinishReason::Length;
  return s;
}

}  // namespace

const IterativeConfig& validate_iterative_config(const IterativeConfig& config) {
  if (config.per_round_max_tokens <= 0) {
    throw ConfigError("per_round_max_tokens", "per_round_max_tokens must be > 0");
  }
  if (config.max_rounds < 1) throw ConfigError("max_rounds", "max_rounds must be >= 1");
  if (config.summary_max_tokens <= 0) {
    throw ConfigError("summary_max_tokens", "summary_max_tokens must be > 0");
  }
  return config;
}

std::optional<std::string> majority_winner(std::span<const std::string> normalized_answers) {
  std::map<std::string, std::pair<int, std::size_t>> tally;  // count, first index
  for (std::size_t i = 0; i < normalized_answers.size(); ++i) {
    const auto& a = normalized_answers[i];
    if (a.empty()) continue;
    auto [it, inserted] = tally.try_emplace(a, 0, i);
    ++it->second.first;
  }
  const std::string* best = nullptr;
  std::pair<int, std::size_t> best_score{0, 0};
  for (const auto& [answer, score] : tally) {
    if (!best || score.first > best_score.first ||
        (score.first == best_score.first && score.second < best_score.second)) {
      best = &answer;
      best_score = score;
    }
  }
  if (!best) return std::nullopt;
  return *best;
}

SolveTrace run_cot(const Problem& problem, const ScaleConfig& config, Backend& backend) {
  SolveTrace trace;
  trace.problem = problem;
  trace.method = Method::Cot;
  trace.seed = config.seed;
  try {
    auto response = call_and_record(
        backend,
        user_request(cot_prompt(problem), ProcessingMode::System2, config.system2_max_tokens,
                     config.seed, config, CallStage::Solve, 1),
        trace);
    trace.subsolutions.push_back(pseudo_step(1, ProcessingMode::System2, response));
    trace.n_iterations = 1;
    if (auto answer = extract_final_answer(response.text)) {
      trace.final_answer = *answer;
    } else {
      trace.extraction_failed = true;
    }
  } catch (const Error& e) {
    trace.failed = true;
    trace.error = e.what();
  }
  return trace;
}

SolveTrace run_majority_vote(const Problem& problem, int samples, const ScaleConfig& config,
                             Backend& backend) {
  if (samples < 1) throw ConfigError("samples", "majority voting needs at least one sample");
  SolveTrace trace;
  trace.problem = problem;
  trace.method = Method::Majority;
  trace.seed = config.seed;

  const std::string prompt = cot_prompt(problem);
  std::vector<std::future<ModelResponse>> pending;
  pending.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    pending.push_back(std::async(std::launch::async, [&, i] {
      return backend.complete(user_request(prompt, ProcessingMode::System2,
                                           config.system2_max_tokens, offset_seed(config.seed, i),
                                           config, CallStage::Solve, i + 1));
    }));
  }

  // Record in sample order so traces are independent of completion order.
  for (int i = 0; i < samples; ++i) {
    try {
      auto response = pending[static_cast<std::size_t>(i)].get();
      CallRecord record;
      record.stage = CallStage::Solve;
      record.mode = ProcessingMode::System2;
      record.step = i + 1;
      record.max_tokens = config.system2_max_tokens;
      record.seed = offset_seed(config.seed, i);
      record.usage = response.usage;
      record.finish_reason = std::string(to_string(response.finish_reason));
      record_call(trace, record);
      trace.subsolutions.push_back(pseudo_step(i + 1, ProcessingMode::System2, response));
      auto answer = extract_final_answer(response.text);
      trace.votes.push_back(answer.value_or(""));
    } catch (const Error& e) {
      trace.votes.emplace_back();
      trace.warnings.push_back("sample " + std::to_string(i + 1) + " failed: " + e.what());
    }
  }

  if (auto winner = majority_winner(trace.votes)) {
    trace.final_answer = *winner;
  } else {
    trace.failed = true;
    trace.error = "no sample produced an extractable answer";
  }
  return trace;
}

SolveTrace run_iterative(const Problem& problem, const IterativeConfig& iter_config,
                         const ScaleConfig& config, Backend& backend) {
  validate_iterative_config(iter_config);
  SolveTrace trace;
  trace.problem = problem;
  trace.method = Method::Iterative;
  trace.seed = config.seed;

  try {
    std::string summary;
    std::string last_reply;
    int rounds = 0;
    bool answered = false;
    for (int round = 1; round <= iter_config.max_rounds; ++round) {
      std::string prompt = problem.statement;
      if (!summary.empty()) prompt += "\n\nSummary of progress so far:\n" + summary;
      prompt += "\n\n" + std::string(kCotInstruction);
      auto reply = call_and_record(
          backend,
          user_request(prompt, ProcessingMode::System2, iter_config.per_round_max_tokens,
                       config.seed, config, CallStage::Solve, round),
          trace);
      trace.subsolutions.push_back(pseudo_step(round, ProcessingMode::System2, reply));
      rounds = round;
      last_reply = reply.text;
      if (extract_boxed(reply.text)) {
        answered = true;
        break;
      }
      if (round == iter_config.max_rounds) break;

      std::string summary_prompt = "Problem:\n" + problem.statement + "\n\n";
      if (!summary.empty()) summary_prompt += "Earlier summary:\n" + summary + "\n\n";
      summary_prompt += "Latest reasoning:\n" + reply.text + "\n\n" + std::string(kSummaryInstruction);
      auto summarized = call_and_record(
          backend,
          user_request(summary_prompt, ProcessingMode::System1, iter_config.summary_max_tokens,
                       config.seed, config, CallStage::Summarize, round),
          trace);
      trace.subsolutions.push_back(
          pseudo_step(round, ProcessingMode::System1, summarized, SolutionKind::Summary));
      summary = summarized.text;
    }
    trace.n_iterations = rounds;
    if (!answered) {
      trace.warnings.push_back("no boxed answer after " + std::to_string(rounds) +
                               " rounds; using fallback extraction");
    }
    if (auto answer = extract_final_answer(last_reply)) {
      trace.final_answer = *answer;
    } else {
      trace.extraction_failed = true;
    }
  } catch (const Error& e) {
    trace.failed = true;
    trace.error = e.what();
  }
  return trace;
}

}  // namespace scale
