#include <string>

#include "scale/eval.hpp"
#include "scale/pipeline.hpp"

namespace scale {

ScalePipeline::ScalePipeline(Backend& backend, ScaleConfig config, PromptTemplates templates)
    : backend_(backend), config_(validate_config(config)), templates_(std::move(templates)) {}

ModelRequest ScalePipeline::make_request(std::string prompt, ProcessingMode mode,
                                         std::int64_t max_tokens, std::uint64_t seed,
                                         CallStage stage, int step) const {
  ModelRequest request;
  request.messages.push_back(ChatMessage{Role::User, std::move(prompt)});
  request.mode = mode;
  request.max_tokens = max_tokens;
  request.temperature = config_.temperature;
  request.top_p = config_.top_p;
  request.seed = seed;
  request.stage = stage;
  request.step = step;
  return request;
}

ModelResponse call_and_record(Backend& backend, const ModelRequest& request, SolveTrace& trace) {
  ModelResponse response = backend.complete(request);
  CallRecord record;
  record.stage = request.stage;
  record.mode = request.mode;
  record.step = request.step;
  record.max_tokens = request.max_tokens;
  record.seed = request.seed.value_or(0);
  record.usage = response.usage;
  record.finish_reason = std::string(to_string(response.finish_reason));
  // Attempt ordinal: calls already recorded for the same stage and step.
  for (const auto& c : trace.calls) {
    if (c.stage == record.stage && c.step == record.step && !c.reused) ++record.attempt;
  }
  record_call(trace, record);
  return response;
}

ModelResponse ScalePipeline::call(const ModelRequest& request, SolveTrace& trace) const {
  return call_and_record(backend_, request, trace);
}

std::vector<Decomposition> ScalePipeline::generate_decompositions(const Problem& problem,
                                                                  SolveTrace& trace) const {
  const int k = config_.k_decompositions;
  const std::string prompt = render_template(templates_.decompose, {{"problem", problem.statement}});
  std::vector<Decomposition> out;
  for (int j = 0; j < k; ++j) {
    // First try uses seed + j, the single regeneration seed + k + j.
    for (int attempt = 0; attempt < 2; ++attempt) {
      auto seed = offset_seed(config_.seed, attempt == 0 ? j : k + j);
      auto response = call(make_request(prompt, ProcessingMode::System2, config_.system2_max_tokens,
                                        seed, CallStage::Decompose, j + 1),
                           trace);
      try {
        out.push_back(parse_decomposition(response.text));
        break;
      } catch (const ParseError&) {
        trace.warnings.push_back("decomposition candidate " + std::to_string(j + 1) +
                                 (attempt == 0 ? " unparseable, regenerating"
                                               : " unparseable after regeneration, dropped"));
      }
    }
  }
  if (out.empty()) {
    throw DecompositionError("all " + std::to_string(k) + " decomposition candidates failed to parse");
  }
  return out;
}

Decomposition ScalePipeline::select_decomposition(std::vector<Decomposition> candidates,
                                                  const Problem& problem,
                                                  SolveTrace& trace) const {
  if (candidates.empty()) throw DecompositionError("no decomposition candidates to select from");
  trace.candidates = DecompositionCandidateSet{candidates, "", 1};
  if (candidates.size() == 1) return candidates.front();

  std::string listing;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    listing += "Decomposition ";
    listing += static_cast<char>('A' + c);
    listing += ":\n";
    for (const auto& s : candidates[c].subproblems) {
      listing += "Step " + std::to_string(s.index) + ": " + s.statement + "\n";
    }
    listing += "\n";
  }
  const std::string prompt = render_template(
      templates_.judge, {{"problem", problem.statement}, {"candidates", listing}});

  for (int attempt = 0; attempt < 2; ++attempt) {
    auto response = call(make_request(prompt, ProcessingMode::System2, config_.system2_max_tokens,
                                      offset_seed(config_.seed, attempt), CallStage::Judge, 0),
                         trace);
    trace.candidates.judge_rationale = response.text;
    if (auto label = parse_judge_label(response.text, static_cast<int>(candidates.size()))) {
      trace.candidates.selected_index = *label + 1;
      return candidates[static_cast<std::size_t>(*label)];
    }
  }
  trace.warnings.push_back("judge named no valid candidate; using candidate 1");
  trace.candidates.selected_index = 1;
  return candidates.front();
}

DifficultyScore ScalePipeline::assess_difficulty(const SubProblem& subproblem,
                                                 const ExecutionContext& context,
                                                 SolveTrace& trace) const {
  const std::string prompt = render_template(templates_.assess,
                                             {{"problem", context.problem().statement},
                                              {"history", context.render_history()},
                                              {"subproblem", subproblem.statement}});
  std::string last_reply;
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto response = call(make_request(prompt, ProcessingMode::System1, config_.system1_max_tokens,
                                      offset_seed(config_.seed, attempt), CallStage::Assess,
                                      subproblem.index),
                         trace);
    last_reply = response.text;
    if (auto value = parse_difficulty(response.text)) {
      return DifficultyScore{*value, response.text, false};
    }
  }
  trace.warnings.push_back("difficulty of sub-problem " + std::to_string(subproblem.index) +
                           " unparseable; defaulting to 1.0");
  return DifficultyScore{1.0, last_reply, true};
}

SubSolution ScalePipeline::solve_subproblem(const ExecutionContext& context,
                                            const SubProblem& subproblem, ProcessingMode mode,
                                            const DifficultyScore& difficulty,
                                            SolveTrace& trace) const {
  const std::string prompt = render_template(templates_.solve,
                                             {{"problem", context.problem().statement},
                                              {"history", context.render_history()},
                                              {"subproblem", subproblem.statement}});
  const auto limit = mode == ProcessingMode::System1 ? config_.system1_max_tokens
                                                     : config_.system2_max_tokens;
  auto response = call(
      make_request(prompt, mode, limit, config_.seed, CallStage::Solve, subproblem.index), trace);
  SubSolution solution;
  solution.subproblem_index = subproblem.index;
  solution.mode = mode;
  solution.difficulty = difficulty;
  solution.solution_text = response.text;
  solution.usage = response.usage;
  solution.truncated = response.finish_reason == FinishReason::Length;
  if (solution.truncated) {
    trace.warnings.push_back("sub-problem " + std::to_string(subproblem.index) +
                             " hit the token limit");
  }
  return solution;
}

SolveTrace ScalePipeline::run(const Problem& problem, const ScalePlan* plan) const {
  SolveTrace trace;
  trace.problem = problem;
  trace.method = Method::Scale;
  trace.seed = config_.seed;

  try {
    if (plan) {
      trace.candidates = plan->candidates;
      trace.decomposition = plan->decomposition;
      for (auto call : plan->planning_calls) {
        call.reused = true;
        record_call(trace, call);
      }
    } else {
      auto candidates = generate_decompositions(problem, trace);
      trace.decomposition = select_decomposition(std::move(candidates), problem, trace);
    }

    std::vector<SolvedStep> solved;
    for (const auto& subproblem : trace.decomposition.subproblems) {
      auto context = build_context(problem, solved);
      const std::size_t i = solved.size();
      DifficultyScore difficulty;
      if (plan && i < plan->difficulties.size()) {
        difficulty = plan->difficulties[i];
      } else {
        difficulty = assess_difficulty(subproblem, context, trace);
      }
      const auto mode = select_mode(difficulty.value, config_.threshold);
      auto solution = solve_subproblem(context, subproblem, mode, difficulty, trace);
      trace.subsolutions.push_back(solution);
      solved.push_back(SolvedStep{subproblem, std::move(solution)});
    }
    trace.n_iterations = static_cast<int>(trace.subsolutions.size());

    if (auto answer = extract_final_answer(trace.subsolutions.back().solution_text)) {
      trace.final_answer = *answer;
    } else {
      trace.extraction_failed = true;
      trace.warnings.push_back("no final answer in the last sub-problem solution");
    }
  } catch (const Error& e) {
    trace.failed = true;
    trace.error = e.what();
  }
  return trace;
}

std::optional<ScalePlan> plan_from_trace(const SolveTrace& trace) {
  if (trace.method != Method::Scale || trace.decomposition.subproblems.empty()) return std::nullopt;
  ScalePlan plan;
  plan.candidates = trace.candidates;
  plan.decomposition = trace.decomposition;
  for (const auto& s : trace.subsolutions) plan.difficulties.push_back(s.difficulty);
  for (const auto& call : trace.calls) {
    if (call.stage == CallStage::Decompose || call.stage == CallStage::Judge) {
      plan.planning_calls.push_back(call);
    } else if (call.stage == CallStage::Assess &&
               call.step <= static_cast<int>(plan.difficulties.size())) {
      plan.planning_calls.push_back(call);
    }
  }
  return plan;
}

SolveTrace run_scale(const Problem& problem, const ScaleConfig& config, Backend& backend,
                     const PromptTemplates& templates) {
  return ScalePipeline(backend, config, templates).run(problem);
}

}  // namespace scale
