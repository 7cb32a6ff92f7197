#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scale/backend.hpp"
#include "scale/core.hpp"

namespace scale {

class DecompositionError : public Error {
 public:
  using Error::Error;
};

// Prompt templates -----------------------------------------------------------

/// Templates with named placeholders {problem}, {history}, {subproblem} and
/// {candidates}. Substitution is single-pass, so braces inside inserted text
/// (LaTeX) are never re-expanded.
struct PromptTemplates {
  std::string decompose;
  std::string judge;
  std::string assess;
  std::string solve;

  static PromptTemplates defaults();
  /// Reads decompose.txt, judge.txt, assess.txt and solve.txt from `dir`;
  /// missing files keep their default.
  static PromptTemplates load(const std::filesystem::path& dir);
};

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string, std::less<>>& values);

// Stage helpers ----------------------------------------------------------------

/// Ordered numbered list: "1.", "1)" or "Step 1:" at line start. Throws
/// ParseError when no steps are found.
Decomposition parse_decomposition(const std::string& text);

/// Judge verdict label -> 0-based candidate index, if a valid label is named.
std::optional<int> parse_judge_label(std::string_view reply, int candidates);

/// First decimal literal in [0,1]; otherwise the first literal clamped.
std::optional<double> parse_difficulty(std::string_view reply);

/// System1 iff d <= tau.
ProcessingMode select_mode(double difficulty, double threshold);

struct SolvedStep {
  SubProblem subproblem;
  SubSolution solution;
};

/// C_i: the problem plus every previously solved (sub-problem, solution)
/// pair, in order.
class ExecutionContext {
 public:
  ExecutionContext(Problem problem, std::vector<SolvedStep> history)
      : problem_(std::move(problem)), history_(std::move(history)) {}

  const Problem& problem() const noexcept { return problem_; }
  const std::vector<SolvedStep>& history() const noexcept { return history_; }

  /// One rendered block per solved step.
  std::vector<std::string> history_blocks() const;
  std::string render_history() const;
  /// "Problem:\n<P>\n" followed by the history blocks.
  std::string render() const;

 private:
  Problem problem_;
  std::vector<SolvedStep> history_;
};

ExecutionContext build_context(const Problem& problem, std::span<const SolvedStep> solved);

/// Raw content of the last balanced \boxed{...}, if any.
std::optional<std::string> extract_boxed(std::string_view text);

/// Content of the last \boxed{...}; otherwise the last standalone number or
/// simple fraction. The result is normalized.
std::optional<std::string> extract_final_answer(std::string_view text);

// Pipeline ---------------------------------------------------------------------

/// Issues one backend call and appends its CallRecord (and tokens) to the trace.
ModelResponse call_and_record(Backend& backend, const ModelRequest& request, SolveTrace& trace);

/// Decomposition and difficulty values carried over from an earlier run so
/// only routing and solving vary (threshold and budget sweeps).
struct ScalePlan {
  DecompositionCandidateSet candidates;
  Decomposition decomposition;
  std::vector<DifficultyScore> difficulties;  // may cover a prefix only
  std::vector<CallRecord> planning_calls;
};

/// Extracts the reusable plan from a completed scale trace. Returns nullopt
/// when the trace never got past decomposition.
std::optional<ScalePlan> plan_from_trace(const SolveTrace& trace);

class ScalePipeline {
 public:
  ScalePipeline(Backend& backend, ScaleConfig config,
                PromptTemplates templates = PromptTemplates::defaults());

  const ScaleConfig& config() const noexcept { return config_; }

  std::vector<Decomposition> generate_decompositions(const Problem& problem,
                                                     SolveTrace& trace) const;
  /// Fills trace.candidates and returns the selected decomposition.
  Decomposition select_decomposition(std::vector<Decomposition> candidates,
                                     const Problem& problem, SolveTrace& trace) const;
  DifficultyScore assess_difficulty(const SubProblem& subproblem,
                                    const ExecutionContext& context,
                                    SolveTrace& trace) const;
  SubSolution solve_subproblem(const ExecutionContext& context, const SubProblem& subproblem,
                               ProcessingMode mode, const DifficultyScore& difficulty,
                               SolveTrace& trace) const;

  /// Full four-stage run. Failures are recorded in the returned trace.
  SolveTrace run(const Problem& problem, const ScalePlan* plan = nullptr) const;

 private:
  ModelResponse call(const ModelRequest& request, SolveTrace& trace) const;
  ModelRequest make_request(std::string prompt, ProcessingMode mode, std::int64_t max_tokens,
                            std::uint64_t seed, CallStage stage, int step) const;

  Backend& backend_;
  ScaleConfig config_;
  PromptTemplates templates_;
};

/// Convenience wrapper over ScalePipeline::run.
SolveTrace run_scale(const Problem& problem, const ScaleConfig& config, Backend& backend,
                     const PromptTemplates& templates = PromptTemplates::defaults());

}  // namespace scale
