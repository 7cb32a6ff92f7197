#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace scale {

// Errors -------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration invariant was violated. `field()` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// Domain types -------------------------------------------------------------

enum class ProcessingMode { System1, System2 };

std::string_view to_string(ProcessingMode mode);
ProcessingMode parse_processing_mode(std::string_view text);

struct Problem {
  std::string id;
  std::string statement;
  std::optional<std::string> gold_answer;

  bool operator==(const Problem&) const = default;
};

struct SubProblem {
  int index = 1;  // 1-based
  std::string statement;

  bool operator==(const SubProblem&) const = default;
};

struct Decomposition {
  std::vector<SubProblem> subproblems;
  std::string raw_text;

  std::size_t size() const noexcept { return subproblems.size(); }
  bool operator==(const Decomposition&) const = default;
};

struct DifficultyScore {
  double value = 1.0;
  std::string raw_text;
  // Set when the assessment reply could not be parsed and the conservative
  // default was used.
  bool fallback = false;

  bool operator==(const DifficultyScore&) const = default;
};

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  bool reported = true;  // false when estimated locally

  TokenUsage& operator+=(const TokenUsage& other) {
    prompt_tokens += other.prompt_tokens;
    completion_tokens += other.completion_tokens;
    reported = reported && other.reported;
    return *this;
  }
  bool operator==(const TokenUsage&) const = default;
};

enum class SolutionKind { Step, Summary };

struct SubSolution {
  int subproblem_index = 1;
  ProcessingMode mode = ProcessingMode::System2;
  DifficultyScore difficulty;
  std::string solution_text;
  TokenUsage usage;
  SolutionKind kind = SolutionKind::Step;
  bool truncated = false;  // finish_reason == length

  bool operator==(const SubSolution&) const = default;
};

/// Which orchestration stage issued a backend call.
enum class CallStage { Decompose, Judge, Assess, Solve, Summarize };

std::string_view to_string(CallStage stage);
CallStage parse_call_stage(std::string_view text);

/// Decomposition, judging and assessment calls are orchestration overhead.
constexpr bool is_overhead(CallStage stage) {
  return stage == CallStage::Decompose || stage == CallStage::Judge ||
         stage == CallStage::Assess;
}

struct CallRecord {
  CallStage stage = CallStage::Solve;
  ProcessingMode mode = ProcessingMode::System2;
  int step = 0;     // sub-problem / round / candidate ordinal, 0 if n/a
  int attempt = 0;  // 0 for the first try, >0 for regenerations and retries
  std::int64_t max_tokens = 0;
  std::uint64_t seed = 0;
  TokenUsage usage;
  std::string finish_reason;
  // Copied from a shared planning pass (sweeps) rather than issued anew.
  bool reused = false;

  bool operator==(const CallRecord&) const = default;
};

struct DecompositionCandidateSet {
  std::vector<Decomposition> candidates;
  std::string judge_rationale;
  int selected_index = 1;  // 1-based

  bool operator==(const DecompositionCandidateSet&) const = default;
};

enum class Method { Scale, Cot, Majority, Iterative };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);

struct SolveTrace {
  Problem problem;
  Method method = Method::Scale;
  std::uint64_t seed = 0;
  int sample_index = 0;

  DecompositionCandidateSet candidates;
  Decomposition decomposition;
  std::vector<SubSolution> subsolutions;
  std::vector<CallRecord> calls;

  std::string final_answer;
  bool extraction_failed = false;
  // Majority: normalized answer of every sample, in sample order ("" when
  // extraction failed for that sample).
  std::vector<std::string> votes;

  std::int64_t total_tokens = 0;
  std::int64_t overhead_tokens = 0;
  // Iterations for Tpi; nullopt where Tpi is undefined (majority voting).
  std::optional<int> n_iterations;

  bool failed = false;
  std::string error;
  std::vector<std::string> warnings;

  bool operator==(const SolveTrace&) const = default;
};

/// Appends a call and updates the token totals of the trace.
void record_call(SolveTrace& trace, const CallRecord& call);

/// Recomputes total_tokens and overhead_tokens from trace.calls.
void recompute_totals(SolveTrace& trace);

/// True when any call in the trace used estimated token counts.
bool has_estimated_tokens(const SolveTrace& trace);

// Configuration ------------------------------------------------------------

struct ScaleConfig {
  double threshold = 0.2;
  int k_decompositions = 3;
  std::int64_t system1_max_tokens = 1024;
  std::int64_t system2_max_tokens = 32768;
  double temperature = 0.6;
  double top_p = 0.95;
  int samples_per_problem = 8;
  int retries = 3;
  std::uint64_t seed = 0;

  bool operator==(const ScaleConfig&) const = default;
};

/// Returns `config` unchanged or throws ConfigError naming the first
/// violated invariant.
const ScaleConfig& validate_config(const ScaleConfig& config);

// Seeds --------------------------------------------------------------------

/// Seeds sent on the wire stay within 31 bits.
constexpr std::uint64_t kSeedMask = 0x7fffffffULL;

constexpr std::uint64_t offset_seed(std::uint64_t seed, std::uint64_t offset) {
  return (seed + offset) & kSeedMask;
}

/// hash(base, id, index): reproducible, independent per (problem, sample).
std::uint64_t derive_seed(std::uint64_t base, std::string_view id,
                          std::uint64_t index);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace scale
