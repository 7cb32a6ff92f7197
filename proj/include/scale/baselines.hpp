#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "scale/backend.hpp"
#include "scale/core.hpp"

namespace scale {

/// Zero-shot chain-of-thought instruction appended to the problem.
inline constexpr std::string_view kCotInstruction =
    "Please reason step by step, and put your final answer within \\boxed{}.";

inline constexpr std::string_view kSummaryInstruction =
    "Summarize all established results and the current state of the solution so the work can "
    "continue.";

struct IterativeConfig {
  std::int64_t per_round_max_tokens = 8192;
  int max_rounds = 8;
  std::int64_t summary_max_tokens = 512;
};

const IterativeConfig& validate_iterative_config(const IterativeConfig& config);

/// Most frequent non-empty answer; ties go to the answer seen first.
std::optional<std::string> majority_winner(std::span<const std::string> normalized_answers);

SolveTrace run_cot(const Problem& problem, const ScaleConfig& config, Backend& backend);

SolveTrace run_majority_vote(const Problem& problem, int samples, const ScaleConfig& config,
                             Backend& backend);

SolveTrace run_iterative(const Problem& problem, const IterativeConfig& iter_config,
                         const ScaleConfig& config, Backend& backend);

}  // namespace scale
