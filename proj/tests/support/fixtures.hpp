#pragma once

// Scripted fixtures: a responder that plays a known decomposition,
// difficulty and solution per problem, recorded into mock scripts.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scale/backend.hpp"
#include "scale/harness.hpp"

namespace scale::fixtures {

struct Usage {
  std::int64_t decompose = 100;
  std::int64_t judge = 50;
  std::int64_t assess = 5;
  std::int64_t system1 = 200;
  std::int64_t system2 = 1000;
};

struct ScriptedStep {
  std::string statement;
  std::string difficulty;  // assessment reply, e.g. "0.8"
  std::string solution;    // final step should carry \boxed{answer}
  // System-2 solutions need this many tokens; below it the reply is cut
  // off with finish_reason=length and no answer. 0 = always fits.
  std::int64_t required_tokens = 0;
};

struct ScriptedProblem {
  std::string id;
  std::string statement;
  std::string gold;
  std::vector<ScriptedStep> steps;
};

/// Decomposition reply for candidate `j` (1-based). Candidate 2 (B) holds the
/// scripted steps, candidate 1 merges everything into one step and candidate
/// 3 rewords candidate 2. The judge always answers "Best: B".
std::string decomposition_reply(const ScriptedProblem& problem, int candidate);

/// Responder for FunctionBackend.
FunctionBackend::Responder make_responder(std::vector<ScriptedProblem> problems, Usage usage = {});

std::string dataset_jsonl(const std::vector<ScriptedProblem>& problems);

struct Fixture {
  std::string name;
  std::vector<ScriptedProblem> problems;
  Usage usage;
  std::string dataset;  // JSONL text
  std::string script;   // JSONL text
};

// Run settings the scripts were recorded under.
ScaleConfig three_step_config();    // tau 0.5, 1 sample
ScaleConfig two_by_two_config();    // tau 0.5, 2 samples
ScaleConfig sft_config();           // tau 0.5
ScaleConfig threshold_sweep_config();  // 2 samples
ScaleConfig budget_sweep_config();  // tau 0.5, 1 sample
std::vector<double> threshold_sweep_grid();  // 0.2 .. 0.9

/// Builds every shipped fixture in memory.
std::vector<Fixture> build_all();

/// data/fixtures inside the source tree.
std::filesystem::path fixture_dir();

}  // namespace scale::fixtures
