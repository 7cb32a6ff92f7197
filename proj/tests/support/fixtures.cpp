#include "fixtures.hpp"

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "scale/harness.hpp"

#ifndef SCALE_FIXTURE_DIR
#error "SCALE_FIXTURE_DIR must point at data/fixtures"
#endif

namespace scale::fixtures {
namespace {

const std::string& user_text(const ModelRequest& request) {
  return request.messages.back().content;
}

ScriptedProblem divisors() {
  return {"divisors",
          "Let n be the number of positive divisors of 360. Compute n + 18.",
          "42",
          {{"Factor 360 into primes.", "0.1", "360 = 2^3 * 3^2 * 5."},
           {"Count the positive divisors of 360 from its factorization.", "0.8",
            "(3+1)(2+1)(1+1) = 24 divisors."},
           {"Add 18 to the divisor count.", "0.2",
            "24 + 18 = 42, so the answer is \\boxed{42}."}}};
}

ScriptedProblem odd_sum() {
  // The scripted final step slips by one, so this problem is always wrong.
  return {"odd-sum",
          "Compute the sum of the first 20 positive odd integers, then subtract 100.",
          "300",
          {{"Sum the first 20 positive odd integers.", "0.9",
            "The sum of the first m odd integers is m^2, so the sum is 400."},
           {"Subtract 100 from the sum.", "0.3", "400 - 100 = 301, so the answer is \\boxed{301}."}}};
}

ScriptedProblem product() {
  return {"product",
          "What is 7 * 8 + 4?",
          "60",
          {{"Multiply 7 by 8.", "0.1", "7 * 8 = 56."},
           {"Add 4 to the product.", "0.1", "56 + 4 = 60, so the answer is \\boxed{60}."}}};
}

ScriptedProblem rectangle() {
  return {"rectangle",
          "A rectangle has perimeter 30 and one side of length 4. Find its area plus 10.",
          "54",
          {{"Find the other side length.", "0.3", "2(4 + w) = 30, so w = 11."},
           {"Compute the area.", "0.6", "4 * 11 = 44."},
           {"Add 10 to the area.", "0.85", "44 + 10 = 54, so the answer is \\boxed{54}."}}};
}

ScriptedProblem power_mod() {
  return {"power-mod",
          "Find the remainder when 2^100 is divided by 7.",
          "2",
          {{"Find the cycle of powers of 2 modulo 7.", "0.2", "Powers of 2 modulo 7 cycle 2, 4, 1."},
           {"Reduce the exponent and finish.", "0.9",
            "100 = 3 * 33 + 1, so 2^100 leaves remainder 2. The answer is \\boxed{2}.", 6000}}};
}

ScriptedProblem pairs() {
  return {"pairs",
          "How many ordered pairs of positive integers (a, b) satisfy a + b = 50?",
          "49",
          {{"Characterize the valid values of a.", "0.1", "a ranges over 1 to 49 with b = 50 - a."},
           {"Count the pairs.", "0.95", "There are 49 pairs, so the answer is \\boxed{49}.", 20000}}};
}

Fixture record(std::string name, std::vector<ScriptedProblem> problems, Usage usage,
               const std::function<void(std::span<const Problem>, Backend&)>& run) {
  Fixture f;
  f.name = std::move(name);
  f.problems = std::move(problems);
  f.usage = usage;
  f.dataset = dataset_jsonl(f.problems);
  auto dataset = parse_dataset(f.dataset);
  FunctionBackend scripted(make_responder(f.problems, usage));
  RecordingBackend recorder(scripted);
  run(dataset, recorder);
  for (const auto& r : recorder.records()) f.script += serialize_script_record(r) + "\n";
  return f;
}

ExperimentOptions options_for(const ScaleConfig& config, const std::string& name) {
  ExperimentOptions o;
  o.config = config;
  o.dataset_name = name;
  o.workers = 4;
  return o;
}

}  // namespace

std::string decomposition_reply(const ScriptedProblem& problem, int candidate) {
  std::string out;
  if (candidate == 1) {
    out = "Step 1: Solve the whole problem directly.\n";
    return out;
  }
  for (std::size_t i = 0; i < problem.steps.size(); ++i) {
    if (candidate == 2) {
      out += "Step " + std::to_string(i + 1) + ": " + problem.steps[i].statement + "\n";
    } else {
      out += std::to_string(i + 1) + ". " + problem.steps[i].statement + " Show the work.\n";
    }
  }
  return out;
}

FunctionBackend::Responder make_responder(std::vector<ScriptedProblem> problems, Usage usage) {
  return [problems = std::move(problems), usage](const ModelRequest& request) -> ModelResponse {
    const std::string& text = user_text(request);
    const ScriptedProblem* problem = nullptr;
    for (const auto& p : problems) {
      if (text.find(p.statement) != std::string::npos) problem = &p;
    }
    if (!problem) throw BackendError(BackendError::Kind::Rejected, "fixture: unknown problem");

    ModelResponse response;
    auto reply = [&](std::string body, std::int64_t tokens) {
      response.text = std::move(body);
      response.usage.prompt_tokens = estimate_tokens(text);
      response.usage.completion_tokens = std::min(tokens, request.max_tokens);
      return response;
    };
    switch (request.stage) {
      case CallStage::Decompose:
        return reply(decomposition_reply(*problem, request.step), usage.decompose);
      case CallStage::Judge:
        return reply("Candidate B splits the problem into checkable steps.\nBest: B",
                     usage.judge);
      case CallStage::Assess: {
        const auto& step = problem->steps.at(static_cast<std::size_t>(request.step - 1));
        return reply(step.difficulty, usage.assess);
      }
      case CallStage::Solve: {
        const auto& step = problem->steps.at(static_cast<std::size_t>(request.step - 1));
        if (step.required_tokens > request.max_tokens) {
          response.finish_reason = FinishReason::Length;
          return reply("Working through the remaining case analysis, the bound still has to be",
                       request.max_tokens);
        }
        const auto tokens = step.required_tokens > 0 ? step.required_tokens
                            : request.mode == ProcessingMode::System1 ? usage.system1
                                                                       : usage.system2;
        return reply(step.solution, tokens);
      }
      case CallStage::Summarize:
        break;
    }
    throw BackendError(BackendError::Kind::Rejected, "fixture: unexpected stage");
  };
}

std::string dataset_jsonl(const std::vector<ScriptedProblem>& problems) {
  std::string out;
  for (const auto& p : problems) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["problem"] = p.statement;
    j["answer"] = p.gold;
    out += j.dump() + "\n";
  }
  return out;
}

ScaleConfig three_step_config() {
  ScaleConfig c;
  c.threshold = 0.5;
  c.samples_per_problem = 1;
  return c;
}

ScaleConfig two_by_two_config() {
  ScaleConfig c;
  c.threshold = 0.5;
  c.samples_per_problem = 2;
  return c;
}

ScaleConfig sft_config() {
  ScaleConfig c;
  c.threshold = 0.5;
  return c;
}

ScaleConfig threshold_sweep_config() {
  ScaleConfig c;
  c.samples_per_problem = 2;
  return c;
}

ScaleConfig budget_sweep_config() {
  ScaleConfig c;
  c.threshold = 0.5;
  c.samples_per_problem = 1;
  return c;
}

std::vector<double> threshold_sweep_grid() { return {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}; }

std::vector<Fixture> build_all() {
  std::vector<Fixture> out;
  out.push_back(record("three_step", {divisors()}, {}, [](auto problems, Backend& b) {
    run_experiment(problems, options_for(three_step_config(), "three_step"), b);
  }));
  out.push_back(record("two_by_two", {divisors(), odd_sum()}, {}, [](auto problems, Backend& b) {
    run_experiment(problems, options_for(two_by_two_config(), "two_by_two"), b);
  }));
  out.push_back(
      record("sft", {divisors(), odd_sum(), product()}, {}, [](auto problems, Backend& b) {
        auto tmp = std::filesystem::temp_directory_path() /
                   ("scale-fixture-sft-" + std::to_string(::getpid()) + ".jsonl");
        export_sft_traces(problems, sft_config(), b, tmp);
        std::filesystem::remove(tmp);
      }));
  out.push_back(
      record("threshold_sweep", {divisors(), rectangle()}, {}, [](auto problems, Backend& b) {
        auto grid = threshold_sweep_grid();
        threshold_sweep(problems, grid, options_for(threshold_sweep_config(), "threshold_sweep"),
                        b);
      }));
  out.push_back(
      record("budget_sweep", {power_mod(), pairs()}, {}, [](auto problems, Backend& b) {
        budget_sweep(problems, kDefaultBudgetGrid,
                     options_for(budget_sweep_config(), "budget_sweep"), b);
      }));
  return out;
}

std::filesystem::path fixture_dir() { return SCALE_FIXTURE_DIR; }

}  // namespace scale::fixtures
