#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "scale/core.hpp"

namespace scale::sim {

struct SyntheticSubProblem {
  double difficulty = 0.0;  // in [0,1]
  double alpha = 0.002;     // logistic steepness per token
  double b_min = 256.0;
  double b_max = 16384.0;

  /// b_min + d * (b_max - b_min).
  double required_budget() const { return b_min + difficulty * (b_max - b_min); }
};

/// Succeeds only if every sub-problem succeeds.
struct SyntheticProblem {
  std::vector<SyntheticSubProblem> subproblems;
};

using Ensemble = std::vector<SyntheticProblem>;

struct UniformPolicy {
  double per_step_budget = 0.0;
};

/// System-1 budget when d <= threshold, System-2 budget otherwise.
struct SelectivePolicy {
  double threshold = 0.5;
  double s1_budget = 0.0;
  double s2_budget = 0.0;
};

using AllocationPolicy = std::variant<UniformPolicy, SelectivePolicy>;

/// Throws ConfigError on non-positive budgets or a threshold outside [0,1].
void validate_policy(const AllocationPolicy& policy);
/// Throws ConfigError on an empty problem or out-of-range parameters.
void validate_problem(const SyntheticProblem& problem);

double allocated_budget(const SyntheticSubProblem& sub, const AllocationPolicy& policy);

/// 1 / (1 + exp(-alpha * (budget - b_req))).
double success_probability(const SyntheticSubProblem& sub, double budget);

/// Exact success probability of a problem: the product over its sub-problems.
double analytic_success(const SyntheticProblem& problem, const AllocationPolicy& policy);

/// Budgets are spent regardless of outcome, so spend is deterministic.
double problem_spend(const SyntheticProblem& problem, const AllocationPolicy& policy);

double expected_accuracy(const Ensemble& ensemble, const AllocationPolicy& policy);
double expected_spend(const Ensemble& ensemble, const AllocationPolicy& policy);

struct SolveOutcome {
  bool success = false;
  double tokens_spent = 0.0;
};

/// Sub-problem j succeeds iff u_j < p(b_j), where u_j is the j-th uniform
/// draw of the stream seeded by `seed`. Reusing a seed reuses the draws, so
/// outcomes are monotone in every budget.
SolveOutcome simulate_solve(const SyntheticProblem& problem, const AllocationPolicy& policy,
                            std::uint64_t seed);

/// The j-th uniform draw in [0,1) of the stream for `seed`.
double uniform_draw(std::uint64_t seed, std::size_t j);

/// Seed of trial t. Trial t solves ensemble[t % ensemble.size()].
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial);

struct PolicyStats {
  double accuracy = 0.0;           // Monte-Carlo estimate
  double sigma = 0.0;              // binomial standard error of `accuracy`
  double half_width = 0.0;         // 95% confidence half-width
  double analytic_accuracy = 0.0;  // over the same trial-to-problem assignment
  double mean_tokens = 0.0;
};

/// Trial t solves ensemble[t % size] with draws from trial_seed(seed, t).
PolicyStats evaluate_policy(const Ensemble& ensemble, const AllocationPolicy& policy, int trials,
                            std::uint64_t seed);

struct PolicyComparison {
  PolicyStats uniform;
  PolicyStats selective;
  double difference = 0.0;        // selective - uniform
  double difference_sigma = 0.0;  // sqrt(sigma_u^2 + sigma_s^2)
  double matched_spend = 0.0;     // mean of the two expected spends
  int trials = 0;
};

class BudgetMismatchError : public Error {
 public:
  using Error::Error;
};

/// Requires the expected spends of the two policies to agree within 1%.
PolicyComparison compare_policies(const Ensemble& ensemble, const UniformPolicy& uniform,
                                  const SelectivePolicy& selective, int trials,
                                  std::uint64_t seed);

/// Fraction of sub-problems with d > threshold; 0 for an empty ensemble.
double hard_fraction(const Ensemble& ensemble, double threshold);

struct CurvePoint {
  double s2_budget = 0.0;
  double accuracy = 0.0;
  double analytic_accuracy = 0.0;
  double mean_tokens = 0.0;
};

/// Selective policy with fixed threshold and s1_budget across an ascending
/// s2 grid. Every grid point reuses the same per-trial draws.
std::vector<CurvePoint> scaling_curve(const Ensemble& ensemble, std::span<const double> s2_grid,
                                      double threshold, double s1_budget, int trials,
                                      std::uint64_t seed);

std::string curve_csv(std::span<const CurvePoint> curve);

/// JSONL, one problem per line: [{"d": 0.1, "alpha": 0.002}, ...]. "alpha",
/// "b_min" and "b_max" are optional.
Ensemble parse_ensemble(const std::string& text);
Ensemble load_ensemble(const std::filesystem::path& path);

}  // namespace scale::sim
