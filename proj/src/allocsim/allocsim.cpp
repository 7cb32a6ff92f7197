#include "scale/allocsim.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "scale/serialize.hpp"

namespace scale::sim {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

template <typename... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <typename... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

const SyntheticProblem& problem_for_trial(const Ensemble& ensemble, int t) {
  return ensemble[static_cast<std::size_t>(t) % ensemble.size()];
}

void require_ensemble(const Ensemble& ensemble) {
  if (ensemble.empty()) throw ConfigError("ensemble", "ensemble is empty");
  for (const auto& p : ensemble) validate_problem(p);
}

}  // namespace

void validate_policy(const AllocationPolicy& policy) {
  std::visit(Overloaded{
                 [](const UniformPolicy& u) {
                   if (!(u.per_step_budget > 0.0)) {
                     throw ConfigError("per_step_budget", "per-step budget must be > 0");
                   }
                 },
                 [](const SelectivePolicy& s) {
                   if (!(s.threshold >= 0.0 && s.threshold <= 1.0)) {
                     throw ConfigError("threshold", "threshold out of [0,1]");
                   }
                   if (!(s.s1_budget > 0.0)) throw ConfigError("s1_budget", "s1 budget must be > 0");
                   if (!(s.s2_budget > 0.0)) throw ConfigError("s2_budget", "s2 budget must be > 0");
                 },
             },
             policy);
}

void validate_problem(const SyntheticProblem& problem) {
  if (problem.subproblems.empty()) throw ConfigError("ensemble", "problem has no sub-problems");
  for (const auto& s : problem.subproblems) {
    if (!(s.difficulty >= 0.0 && s.difficulty <= 1.0)) {
      throw ConfigError("d", "difficulty out of [0,1]");
    }
    if (!(s.alpha > 0.0)) throw ConfigError("alpha", "alpha must be > 0");
    if (!(s.b_min <= s.b_max)) throw ConfigError("b_min", "b_min must not exceed b_max");
  }
}

double allocated_budget(const SyntheticSubProblem& sub, const AllocationPolicy& policy) {
  return std::visit(Overloaded{
                        [](const UniformPolicy& u) { return u.per_step_budget; },
                        [&](const SelectivePolicy& s) {
                          return sub.difficulty <= s.threshold ? s.s1_budget : s.s2_budget;
                        },
                    },
                    policy);
}

double success_probability(const SyntheticSubProblem& sub, double budget) {
  return 1.0 / (1.0 + std::exp(-sub.alpha * (budget - sub.required_budget())));
}

double analytic_success(const SyntheticProblem& problem, const AllocationPolicy& policy) {
  double p = 1.0;
  for (const auto& s : problem.subproblems) p *= success_probability(s, allocated_budget(s, policy));
  return p;
}

double problem_spend(const SyntheticProblem& problem, const AllocationPolicy& policy) {
  double total = 0.0;
  for (const auto& s : problem.subproblems) total += allocated_budget(s, policy);
  return total;
}

double expected_accuracy(const Ensemble& ensemble, const AllocationPolicy& policy) {
  if (ensemble.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : ensemble) sum += analytic_success(p, policy);
  return sum / static_cast<double>(ensemble.size());
}

double expected_spend(const Ensemble& ensemble, const AllocationPolicy& policy) {
  if (ensemble.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : ensemble) sum += problem_spend(p, policy);
  return sum / static_cast<double>(ensemble.size());
}

double uniform_draw(std::uint64_t seed, std::size_t j) {
  const auto bits = splitmix64(seed + kGolden * (static_cast<std::uint64_t>(j) + 1));
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) {
  return splitmix64(seed ^ splitmix64(trial));
}

SolveOutcome simulate_solve(const SyntheticProblem& problem, const AllocationPolicy& policy,
                            std::uint64_t seed) {
  SolveOutcome outcome;
  outcome.success = true;
  for (std::size_t j = 0; j < problem.subproblems.size(); ++j) {
    const auto& s = problem.subproblems[j];
    const double budget = allocated_budget(s, policy);
    outcome.tokens_spent += budget;
    // Every draw is consumed even after a failure so streams stay aligned.
    if (!(uniform_draw(seed, j) < success_probability(s, budget))) outcome.success = false;
  }
  return outcome;
}

PolicyStats evaluate_policy(const Ensemble& ensemble, const AllocationPolicy& policy, int trials,
                            std::uint64_t seed) {
  require_ensemble(ensemble);
  validate_policy(policy);
  if (trials < 1) throw ConfigError("trials", "trials must be >= 1");
  PolicyStats stats;
  double hits = 0.0;
  double analytic = 0.0;
  double tokens = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto& problem = problem_for_trial(ensemble, t);
    auto outcome = simulate_solve(problem, policy, trial_seed(seed, static_cast<std::uint64_t>(t)));
    hits += outcome.success ? 1.0 : 0.0;
    tokens += outcome.tokens_spent;
    analytic += analytic_success(problem, policy);
  }
  const double n = static_cast<double>(trials);
  stats.accuracy = hits / n;
  stats.analytic_accuracy = analytic / n;
  stats.mean_tokens = tokens / n;
  stats.sigma = std::sqrt(stats.accuracy * (1.0 - stats.accuracy) / n);
  stats.half_width = 1.96 * stats.sigma;
  return stats;
}

PolicyComparison compare_policies(const Ensemble& ensemble, const UniformPolicy& uniform,
                                  const SelectivePolicy& selective, int trials,
                                  std::uint64_t seed) {
  require_ensemble(ensemble);
  validate_policy(uniform);
  validate_policy(selective);
  if (trials < 1) throw ConfigError("trials", "trials must be >= 1");

  const double spend_u = expected_spend(ensemble, uniform);
  const double spend_s = expected_spend(ensemble, selective);
  if (std::abs(spend_u - spend_s) > 0.01 * std::max(spend_u, spend_s)) {
    throw BudgetMismatchError("expected spends differ by more than 1%: uniform " +
                              fixed(spend_u, 1) + ", selective " + fixed(spend_s, 1));
  }

  PolicyComparison out;
  out.trials = trials;
  out.uniform = evaluate_policy(ensemble, uniform, trials, seed);
  out.selective = evaluate_policy(ensemble, selective, trials, seed);
  out.difference = out.selective.accuracy - out.uniform.accuracy;
  out.difference_sigma = std::sqrt(out.uniform.sigma * out.uniform.sigma +
                                   out.selective.sigma * out.selective.sigma);
  out.matched_spend = 0.5 * (spend_u + spend_s);
  return out;
}

double hard_fraction(const Ensemble& ensemble, double threshold) {
  std::size_t hard = 0;
  std::size_t total = 0;
  for (const auto& p : ensemble) {
    for (const auto& s : p.subproblems) {
      ++total;
      if (s.difficulty > threshold) ++hard;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hard) / static_cast<double>(total);
}

std::vector<CurvePoint> scaling_curve(const Ensemble& ensemble, std::span<const double> s2_grid,
                                      double threshold, double s1_budget, int trials,
                                      std::uint64_t seed) {
  require_ensemble(ensemble);
  if (trials < 1) throw ConfigError("trials", "trials must be >= 1");
  for (std::size_t i = 1; i < s2_grid.size(); ++i) {
    if (!(s2_grid[i] > s2_grid[i - 1])) throw ConfigError("grid", "budget grid must be ascending");
  }
  std::vector<CurvePoint> curve;
  for (double budget : s2_grid) {
    SelectivePolicy policy{threshold, s1_budget, budget};
    validate_policy(policy);
    auto stats = evaluate_policy(ensemble, policy, trials, seed);
    curve.push_back(CurvePoint{budget, stats.accuracy, stats.analytic_accuracy, stats.mean_tokens});
  }
  return curve;
}

std::string curve_csv(std::span<const CurvePoint> curve) {
  std::string out = "s2_budget,accuracy,analytic_accuracy,mean_tokens\n";
  for (const auto& p : curve) {
    out += fixed(p.s2_budget, 0) + "," + fixed(p.accuracy, 6) + "," +
           fixed(p.analytic_accuracy, 6) + "," + fixed(p.mean_tokens, 1) + "\n";
  }
  return out;
}

Ensemble parse_ensemble(const std::string& text) {
  Ensemble ensemble;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "ensemble line " + std::to_string(line_no) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where + "malformed JSON (" + e.what() + ")");
    }
    if (!j.is_array() || j.empty()) throw ParseError(where + "expected a non-empty array");
    SyntheticProblem problem;
    for (const auto& entry : j) {
      if (!entry.is_object() || !entry.contains("d") || !entry["d"].is_number()) {
        throw ParseError(where + "each entry needs a numeric \"d\"");
      }
      SyntheticSubProblem s;
      s.difficulty = entry["d"].get<double>();
      try {
        if (entry.contains("alpha")) s.alpha = entry["alpha"].get<double>();
        if (entry.contains("b_min")) s.b_min = entry["b_min"].get<double>();
        if (entry.contains("b_max")) s.b_max = entry["b_max"].get<double>();
      } catch (const nlohmann::json::type_error&) {
        throw ParseError(where + "\"alpha\", \"b_min\" and \"b_max\" must be numbers");
      }
      problem.subproblems.push_back(s);
    }
    try {
      validate_problem(problem);
    } catch (const ConfigError& e) {
      throw ParseError(where + e.what());
    }
    ensemble.push_back(std::move(problem));
  }
  return ensemble;
}

Ensemble load_ensemble(const std::filesystem::path& path) {
  return parse_ensemble(read_file(path));
}

}  // namespace scale::sim
