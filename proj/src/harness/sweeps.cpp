#include "parallel.hpp"
#include "scale/harness.hpp"

namespace scale {
namespace {

// Runs one experiment per config. Point 0 runs in full; with reuse, later
// points replay its per-(problem, sample) plan for scale traces.
std::vector<ExperimentReport> run_points(std::span<const Problem> problems,
                                         const std::vector<ScaleConfig>& configs,
                                         const ExperimentOptions& options, Backend& backend,
                                         bool fresh_per_point) {
  std::vector<ExperimentReport> reports;
  ExperimentOptions first = options;
  first.config = configs.front();
  reports.push_back(run_experiment(problems, first, backend));

  const bool reuse = !fresh_per_point && options.method.method == Method::Scale;
  std::vector<std::optional<ScalePlan>> plans;
  if (reuse) {
    for (const auto& trace : reports.front().traces) plans.push_back(plan_from_trace(trace));
  }

  const auto samples = static_cast<std::size_t>(options.config.samples_per_problem);
  for (std::size_t p = 1; p < configs.size(); ++p) {
    ExperimentOptions point = options;
    point.config = configs[p];
    if (!reuse) {
      reports.push_back(run_experiment(problems, point, backend));
      continue;
    }
    validate_config(point.config);
    ExperimentReport report;
    report.dataset_name = point.dataset_name;
    report.method = point.method;
    report.config = point.config;
    report.convention = point.convention;
    report.traces.resize(problems.size() * samples);
    detail::parallel_for(report.traces.size(), point.workers, [&](std::size_t job) {
      const auto& problem = problems[job / samples];
      const auto k = static_cast<int>(job % samples);
      ScaleConfig config = point.config;
      config.seed = derive_seed(point.config.seed, problem.id, static_cast<std::uint64_t>(k));
      const ScalePlan* plan = plans[job] ? &*plans[job] : nullptr;
      auto trace = run_method(problem, point.method, config, backend, point.templates, plan);
      trace.sample_index = k;
      report.traces[job] = std::move(trace);
    });
    report.metrics = compute_metrics(report.traces, point.convention);
    reports.push_back(std::move(report));
  }
  return reports;
}

}  // namespace

double hard_fraction_percent(std::span<const SolveTrace> traces, double threshold) {
  std::size_t hard = 0;
  std::size_t total = 0;
  for (const auto& trace : traces) {
    if (trace.failed || trace.method != Method::Scale) continue;
    for (const auto& s : trace.subsolutions) {
      if (s.kind != SolutionKind::Step) continue;
      ++total;
      if (select_mode(s.difficulty.value, threshold) == ProcessingMode::System2) ++hard;
    }
  }
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(hard) / static_cast<double>(total);
}

SweepResult threshold_sweep(std::span<const Problem> problems, std::span<const double> thresholds,
                            const ExperimentOptions& options, Backend& backend,
                            bool fresh_per_point) {
  if (options.method.method != Method::Scale) {
    throw ConfigError("method", "threshold sweeps apply to the scale method only");
  }
  if (thresholds.empty()) throw ConfigError("threshold", "threshold sweep needs at least one value");
  std::vector<ScaleConfig> configs;
  for (double tau : thresholds) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("threshold", "threshold out of [0,1]");
    ScaleConfig c = options.config;
    c.threshold = tau;
    configs.push_back(c);
  }

  SweepResult result;
  result.kind = SweepKind::Threshold;
  result.reports = run_points(problems, configs, options, backend, fresh_per_point);
  for (std::size_t p = 0; p < configs.size(); ++p) {
    const auto& report = result.reports[p];
    result.points.push_back(SweepPoint{thresholds[p], report.metrics.acc_percent,
                                       report.metrics.mean_tok,
                                       hard_fraction_percent(report.traces, thresholds[p])});
  }
  return result;
}

SweepResult budget_sweep(std::span<const Problem> problems, std::span<const std::int64_t> budgets,
                         const ExperimentOptions& options, Backend& backend,
                         bool fresh_per_point) {
  if (budgets.empty()) budgets = kDefaultBudgetGrid;
  std::vector<ScaleConfig> configs;
  for (auto budget : budgets) {
    if (budget <= 0) throw ConfigError("system2_max_tokens", "budget must be positive");
    if (budget < options.config.system1_max_tokens) {
      throw ConfigError("system2_max_tokens", "budget " + std::to_string(budget) +
                                                  " is below system1_max_tokens " +
                                                  std::to_string(options.config.system1_max_tokens));
    }
    ScaleConfig c = options.config;
    c.system2_max_tokens = budget;
    configs.push_back(c);
  }

  SweepResult result;
  result.kind = SweepKind::Budget;
  result.reports = run_points(problems, configs, options, backend, fresh_per_point);
  for (std::size_t p = 0; p < configs.size(); ++p) {
    const auto& report = result.reports[p];
    result.points.push_back(SweepPoint{static_cast<double>(budgets[p]),
                                       report.metrics.acc_percent, report.metrics.mean_tok,
                                       std::nullopt});
  }
  return result;
}

}  // namespace scale
