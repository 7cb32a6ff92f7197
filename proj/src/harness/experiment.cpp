#include "parallel.hpp"
#include "scale/harness.hpp"

namespace scale {

SolveTrace run_method(const Problem& problem, const MethodSpec& method, const ScaleConfig& config,
                      Backend& backend, const PromptTemplates& templates, const ScalePlan* plan) {
  switch (method.method) {
    case Method::Scale:
      return ScalePipeline(backend, config, templates).run(problem, plan);
    case Method::Cot:
      return run_cot(problem, config, backend);
    case Method::Majority:
      return run_majority_vote(problem, method.majority_samples, config, backend);
    case Method::Iterative:
      return run_iterative(problem, method.iterative, config, backend);
  }
  throw Error("unknown method");
}

ExperimentReport run_experiment(std::span<const Problem> problems, const ExperimentOptions& options,
                                Backend& backend) {
  validate_config(options.config);
  if (options.method.method == Method::Majority && options.method.majority_samples < 1) {
    throw ConfigError("majority_samples", "majority voting needs at least one sample");
  }
  if (options.method.method == Method::Iterative) validate_iterative_config(options.method.iterative);
  if (problems.empty()) throw Error("dataset is empty");

  const auto samples = static_cast<std::size_t>(options.config.samples_per_problem);
  ExperimentReport report;
  report.dataset_name = options.dataset_name;
  report.method = options.method;
  report.config = options.config;
  report.convention = options.convention;
  report.traces.resize(problems.size() * samples);

  detail::parallel_for(report.traces.size(), options.workers, [&](std::size_t job) {
    const auto& problem = problems[job / samples];
    const auto k = static_cast<int>(job % samples);
    ScaleConfig config = options.config;
    config.seed = derive_seed(options.config.seed, problem.id, static_cast<std::uint64_t>(k));
    auto trace = run_method(problem, options.method, config, backend, options.templates);
    trace.sample_index = k;
    report.traces[job] = std::move(trace);
  });

  report.metrics = compute_metrics(report.traces, options.convention);
  return report;
}

}  // namespace scale
