#include <map>
#include <string>

#include "scale/eval.hpp"

namespace scale {

bool trace_correct(const SolveTrace& trace) {
  if (trace.failed || trace.extraction_failed || trace.final_answer.empty()) return false;
  if (!trace.problem.gold_answer) return false;
  return answers_equal(trace.final_answer, *trace.problem.gold_answer);
}

double trace_tok(const SolveTrace& trace, bool include_overhead) {
  const auto tok = include_overhead ? trace.total_tokens
                                    : trace.total_tokens - trace.overhead_tokens;
  return static_cast<double>(tok);
}

std::optional<double> trace_tpi(const SolveTrace& trace, bool include_overhead) {
  if (!trace.n_iterations || *trace.n_iterations <= 0) return std::nullopt;
  return trace_tok(trace, include_overhead) / static_cast<double>(*trace.n_iterations);
}

MetricsReport compute_metrics(std::span<const SolveTrace> traces, TokenConvention convention) {
  MetricsReport report;
  report.n_samples = static_cast<int>(traces.size());

  // Per-problem correctness, keyed by problem id.
  std::map<std::string, std::pair<int, int>> per_problem;  // id -> (hits, samples)
  double tok = 0.0, tok_alt = 0.0, overhead = 0.0;
  double tpi = 0.0, tpi_alt = 0.0;
  int counted = 0, tpi_count = 0;

  for (const auto& trace : traces) {
    auto& [hits, samples] = per_problem[trace.problem.id];
    ++samples;
    if (trace_correct(trace)) ++hits;
    if (has_estimated_tokens(trace)) report.estimated_tokens_present = true;
    if (trace.failed) {
      ++report.failed;
      continue;
    }
    ++counted;
    tok += trace_tok(trace, convention.tok_includes_overhead);
    tok_alt += trace_tok(trace, !convention.tok_includes_overhead);
    overhead += static_cast<double>(trace.overhead_tokens);
    auto t = trace_tpi(trace, convention.tpi_includes_overhead);
    auto t_alt = trace_tpi(trace, !convention.tpi_includes_overhead);
    if (t && t_alt) {
      tpi += *t;
      tpi_alt += *t_alt;
      ++tpi_count;
    }
  }

  report.n_problems = static_cast<int>(per_problem.size());
  if (!per_problem.empty()) {
    double acc_sum = 0.0;
    for (const auto& [id, counts] : per_problem) {
      acc_sum += 100.0 * counts.first / counts.second;
    }
    report.acc_percent = acc_sum / static_cast<double>(per_problem.size());
  }
  if (counted > 0) {
    report.mean_tok = tok / counted;
    report.mean_tok_alt = tok_alt / counted;
    report.mean_overhead = overhead / counted;
  }
  if (tpi_count > 0) {
    report.mean_tpi = tpi / tpi_count;
    report.mean_tpi_alt = tpi_alt / tpi_count;
  }
  return report;
}

}  // namespace scale
