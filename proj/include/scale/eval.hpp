#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scale/core.hpp"

namespace scale {

/// Canonical answer form. Integers lose '+' and leading zeros, fractions and
/// finite decimals become reduced "p/q" (or an integer), anything else is
/// lowercased with whitespace collapsed. Wrappers (\boxed{}, $...$) and
/// trailing punctuation are stripped first.
std::string normalize_answer(std::string_view text);

bool answers_equal(std::string_view a, std::string_view b);

/// Percentage of true values. Throws std::invalid_argument on empty input.
double pass_at_1(std::span<const bool> correct);

/// Whether orchestration overhead (decomposition, judging, assessment)
/// counts toward Tok and Tpi.
struct TokenConvention {
  bool tok_includes_overhead = true;
  bool tpi_includes_overhead = false;
};

struct MetricsReport {
  double acc_percent = 0.0;
  double mean_tok = 0.0;
  std::optional<double> mean_tpi;
  // The other side of the convention toggle.
  double mean_tok_alt = 0.0;
  std::optional<double> mean_tpi_alt;
  double mean_overhead = 0.0;
  int n_problems = 0;
  int n_samples = 0;
  int failed = 0;
  bool estimated_tokens_present = false;
};

/// True when the trace did not fail and its answer matches the gold answer.
bool trace_correct(const SolveTrace& trace);

/// Tok of one trace under the convention.
double trace_tok(const SolveTrace& trace, bool include_overhead);
/// Tpi of one trace under the convention; nullopt where undefined.
std::optional<double> trace_tpi(const SolveTrace& trace, bool include_overhead);

/// Acc is the mean over problems of per-problem pass@1 (failed samples are
/// incorrect); token means run over non-failed traces.
MetricsReport compute_metrics(std::span<const SolveTrace> traces,
                              TokenConvention convention = {});

}  // namespace scale
