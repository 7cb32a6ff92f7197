#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scale/backend.hpp"
#include "scale/baselines.hpp"
#include "scale/core.hpp"
#include "scale/eval.hpp"
#include "scale/pipeline.hpp"

namespace scale {

// Datasets -------------------------------------------------------------------

/// JSONL with {"id", "problem", "answer"} per line. Blank lines are skipped.
/// Errors name the 1-based line number or the duplicated id.
std::vector<Problem> parse_dataset(const std::string& text);
std::vector<Problem> load_dataset(const std::filesystem::path& path);

// Experiments ----------------------------------------------------------------

struct MethodSpec {
  Method method = Method::Scale;
  int majority_samples = 8;
  IterativeConfig iterative;
};

struct ExperimentOptions {
  MethodSpec method;
  ScaleConfig config;
  PromptTemplates templates = PromptTemplates::defaults();
  TokenConvention convention;
  int workers = 8;
  std::string dataset_name = "dataset";
};

struct ExperimentReport {
  std::string dataset_name;
  MethodSpec method;
  ScaleConfig config;
  TokenConvention convention;
  std::vector<SolveTrace> traces;  // problem-major, then sample order
  MetricsReport metrics;
};

/// One trace of `method` with config.seed used as-is. A plan (scale only)
/// skips decomposition and the covered assessments.
SolveTrace run_method(const Problem& problem, const MethodSpec& method, const ScaleConfig& config,
                      Backend& backend, const PromptTemplates& templates,
                      const ScalePlan* plan = nullptr);

/// Sample k of problem p runs with seed derive_seed(config.seed, p.id, k).
ExperimentReport run_experiment(std::span<const Problem> problems, const ExperimentOptions& options,
                                Backend& backend);

// Sweeps -----------------------------------------------------------------------

struct SweepPoint {
  double value = 0.0;  // tau or system2_max_tokens
  double acc_percent = 0.0;
  double mean_tok = 0.0;
  std::optional<double> hard_fraction_percent;  // threshold sweeps only
};

enum class SweepKind { Threshold, Budget };

struct SweepResult {
  SweepKind kind = SweepKind::Threshold;
  std::vector<SweepPoint> points;
  std::vector<ExperimentReport> reports;  // one per point
};

inline constexpr std::int64_t kDefaultBudgetGrid[] = {4096, 8192, 16384, 32768};

/// Percentage of solved sub-problems with d > tau over non-failed traces.
double hard_fraction_percent(std::span<const SolveTrace> traces, double threshold);

/// The first point runs in full; later points reuse its decomposition and
/// difficulty assessments per (problem, sample) unless fresh_per_point.
SweepResult threshold_sweep(std::span<const Problem> problems, std::span<const double> thresholds,
                            const ExperimentOptions& options, Backend& backend,
                            bool fresh_per_point = false);

/// Varies system2_max_tokens, holding system1_max_tokens fixed. Every budget
/// must be >= system1_max_tokens.
SweepResult budget_sweep(std::span<const Problem> problems, std::span<const std::int64_t> budgets,
                         const ExperimentOptions& options, Backend& backend,
                         bool fresh_per_point = false);

// SFT export ---------------------------------------------------------------------

struct ExportSummary {
  int kept = 0;
  int dropped = 0;
  int failed = 0;  // subset of dropped: trace failed outright
};

/// Ordered "Sub-problem i / Solution i" concatenation of a scale trace.
std::string render_trace_text(const SolveTrace& trace);

/// Runs SCALE once per problem and writes the traces whose answer equals the
/// gold answer as JSONL records {id, problem, trace_text, final_answer,
/// token_stats}.
ExportSummary export_sft_traces(std::span<const Problem> problems, const ScaleConfig& config,
                                Backend& backend, const std::filesystem::path& out_path,
                                const PromptTemplates& templates = PromptTemplates::defaults(),
                                int workers = 8);

// Reports -------------------------------------------------------------------------

enum class ReportFormat { Csv, Markdown };

/// Throws Error when the report holds no traces.
std::string render_report(const ExperimentReport& report, ReportFormat format);
std::string render_sweep(const SweepResult& sweep, ReportFormat format);
void emit_report(const ExperimentReport& report, ReportFormat format,
                 const std::filesystem::path& path);

/// File-system safe stem for a problem id; ids that need escaping get a
/// hash suffix so distinct ids never collide.
std::string trace_file_stem(const std::string& id, int sample_index);

/// config.json, traces/<stem>.json, metrics.csv and report.md.
void write_run_directory(const ExperimentReport& report, const std::filesystem::path& dir);
/// sweep.csv, report.md and one run directory per point under points/.
void write_sweep_directory(const SweepResult& sweep, const std::filesystem::path& dir);

}  // namespace scale
