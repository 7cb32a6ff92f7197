#include <fstream>

#include <nlohmann/json.hpp>

#include "parallel.hpp"
#include "scale/harness.hpp"

namespace scale {

std::string render_trace_text(const SolveTrace& trace) {
  std::string out;
  for (std::size_t i = 0; i < trace.subsolutions.size(); ++i) {
    const auto& s = trace.subsolutions[i];
    if (s.kind != SolutionKind::Step) continue;
    const auto n = std::to_string(s.subproblem_index);
    std::string statement;
    for (const auto& sp : trace.decomposition.subproblems) {
      if (sp.index == s.subproblem_index) statement = sp.statement;
    }
    if (!out.empty()) out += "\n\n";
    out += "Sub-problem " + n + ": " + statement + "\nSolution " + n + ":\n" + s.solution_text;
  }
  return out;
}

ExportSummary export_sft_traces(std::span<const Problem> problems, const ScaleConfig& config,
                                Backend& backend, const std::filesystem::path& out_path,
                                const PromptTemplates& templates, int workers) {
  validate_config(config);
  for (const auto& p : problems) {
    if (!p.gold_answer) throw Error("problem " + p.id + " has no gold answer");
  }

  std::vector<SolveTrace> traces(problems.size());
  detail::parallel_for(problems.size(), workers, [&](std::size_t i) {
    ScaleConfig c = config;
    c.seed = derive_seed(config.seed, problems[i].id, 0);
    traces[i] = ScalePipeline(backend, c, templates).run(problems[i]);
  });

  ExportSummary summary;
  std::string body;
  for (const auto& trace : traces) {
    if (trace.failed) ++summary.failed;
    if (!trace_correct(trace)) {
      ++summary.dropped;
      continue;
    }
    std::int64_t solution_tokens = 0;
    for (const auto& s : trace.subsolutions) solution_tokens += s.usage.completion_tokens;
    nlohmann::ordered_json record;
    record["id"] = trace.problem.id;
    record["problem"] = trace.problem.statement;
    record["trace_text"] = render_trace_text(trace);
    record["final_answer"] = trace.final_answer;
    record["token_stats"] = {{"total_tokens", trace.total_tokens},
                             {"overhead_tokens", trace.overhead_tokens},
                             {"solution_tokens", solution_tokens},
                             {"n_subproblems", trace.subsolutions.size()}};
    body += record.dump() + "\n";
    ++summary.kept;
  }

  if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + out_path.string());
  out << body;
  if (!out) throw Error("write failed for " + out_path.string());
  return summary;
}

}  // namespace scale
