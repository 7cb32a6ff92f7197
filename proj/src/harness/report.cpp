#include <cstdio>
#include <map>

#include <nlohmann/json.hpp>

#include "scale/harness.hpp"
#include "scale/serialize.hpp"

namespace scale {
namespace {

std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

std::string opt_fixed(const std::optional<double>& v, int precision) {
  return v ? fixed(*v, precision) : "/";
}

std::string thousands(double v) { return fixed(v / 1000.0, 1); }

std::string method_label(const MethodSpec& m) {
  std::string label(to_string(m.method));
  if (m.method == Method::Majority) label += " (m=" + std::to_string(m.majority_samples) + ")";
  return label;
}

std::string convention_text(bool tok_overhead, bool tpi_overhead) {
  return std::string("Tok ") + (tok_overhead ? "includes" : "excludes") +
         " orchestration overhead; Tpi " + (tpi_overhead ? "includes" : "excludes") + " it";
}

void require_traces(const ExperimentReport& report) {
  if (report.traces.empty()) throw Error("cannot emit a report for an empty run");
}

std::string sweep_value(SweepKind kind, double v) {
  return kind == SweepKind::Threshold ? fixed(v, 2) : fixed(v, 0);
}

}  // namespace

std::string render_report(const ExperimentReport& report, ReportFormat format) {
  require_traces(report);
  const auto& m = report.metrics;
  const auto& conv = report.convention;

  if (format == ReportFormat::Csv) {
    std::string out =
        "dataset,method,acc_percent,mean_tok,mean_tpi,mean_tok_alt,mean_tpi_alt,mean_overhead,"
        "n_problems,n_samples,failed,estimated_tokens\n";
    out += report.dataset_name + "," + std::string(to_string(report.method.method)) + "," +
           fixed(m.acc_percent, 2) + "," + fixed(m.mean_tok, 1) + "," + opt_fixed(m.mean_tpi, 1) +
           "," + fixed(m.mean_tok_alt, 1) + "," + opt_fixed(m.mean_tpi_alt, 1) + "," +
           fixed(m.mean_overhead, 1) + "," + std::to_string(m.n_problems) + "," +
           std::to_string(m.n_samples) + "," + std::to_string(m.failed) + "," +
           (m.estimated_tokens_present ? "true" : "false") + "\n";
    return out;
  }

  std::string out = "# Results: " + report.dataset_name + "\n\n";
  if (m.estimated_tokens_present) {
    out += "> Note: the backend did not report usage for some calls; those token counts are "
           "local estimates.\n\n";
  }
  out += "| Method | Acc | Tpi | Tok | Tpi (k) | Tok (k) |\n";
  out += "|---|---:|---:|---:|---:|---:|\n";
  out += "| " + method_label(report.method) + " | " + fixed(m.acc_percent, 2) + " | " +
         opt_fixed(m.mean_tpi, 1) + " | " + fixed(m.mean_tok, 1) + " | " +
         (m.mean_tpi ? thousands(*m.mean_tpi) : "/") + " | " + thousands(m.mean_tok) + " |\n\n";

  out += "Token convention: " + convention_text(conv.tok_includes_overhead, conv.tpi_includes_overhead) +
         ".\n\n";
  out += "| Convention | Tok | Tpi |\n|---|---:|---:|\n";
  out += "| reported | " + fixed(m.mean_tok, 1) + " | " + opt_fixed(m.mean_tpi, 1) + " |\n";
  out += "| alternate (" +
         convention_text(!conv.tok_includes_overhead, !conv.tpi_includes_overhead) + ") | " +
         fixed(m.mean_tok_alt, 1) + " | " + opt_fixed(m.mean_tpi_alt, 1) + " |\n\n";
  out += "Mean overhead tokens per trace: " + fixed(m.mean_overhead, 1) + "\n\n";

  const auto& c = report.config;
  out += "## Run\n\n";
  out += "- problems: " + std::to_string(m.n_problems) + "\n";
  out += "- traces: " + std::to_string(m.n_samples) + "\n";
  out += "- failed traces: " + std::to_string(m.failed) + "\n";
  out += "- threshold: " + fixed(c.threshold, 2) + "\n";
  out += "- k_decompositions: " + std::to_string(c.k_decompositions) + "\n";
  out += "- system1_max_tokens: " + std::to_string(c.system1_max_tokens) + "\n";
  out += "- system2_max_tokens: " + std::to_string(c.system2_max_tokens) + "\n";
  out += "- samples_per_problem: " + std::to_string(c.samples_per_problem) + "\n";
  out += "- seed: " + std::to_string(c.seed) + "\n\n";

  // Per-problem correctness, in dataset order.
  std::vector<std::string> order;
  std::map<std::string, std::pair<int, int>> tally;
  for (const auto& t : report.traces) {
    auto [it, inserted] = tally.try_emplace(t.problem.id, 0, 0);
    if (inserted) order.push_back(t.problem.id);
    it->second.first += trace_correct(t) ? 1 : 0;
    it->second.second += 1;
  }
  out += "## Problems\n\n| Problem | Correct | Samples |\n|---|---:|---:|\n";
  for (const auto& id : order) {
    out += "| " + id + " | " + std::to_string(tally[id].first) + " | " +
           std::to_string(tally[id].second) + " |\n";
  }
  return out;
}

std::string render_sweep(const SweepResult& sweep, ReportFormat format) {
  if (sweep.points.empty()) throw Error("cannot emit a report for an empty sweep");
  const bool tau = sweep.kind == SweepKind::Threshold;
  bool estimated = false;
  for (const auto& r : sweep.reports) estimated = estimated || r.metrics.estimated_tokens_present;

  if (format == ReportFormat::Csv) {
    std::string out = tau ? "threshold,acc_percent,mean_tok,mean_tok_k,hard_percent\n"
                          : "system2_max_tokens,acc_percent,mean_tok,mean_tok_k\n";
    for (const auto& p : sweep.points) {
      out += sweep_value(sweep.kind, p.value) + "," + fixed(p.acc_percent, 2) + "," +
             fixed(p.mean_tok, 1) + "," + thousands(p.mean_tok);
      if (tau) out += "," + opt_fixed(p.hard_fraction_percent, 2);
      out += "\n";
    }
    return out;
  }

  std::string out = tau ? "# Threshold sweep\n\n" : "# System-2 budget sweep\n\n";
  if (estimated) {
    out += "> Note: the backend did not report usage for some calls; those token counts are "
           "local estimates.\n\n";
  }
  if (tau) {
    out += "| Threshold | Acc | Tok (k) | Hard (%) |\n|---:|---:|---:|---:|\n";
    for (const auto& p : sweep.points) {
      out += "| " + fixed(p.value, 2) + " | " + fixed(p.acc_percent, 2) + " | " +
             thousands(p.mean_tok) + " | " + opt_fixed(p.hard_fraction_percent, 2) + " |\n";
    }
  } else {
    out += "| System-2 budget | Acc | Tok | Tok (k) |\n|---:|---:|---:|---:|\n";
    for (const auto& p : sweep.points) {
      out += "| " + fixed(p.value, 0) + " | " + fixed(p.acc_percent, 2) + " | " +
             fixed(p.mean_tok, 1) + " | " + thousands(p.mean_tok) + " |\n";
    }
  }
  return out;
}

void emit_report(const ExperimentReport& report, ReportFormat format,
                 const std::filesystem::path& path) {
  write_file(path, render_report(report, format));
}

std::string trace_file_stem(const std::string& id, int sample_index) {
  std::string stem;
  bool changed = id.empty();
  for (char c : id) {
    const bool safe = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                      c == '-' || c == '_' || c == '.';
    stem += safe ? c : '_';
    changed = changed || !safe;
  }
  if (stem.find_first_not_of('.') == std::string::npos) changed = true;
  if (changed) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : id) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%08llx", static_cast<unsigned long long>(h & 0xffffffffULL));
    stem += "-";
    stem += buf;
  }
  return stem + "__s" + std::to_string(sample_index);
}

void write_run_directory(const ExperimentReport& report, const std::filesystem::path& dir) {
  require_traces(report);
  nlohmann::ordered_json snapshot;
  snapshot["dataset"] = report.dataset_name;
  snapshot["method"] = std::string(to_string(report.method.method));
  snapshot["majority_samples"] = report.method.majority_samples;
  snapshot["iterative"] = {{"per_round_max_tokens", report.method.iterative.per_round_max_tokens},
                           {"max_rounds", report.method.iterative.max_rounds},
                           {"summary_max_tokens", report.method.iterative.summary_max_tokens}};
  snapshot["convention"] = {{"tok_includes_overhead", report.convention.tok_includes_overhead},
                            {"tpi_includes_overhead", report.convention.tpi_includes_overhead}};
  snapshot["config"] = nlohmann::json::parse(serialize_config(report.config));
  write_file(dir / "config.json", snapshot.dump(2) + "\n");

  for (const auto& trace : report.traces) {
    write_file(dir / "traces" / (trace_file_stem(trace.problem.id, trace.sample_index) + ".json"),
               serialize_trace(trace));
  }
  write_file(dir / "metrics.csv", render_report(report, ReportFormat::Csv));
  write_file(dir / "report.md", render_report(report, ReportFormat::Markdown));
}

void write_sweep_directory(const SweepResult& sweep, const std::filesystem::path& dir) {
  write_file(dir / "sweep.csv", render_sweep(sweep, ReportFormat::Csv));
  write_file(dir / "report.md", render_sweep(sweep, ReportFormat::Markdown));
  for (std::size_t p = 0; p < sweep.reports.size(); ++p) {
    const auto label = (sweep.kind == SweepKind::Threshold ? "tau_" : "budget_") +
                       sweep_value(sweep.kind, sweep.points[p].value);
    write_run_directory(sweep.reports[p], dir / "points" / label);
  }
}

}  // namespace scale
