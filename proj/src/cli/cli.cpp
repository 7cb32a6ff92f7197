#include "scale/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <ostream>

#include <CLI11.hpp>

#include "scale/allocsim.hpp"
#include "scale/serialize.hpp"

namespace scale::cli {
namespace {

// A layered setting: config-file key, environment suffix and flag share the
// same name (flag spelled with dashes).
struct Setting {
  const char* key;
  const char* flag;
  const char* help;
};

constexpr Setting kSettings[] = {
    {"threshold", "--threshold", "Difficulty threshold tau in [0,1]"},
    {"k_decompositions", "--k", "Number of candidate decompositions"},
    {"system1_max_tokens", "--system1-max-tokens", "Token cap for System-1 calls"},
    {"system2_max_tokens", "--system2-max-tokens", "Token cap for System-2 calls"},
    {"samples_per_problem", "--samples", "Samples per problem"},
    {"seed", "--seed", "Base seed"},
    {"temperature", "--temperature", "Sampling temperature"},
    {"top_p", "--top-p", "Nucleus sampling mass"},
    {"retries", "--retries", "Retries per backend call"},
    {"method", "--method", "scale | cot | majority | iterative"},
    {"votes", "--votes", "Majority voting: chains per trace"},
    {"max_rounds", "--max-rounds", "Iterative baseline: maximum rounds"},
    {"round_max_tokens", "--round-max-tokens", "Iterative baseline: tokens per round"},
    {"summary_max_tokens", "--summary-max-tokens", "Iterative baseline: tokens per summary"},
    {"backend", "--backend", "mock | http"},
    {"script", "--script", "Mock backend script (JSONL)"},
    {"endpoint", "--endpoint", "Chat-completion base URL, e.g. http://host:8000/v1"},
    {"model", "--model", "Model name"},
    {"api_key_env", "--api-key-env", "Environment variable holding the API key"},
    {"mode_mechanism", "--mode-mechanism", "suffix_tag | request_field | model_pair"},
    {"system1_model", "--system1-model", "model_pair: model for System-1 calls"},
    {"max_in_flight", "--max-in-flight", "Concurrent backend calls"},
    {"prompts", "--prompts", "Directory with prompt template overrides"},
    {"dataset", "--dataset", "Dataset JSONL {id, problem, answer}"},
    {"problem", "--problem", "solve: a single problem statement instead of a dataset"},
    {"out", "--out", "Run directory"},
    {"grid", "--grid", "Comma-separated sweep values (thresholds or budgets)"},
    {"ensemble", "--ensemble", "simulate: ensemble JSONL"},
    {"policy", "--policy", "simulate: compare | selective | uniform"},
    {"trials", "--trials", "simulate: Monte-Carlo trials"},
    {"s1_budget", "--s1-budget", "simulate: System-1 budget"},
    {"s2_budget", "--s2-budget", "simulate: System-2 budget"},
    {"uniform_budget", "--uniform-budget", "simulate: uniform per-step budget (default: matched)"},
};

constexpr const char* kConfigKeys[] = {"threshold",   "k_decompositions", "system1_max_tokens",
                                       "system2_max_tokens", "samples_per_problem", "seed",
                                       "temperature", "top_p",            "retries"};

bool is_config_key(const std::string& key) {
  return std::any_of(std::begin(kConfigKeys), std::end(kConfigKeys),
                     [&](const char* k) { return key == k; });
}

bool is_known_key(const std::string& key) {
  if (key == "fresh_per_point") return true;
  return std::any_of(std::begin(kSettings), std::end(kSettings),
                     [&](const Setting& s) { return key == s.key; });
}

std::string env_name(std::string_view key) {
  std::string out = "SCALE_";
  for (char c : key) out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

class UsageError : public Error {
 public:
  using Error::Error;
};

double parse_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw ConfigError(key, "invalid value for " + key + ": '" + text + "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw ConfigError(key, "invalid value for " + key + ": '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(key, "invalid value for " + key + ": '" + text + "'");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find(',', pos);
    if (end == std::string::npos) end = text.size();
    std::string item = text.substr(pos, end - pos);
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (!item.empty()) out.push_back(item);
    pos = end + 1;
  }
  return out;
}

std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

InvocationSpec build_spec(Subcommand sub, const ConfigValues& merged) {
  InvocationSpec spec;
  spec.subcommand = sub;

  ConfigValues config_values;
  for (const auto& [key, value] : merged) {
    if (is_config_key(key)) config_values[key] = value;
  }
  if (sub == Subcommand::Solve && !merged.count("samples_per_problem")) {
    spec.config.samples_per_problem = 1;
  }
  apply_config_values(spec.config, config_values);
  validate_config(spec.config);

  auto get = [&](const char* key) -> std::optional<std::string> {
    auto it = merged.find(key);
    if (it == merged.end()) return std::nullopt;
    return it->second;
  };

  if (auto v = get("method")) {
    try {
      spec.method.method = parse_method(*v);
    } catch (const Error&) {
      throw ConfigError("method", "unknown method: " + *v);
    }
  }
  if (auto v = get("votes")) spec.method.majority_samples = static_cast<int>(parse_int("votes", *v));
  if (spec.method.majority_samples < 1) throw ConfigError("votes", "votes must be >= 1");
  if (auto v = get("max_rounds")) {
    spec.method.iterative.max_rounds = static_cast<int>(parse_int("max_rounds", *v));
  }
  if (auto v = get("round_max_tokens")) {
    spec.method.iterative.per_round_max_tokens = parse_int("round_max_tokens", *v);
  }
  if (auto v = get("summary_max_tokens")) {
    spec.method.iterative.summary_max_tokens = parse_int("summary_max_tokens", *v);
  }
  validate_iterative_config(spec.method.iterative);

  if (auto v = get("out")) spec.run_dir = *v;
  if (auto v = get("dataset")) spec.dataset = *v;
  if (auto v = get("problem")) spec.problem = *v;
  if (auto v = get("prompts")) spec.prompts_dir = *v;
  if (auto v = get("fresh_per_point")) spec.fresh_per_point = parse_bool("fresh_per_point", *v);

  // Backend.
  const std::string backend = get("backend").value_or("mock");
  if (backend == "mock") {
    spec.backend.kind = BackendKind::Mock;
    spec.backend.model_name = "mock";
  } else if (backend == "http") {
    spec.backend.kind = BackendKind::Http;
  } else {
    throw ConfigError("backend", "unknown backend: " + backend);
  }
  if (auto v = get("script")) spec.script = *v;
  if (auto v = get("endpoint")) spec.backend.endpoint = *v;
  if (auto v = get("model")) spec.backend.model_name = *v;
  if (auto v = get("api_key_env")) spec.api_key_env = *v;
  if (auto v = get("mode_mechanism")) {
    try {
      spec.backend.mode_mechanism = parse_mode_mechanism(*v);
    } catch (const Error&) {
      throw ConfigError("mode_mechanism", "unknown mode mechanism: " + *v);
    }
  }
  if (auto v = get("system1_model")) spec.backend.system1_model = *v;
  if (auto v = get("max_in_flight")) {
    spec.max_in_flight = static_cast<int>(parse_int("max_in_flight", *v));
  }
  if (spec.max_in_flight < 1) throw ConfigError("max_in_flight", "max_in_flight must be >= 1");

  // Grids.
  if (auto v = get("grid")) {
    auto items = split_list(*v);
    if (items.empty()) throw ConfigError("grid", "grid is empty");
    if (sub == Subcommand::SweepThreshold) {
      spec.thresholds.clear();
      for (const auto& item : items) spec.thresholds.push_back(parse_double("grid", item));
    } else if (sub == Subcommand::SweepBudget) {
      spec.budgets.clear();
      for (const auto& item : items) spec.budgets.push_back(parse_int("grid", item));
    } else {
      spec.simulate.grid.clear();
      for (const auto& item : items) spec.simulate.grid.push_back(parse_double("grid", item));
    }
  }

  // Simulator.
  if (auto v = get("ensemble")) spec.simulate.ensemble = *v;
  if (auto v = get("policy")) {
    if (*v != "compare" && *v != "selective" && *v != "uniform") {
      throw ConfigError("policy", "unknown policy: " + *v);
    }
    spec.simulate.policy = *v;
  }
  if (auto v = get("trials")) spec.simulate.trials = static_cast<int>(parse_int("trials", *v));
  if (spec.simulate.trials < 1) throw ConfigError("trials", "trials must be >= 1");
  if (sub == Subcommand::Simulate) {
    spec.simulate.threshold = get("threshold") ? spec.config.threshold : 0.5;
  }
  if (auto v = get("s1_budget")) spec.simulate.s1_budget = parse_double("s1_budget", *v);
  if (auto v = get("s2_budget")) spec.simulate.s2_budget = parse_double("s2_budget", *v);
  if (auto v = get("uniform_budget")) {
    spec.simulate.uniform_budget = parse_double("uniform_budget", *v);
  }

  // Requirements per subcommand are usage errors.
  switch (sub) {
    case Subcommand::Solve:
      if (!spec.dataset && !spec.problem) throw UsageError("solve needs --dataset or --problem");
      break;
    case Subcommand::Simulate:
      if (spec.simulate.ensemble.empty()) throw UsageError("simulate needs --ensemble");
      break;
    default:
      if (!spec.dataset) throw UsageError(std::string(to_string(sub)) + " needs --dataset");
      break;
  }
  if (sub != Subcommand::Simulate) {
    if (spec.backend.kind == BackendKind::Mock && !spec.script) {
      throw UsageError("the mock backend needs --script");
    }
    if (spec.backend.kind == BackendKind::Http) {
      if (!spec.backend.endpoint) throw UsageError("the http backend needs --endpoint");
      if (spec.backend.model_name.empty()) throw UsageError("the http backend needs --model");
      if (spec.backend.mode_mechanism == ModeMechanism::ModelPair && !spec.backend.system1_model) {
        throw UsageError("mode mechanism model_pair needs --system1-model");
      }
    }
  }
  return spec;
}

struct BackendStack {
  std::unique_ptr<Backend> inner;
  std::unique_ptr<RecordingBackend> recorder;
};

BackendStack make_backend(const InvocationSpec& spec,
                          const std::map<std::string, std::string>& env) {
  BackendStack stack;
  if (spec.backend.kind == BackendKind::Mock) {
    stack.inner = MockBackend::from_file(*spec.script);
  } else {
    HttpOptions options;
    if (auto it = env.find(spec.api_key_env); it != env.end()) options.api_key = it->second;
    options.retry.max_retries = spec.config.retries;
    options.max_in_flight = spec.max_in_flight;
    stack.inner = std::make_unique<HttpBackend>(spec.backend, options);
  }
  stack.recorder = std::make_unique<RecordingBackend>(*stack.inner);
  return stack;
}

void write_script(const RecordingBackend& recorder, const std::filesystem::path& path) {
  std::string body;
  for (const auto& record : recorder.records()) body += serialize_script_record(record) + "\n";
  write_file(path, body);
}

// Nonzero when nothing succeeded: every trace failed.
int all_failed_check(std::span<const SolveTrace> traces, std::ostream& err) {
  if (traces.empty()) return kExitOk;
  for (const auto& t : traces) {
    if (!t.failed) return kExitOk;
  }
  err << "error: every trace failed; first error: " << traces.front().error << "\n";
  return kExitRuntime;
}

int run_simulate(const InvocationSpec& spec, std::ostream& out) {
  const auto& s = spec.simulate;
  auto ensemble = sim::load_ensemble(s.ensemble);
  auto curve = sim::scaling_curve(ensemble, s.grid, s.threshold, s.s1_budget, s.trials,
                                  spec.config.seed);
  const auto curve_path = spec.run_dir / "curve.csv";
  write_file(curve_path, sim::curve_csv(curve));

  sim::SelectivePolicy selective{s.threshold, s.s1_budget, s.s2_budget};
  double steps = 0;
  for (const auto& p : ensemble) steps += static_cast<double>(p.subproblems.size());
  steps /= static_cast<double>(ensemble.size());
  sim::UniformPolicy uniform{s.uniform_budget.value_or(sim::expected_spend(ensemble, selective) /
                                                       steps)};

  std::string md = "# Simulation\n\n";
  md += "- problems: " + std::to_string(ensemble.size()) + "\n";
  md += "- trials: " + std::to_string(s.trials) + "\n";
  md += "- hard fraction at threshold " + fixed(s.threshold, 2) + ": " +
        fixed(100.0 * sim::hard_fraction(ensemble, s.threshold), 2) + "%\n\n";
  md += "| Policy | Accuracy | Sigma | Analytic | Mean tokens |\n|---|---:|---:|---:|---:|\n";
  auto row = [&](const std::string& name, const sim::PolicyStats& st) {
    md += "| " + name + " | " + fixed(st.accuracy, 4) + " | " + fixed(st.sigma, 4) + " | " +
          fixed(st.analytic_accuracy, 4) + " | " + fixed(st.mean_tokens, 1) + " |\n";
    out << name << ": accuracy " << fixed(st.accuracy, 4) << " (analytic "
        << fixed(st.analytic_accuracy, 4) << "), mean tokens " << fixed(st.mean_tokens, 1) << "\n";
  };
  if (s.policy == "compare") {
    auto cmp = sim::compare_policies(ensemble, uniform, selective, s.trials, spec.config.seed);
    row("uniform (" + fixed(uniform.per_step_budget, 0) + "/step)", cmp.uniform);
    row("selective", cmp.selective);
    md += "\nDifference (selective - uniform): " + fixed(cmp.difference, 4) + " (sigma " +
          fixed(cmp.difference_sigma, 4) + ")\n";
  } else {
    const bool is_uniform = s.policy == "uniform";
    auto stats = sim::evaluate_policy(
        ensemble, is_uniform ? sim::AllocationPolicy{uniform} : sim::AllocationPolicy{selective},
        s.trials, spec.config.seed);
    row(is_uniform ? "uniform (" + fixed(uniform.per_step_budget, 0) + "/step)" : "selective",
        stats);
  }
  write_file(spec.run_dir / "simulation.md", md);
  out << "curve: " << curve_path.string() << "\n";
  out << "report: " << (spec.run_dir / "simulation.md").string() << "\n";
  return kExitOk;
}

}  // namespace

std::string_view to_string(Subcommand subcommand) {
  switch (subcommand) {
    case Subcommand::Solve: return "solve";
    case Subcommand::Eval: return "eval";
    case Subcommand::SweepThreshold: return "sweep-threshold";
    case Subcommand::SweepBudget: return "sweep-budget";
    case Subcommand::ExportSft: return "export-sft";
    case Subcommand::Simulate: return "simulate";
  }
  return "?";
}

ParseOutcome parse_invocation(const std::vector<std::string>& args,
                              const std::map<std::string, std::string>& env) {
  CLI::App app{"Selective test-time compute orchestration and evaluation", "scale"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> options;
  for (const auto& s : kSettings) {
    options[s.key] = app.add_option(s.flag, flag_values[s.key], s.help);
  }
  std::string config_path;
  auto* config_opt = app.add_option("--config", config_path, "Config file (flat JSON object)");
  bool fresh = false;
  auto* fresh_opt =
      app.add_flag("--fresh-per-point", fresh, "Sweeps: re-decompose and re-assess at every point");

  const std::pair<Subcommand, const char*> subs[] = {
      {Subcommand::Solve, "Solve the problems of a dataset (or one --problem)"},
      {Subcommand::Eval, "Evaluate a method on a dataset"},
      {Subcommand::SweepThreshold, "Sweep the difficulty threshold"},
      {Subcommand::SweepBudget, "Sweep the System-2 token budget"},
      {Subcommand::ExportSft, "Export answer-filtered traces for fine-tuning"},
      {Subcommand::Simulate, "Run the allocation simulator"},
  };
  std::vector<std::pair<Subcommand, CLI::App*>> sub_apps;
  for (const auto& [sub, help] : subs) {
    sub_apps.emplace_back(sub, app.add_subcommand(std::string(to_string(sub)), help));
  }

  ParseOutcome outcome;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    outcome.output = app.help();
    return outcome;
  } catch (const CLI::CallForAllHelp&) {
    outcome.output = app.help("", CLI::AppFormatMode::All);
    return outcome;
  } catch (const CLI::CallForVersion&) {
    outcome.output = std::string(kVersion) + "\n";
    return outcome;
  } catch (const CLI::ParseError& e) {
    outcome.exit_code = kExitUsage;
    outcome.output = std::string("usage error: ") + e.what() + "\nRun with --help for usage.\n";
    return outcome;
  }

  Subcommand sub = Subcommand::Solve;
  for (const auto& [s, sub_app] : sub_apps) {
    if (sub_app->parsed()) sub = s;
  }

  try {
    ConfigValues merged;
    std::string file;
    if (config_opt->count() > 0) {
      file = config_path;
    } else if (auto it = env.find("SCALE_CONFIG"); it != env.end()) {
      file = it->second;
    }
    if (!file.empty()) {
      ConfigValues from_file;
      try {
        from_file = read_config_file(file);
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        throw ConfigError("config", e.what());
      }
      for (const auto& [key, value] : from_file) {
        if (!is_known_key(key)) throw ConfigError(key, "unknown config key: " + key);
        merged[key] = value;
      }
    }
    for (const auto& s : kSettings) {
      if (auto it = env.find(env_name(s.key)); it != env.end()) merged[s.key] = it->second;
    }
    if (auto it = env.find("SCALE_FRESH_PER_POINT"); it != env.end()) {
      merged["fresh_per_point"] = it->second;
    }
    for (const auto& s : kSettings) {
      if (options[s.key]->count() > 0) merged[s.key] = flag_values[s.key];
    }
    if (fresh_opt->count() > 0) merged["fresh_per_point"] = fresh ? "true" : "false";

    outcome.spec = build_spec(sub, merged);
  } catch (const UsageError& e) {
    outcome.exit_code = kExitUsage;
    outcome.output = std::string("usage error: ") + e.what() + "\nRun with --help for usage.\n";
  } catch (const ConfigError& e) {
    outcome.exit_code = kExitConfig;
    outcome.output = std::string("config error: ") + e.what() + "\n";
  } catch (const Error& e) {
    outcome.exit_code = kExitConfig;
    outcome.output = std::string("config error: ") + e.what() + "\n";
  }
  return outcome;
}

int run_invocation(const InvocationSpec& spec, const std::map<std::string, std::string>& env,
                   std::ostream& out, std::ostream& err) {
  try {
    if (spec.subcommand == Subcommand::Simulate) return run_simulate(spec, out);

    std::vector<Problem> problems;
    std::string dataset_name = "problem";
    if (spec.dataset) {
      problems = load_dataset(*spec.dataset);
      dataset_name = spec.dataset->stem().string();
    } else {
      problems.push_back(Problem{"problem", *spec.problem, std::nullopt});
    }

    auto stack = make_backend(spec, env);
    ExperimentOptions options;
    options.method = spec.method;
    options.config = spec.config;
    options.templates =
        spec.prompts_dir ? PromptTemplates::load(*spec.prompts_dir) : PromptTemplates::defaults();
    options.workers = spec.max_in_flight;
    options.dataset_name = dataset_name;
    Backend& backend = *stack.recorder;

    int code = kExitOk;
    switch (spec.subcommand) {
      case Subcommand::Solve:
      case Subcommand::Eval: {
        auto report = run_experiment(problems, options, backend);
        write_run_directory(report, spec.run_dir);
        if (spec.subcommand == Subcommand::Solve) {
          for (const auto& t : report.traces) {
            out << t.problem.id << " [sample " << t.sample_index << "]: "
                << (t.failed ? "failed (" + t.error + ")"
                             : (t.final_answer.empty() ? "(no answer)" : t.final_answer))
                << "\n";
          }
        }
        out << "report: " << (spec.run_dir / "report.md").string() << "\n";
        out << "Acc: " << fixed(report.metrics.acc_percent, 2)
            << "  Tok: " << fixed(report.metrics.mean_tok, 1) << "\n";
        code = all_failed_check(report.traces, err);
        break;
      }
      case Subcommand::SweepThreshold:
      case Subcommand::SweepBudget: {
        auto sweep = spec.subcommand == Subcommand::SweepThreshold
                         ? threshold_sweep(problems, spec.thresholds, options, backend,
                                           spec.fresh_per_point)
                         : budget_sweep(problems, spec.budgets, options, backend,
                                        spec.fresh_per_point);
        write_sweep_directory(sweep, spec.run_dir);
        out << "report: " << (spec.run_dir / "report.md").string() << "\n";
        for (const auto& p : sweep.points) {
          out << (sweep.kind == SweepKind::Threshold ? "tau " + fixed(p.value, 2)
                                                     : "budget " + fixed(p.value, 0))
              << ": Acc " << fixed(p.acc_percent, 2) << "  Tok " << fixed(p.mean_tok, 1);
          if (p.hard_fraction_percent) out << "  Hard " << fixed(*p.hard_fraction_percent, 2) << "%";
          out << "\n";
        }
        for (const auto& r : sweep.reports) code = std::max(code, all_failed_check(r.traces, err));
        break;
      }
      case Subcommand::ExportSft: {
        const auto path = spec.run_dir / "sft.jsonl";
        auto summary = export_sft_traces(problems, spec.config, backend, path, options.templates,
                                         options.workers);
        out << "export: " << path.string() << "\n";
        out << "kept=" << summary.kept << " dropped=" << summary.dropped
            << " failed=" << summary.failed << "\n";
        if (summary.failed == static_cast<int>(problems.size())) {
          err << "error: every trace failed\n";
          code = kExitRuntime;
        }
        break;
      }
      case Subcommand::Simulate:
        break;
    }
    write_script(*stack.recorder, spec.run_dir / "script.jsonl");
    return code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int main_entry(int argc, char** argv, char** envp, std::ostream& out, std::ostream& err) {
  std::map<std::string, std::string> env;
  for (char** e = envp; e && *e; ++e) {
    std::string entry(*e);
    auto eq = entry.find('=');
    if (eq != std::string::npos) env[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);
  auto outcome = parse_invocation(args, env);
  if (!outcome.spec) {
    (outcome.exit_code == kExitOk ? out : err) << outcome.output;
    return outcome.exit_code;
  }
  return run_invocation(*outcome.spec, env, out, err);
}

}  // namespace scale::cli
