#include "scale/serialize.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace scale {

using nlohmann::json;

void to_json(json& j, const Problem& v) {
  j = json{{"id", v.id}, {"statement", v.statement}};
  j["gold_answer"] = v.gold_answer ? json(*v.gold_answer) : json(nullptr);
}

void from_json(const json& j, Problem& v) {
  v.id = j.at("id").get<std::string>();
  v.statement = j.at("statement").get<std::string>();
  if (j.contains("gold_answer") && !j.at("gold_answer").is_null()) {
    v.gold_answer = j.at("gold_answer").get<std::string>();
  } else {
    v.gold_answer.reset();
  }
}

void to_json(json& j, const SubProblem& v) {
  j = json{{"index", v.index}, {"statement", v.statement}};
}

void from_json(const json& j, SubProblem& v) {
  v.index = j.at("index").get<int>();
  v.statement = j.at("statement").get<std::string>();
}

void to_json(json& j, const Decomposition& v) {
  j = json{{"subproblems", v.subproblems}, {"raw_text", v.raw_text}};
}

void from_json(const json& j, Decomposition& v) {
  v.subproblems = j.at("subproblems").get<std::vector<SubProblem>>();
  v.raw_text = j.at("raw_text").get<std::string>();
}

void to_json(json& j, const DifficultyScore& v) {
  j = json{{"value", v.value}, {"raw_text", v.raw_text}, {"fallback", v.fallback}};
}

void from_json(const json& j, DifficultyScore& v) {
  v.value = j.at("value").get<double>();
  v.raw_text = j.at("raw_text").get<std::string>();
  v.fallback = j.value("fallback", false);
}

void to_json(json& j, const TokenUsage& v) {
  j = json{{"prompt_tokens", v.prompt_tokens},
           {"completion_tokens", v.completion_tokens},
           {"reported", v.reported}};
}

void from_json(const json& j, TokenUsage& v) {
  v.prompt_tokens = j.at("prompt_tokens").get<std::int64_t>();
  v.completion_tokens = j.at("completion_tokens").get<std::int64_t>();
  v.reported = j.value("reported", true);
}

void to_json(json& j, const SubSolution& v) {
  j = json{{"subproblem_index", v.subproblem_index},
           {"mode", to_string(v.mode)},
           {"difficulty", v.difficulty},
           {"solution_text", v.solution_text},
           {"usage", v.usage},
           {"kind", v.kind == SolutionKind::Step ? "step" : "summary"},
           {"truncated", v.truncated}};
}

void from_json(const json& j, SubSolution& v) {
  v.subproblem_index = j.at("subproblem_index").get<int>();
  v.mode = parse_processing_mode(j.at("mode").get<std::string>());
  v.difficulty = j.at("difficulty").get<DifficultyScore>();
  v.solution_text = j.at("solution_text").get<std::string>();
  v.usage = j.at("usage").get<TokenUsage>();
  v.kind = j.value("kind", std::string("step")) == "summary" ? SolutionKind::Summary
                                                             : SolutionKind::Step;
  v.truncated = j.value("truncated", false);
}

void to_json(json& j, const CallRecord& v) {
  j = json{{"stage", to_string(v.stage)},
           {"mode", to_string(v.mode)},
           {"step", v.step},
           {"attempt", v.attempt},
           {"max_tokens", v.max_tokens},
           {"seed", v.seed},
           {"usage", v.usage},
           {"finish_reason", v.finish_reason},
           {"reused", v.reused}};
}

void from_json(const json& j, CallRecord& v) {
  v.stage = parse_call_stage(j.at("stage").get<std::string>());
  v.mode = parse_processing_mode(j.at("mode").get<std::string>());
  v.step = j.at("step").get<int>();
  v.attempt = j.at("attempt").get<int>();
  v.max_tokens = j.at("max_tokens").get<std::int64_t>();
  v.seed = j.at("seed").get<std::uint64_t>();
  v.usage = j.at("usage").get<TokenUsage>();
  v.finish_reason = j.at("finish_reason").get<std::string>();
  v.reused = j.value("reused", false);
}

void to_json(json& j, const DecompositionCandidateSet& v) {
  j = json{{"candidates", v.candidates},
           {"judge_rationale", v.judge_rationale},
           {"selected_index", v.selected_index}};
}

void from_json(const json& j, DecompositionCandidateSet& v) {
  v.candidates = j.at("candidates").get<std::vector<Decomposition>>();
  v.judge_rationale = j.at("judge_rationale").get<std::string>();
  v.selected_index = j.at("selected_index").get<int>();
}

void to_json(json& j, const SolveTrace& v) {
  j = json{{"problem", v.problem},
           {"method", to_string(v.method)},
           {"seed", v.seed},
           {"sample_index", v.sample_index},
           {"candidates", v.candidates},
           {"decomposition", v.decomposition},
           {"subsolutions", v.subsolutions},
           {"calls", v.calls},
           {"final_answer", v.final_answer},
           {"extraction_failed", v.extraction_failed},
           {"votes", v.votes},
           {"total_tokens", v.total_tokens},
           {"overhead_tokens", v.overhead_tokens},
           {"failed", v.failed},
           {"error", v.error},
           {"warnings", v.warnings}};
  j["n_iterations"] = v.n_iterations ? json(*v.n_iterations) : json(nullptr);
}

void from_json(const json& j, SolveTrace& v) {
  v.problem = j.at("problem").get<Problem>();
  v.method = parse_method(j.at("method").get<std::string>());
  v.seed = j.at("seed").get<std::uint64_t>();
  v.sample_index = j.at("sample_index").get<int>();
  v.candidates = j.at("candidates").get<DecompositionCandidateSet>();
  v.decomposition = j.at("decomposition").get<Decomposition>();
  v.subsolutions = j.at("subsolutions").get<std::vector<SubSolution>>();
  v.calls = j.at("calls").get<std::vector<CallRecord>>();
  v.final_answer = j.at("final_answer").get<std::string>();
  v.extraction_failed = j.at("extraction_failed").get<bool>();
  v.votes = j.at("votes").get<std::vector<std::string>>();
  v.total_tokens = j.at("total_tokens").get<std::int64_t>();
  v.overhead_tokens = j.at("overhead_tokens").get<std::int64_t>();
  if (j.at("n_iterations").is_null()) {
    v.n_iterations.reset();
  } else {
    v.n_iterations = j.at("n_iterations").get<int>();
  }
  v.failed = j.at("failed").get<bool>();
  v.error = j.at("error").get<std::string>();
  v.warnings = j.at("warnings").get<std::vector<std::string>>();
}

void to_json(json& j, const ScaleConfig& v) {
  j = json{{"threshold", v.threshold},
           {"k_decompositions", v.k_decompositions},
           {"system1_max_tokens", v.system1_max_tokens},
           {"system2_max_tokens", v.system2_max_tokens},
           {"temperature", v.temperature},
           {"top_p", v.top_p},
           {"samples_per_problem", v.samples_per_problem},
           {"retries", v.retries},
           {"seed", v.seed}};
}

void from_json(const json& j, ScaleConfig& v) {
  ConfigValues values;
  for (const auto& [key, value] : j.items()) {
    values[key] = value.is_string() ? value.get<std::string>() : value.dump();
  }
  v = ScaleConfig{};
  apply_config_values(v, values);
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T out{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw ConfigError(key, "invalid value for " + key + ": '" + text + "'");
  }
  return out;
}

// libstdc++ 11 has no floating-point from_chars.
double parse_real(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError(key, "invalid value for " + key + ": '" + text + "'");
  }
  if (used != text.size()) {
    throw ConfigError(key, "invalid value for " + key + ": '" + text + "'");
  }
  return out;
}

}  // namespace

void apply_config_values(ScaleConfig& config, const ConfigValues& values) {
  for (const auto& [key, text] : values) {
    if (key == "threshold") {
      config.threshold = parse_real(key, text);
    } else if (key == "k_decompositions") {
      config.k_decompositions = parse_number<int>(key, text);
    } else if (key == "system1_max_tokens") {
      config.system1_max_tokens = parse_number<std::int64_t>(key, text);
    } else if (key == "system2_max_tokens") {
      config.system2_max_tokens = parse_number<std::int64_t>(key, text);
    } else if (key == "temperature") {
      config.temperature = parse_real(key, text);
    } else if (key == "top_p") {
      config.top_p = parse_real(key, text);
    } else if (key == "samples_per_problem") {
      config.samples_per_problem = parse_number<int>(key, text);
    } else if (key == "retries") {
      config.retries = parse_number<int>(key, text);
    } else if (key == "seed") {
      config.seed = parse_number<std::uint64_t>(key, text);
    } else {
      throw ConfigError(key, "unknown config key: " + key);
    }
  }
}

ConfigValues read_config_file(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("config", "cannot parse config file " + path.string() + ": " +
                                    e.what());
  }
  if (!doc.is_object()) {
    throw ConfigError("config", "config file must hold a flat JSON object");
  }
  ConfigValues values;
  for (const auto& [key, value] : doc.items()) {
    if (value.is_object() || value.is_array() || value.is_null()) {
      throw ConfigError(key, "config value for " + key + " must be a scalar");
    }
    values[key] = value.is_string() ? value.get<std::string>() : value.dump();
  }
  return values;
}

std::string serialize_config(const ScaleConfig& config) {
  return json(config).dump(2) + "\n";
}

ScaleConfig parse_config(const std::string& text) {
  try {
    return json::parse(text).get<ScaleConfig>();
  } catch (const json::exception& e) {
    throw ConfigError("config", std::string("cannot parse config: ") + e.what());
  }
}

std::string serialize_trace(const SolveTrace& trace) {
  return json(trace).dump(2) + "\n";
}

SolveTrace parse_trace(const std::string& text) {
  try {
    return json::parse(text).get<SolveTrace>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("cannot parse trace: ") + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace scale
