#include "scale/core.hpp"

#include <algorithm>

namespace scale {

std::string_view to_string(ProcessingMode mode) {
  return mode == ProcessingMode::System1 ? "system1" : "system2";
}

ProcessingMode parse_processing_mode(std::string_view text) {
  if (text == "system1") return ProcessingMode::System1;
  if (text == "system2") return ProcessingMode::System2;
  throw ParseError("unknown processing mode: " + std::string(text));
}

std::string_view to_string(CallStage stage) {
  switch (stage) {
    case CallStage::Decompose: return "decompose";
    case CallStage::Judge: return "judge";
    case CallStage::Assess: return "assess";
    case CallStage::Solve: return "solve";
    case CallStage::Summarize: return "summarize";
  }
  return "solve";
}

CallStage parse_call_stage(std::string_view text) {
  for (auto stage : {CallStage::Decompose, CallStage::Judge, CallStage::Assess,
                     CallStage::Solve, CallStage::Summarize}) {
    if (to_string(stage) == text) return stage;
  }
  throw ParseError("unknown call stage: " + std::string(text));
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Scale: return "scale";
    case Method::Cot: return "cot";
    case Method::Majority: return "majority";
    case Method::Iterative: return "iterative";
  }
  return "scale";
}

Method parse_method(std::string_view text) {
  for (auto method :
       {Method::Scale, Method::Cot, Method::Majority, Method::Iterative}) {
    if (to_string(method) == text) return method;
  }
  throw ParseError("unknown method: " + std::string(text));
}

void record_call(SolveTrace& trace, const CallRecord& call) {
  trace.calls.push_back(call);
  trace.total_tokens += call.usage.completion_tokens;
  if (is_overhead(call.stage)) trace.overhead_tokens += call.usage.completion_tokens;
}

void recompute_totals(SolveTrace& trace) {
  trace.total_tokens = 0;
  trace.overhead_tokens = 0;
  for (const auto& call : trace.calls) {
    trace.total_tokens += call.usage.completion_tokens;
    if (is_overhead(call.stage)) trace.overhead_tokens += call.usage.completion_tokens;
  }
}

bool has_estimated_tokens(const SolveTrace& trace) {
  return std::any_of(trace.calls.begin(), trace.calls.end(),
                     [](const CallRecord& c) { return !c.usage.reported; });
}

const ScaleConfig& validate_config(const ScaleConfig& config) {
  if (!(config.threshold >= 0.0 && config.threshold <= 1.0)) {
    throw ConfigError("threshold", "threshold out of [0,1]");
  }
  if (config.k_decompositions < 1) {
    throw ConfigError("k_decompositions", "k_decompositions must be >= 1");
  }
  if (config.k_decompositions > 26) {
    throw ConfigError("k_decompositions", "k_decompositions must be <= 26 (judge labels A-Z)");
  }
  if (config.system1_max_tokens <= 0) {
    throw ConfigError("system1_max_tokens", "system1_max_tokens must be > 0");
  }
  if (config.system2_max_tokens <= 0) {
    throw ConfigError("system2_max_tokens", "system2_max_tokens must be > 0");
  }
  if (config.system2_max_tokens < config.system1_max_tokens) {
    throw ConfigError("system2_max_tokens",
                      "system2_max_tokens must be >= system1_max_tokens");
  }
  if (!(config.temperature >= 0.0)) {
    throw ConfigError("temperature", "temperature must be >= 0");
  }
  if (!(config.top_p > 0.0 && config.top_p <= 1.0)) {
    throw ConfigError("top_p", "top_p out of (0,1]");
  }
  if (config.samples_per_problem < 1) {
    throw ConfigError("samples_per_problem", "samples_per_problem must be >= 1");
  }
  if (config.retries < 0) {
    throw ConfigError("retries", "retries must be >= 0");
  }
  return config;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view id,
                          std::uint64_t index) {
  // FNV-1a over the id, mixed with base and index.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t x = splitmix64(base ^ splitmix64(h ^ splitmix64(index)));
  return x & kSeedMask;
}

}  // namespace scale
