#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scale/backend.hpp"
#include "scale/core.hpp"
#include "scale/harness.hpp"

namespace scale::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

inline constexpr std::string_view kVersion = "0.1.0";

enum class Subcommand { Solve, Eval, SweepThreshold, SweepBudget, ExportSft, Simulate };

std::string_view to_string(Subcommand subcommand);

struct SimulateSpec {
  std::filesystem::path ensemble;
  std::string policy = "compare";  // compare | selective | uniform
  int trials = 10000;
  std::vector<double> grid{4096, 8192, 16384, 32768};
  double threshold = 0.5;
  double s1_budget = 4096;
  double s2_budget = 16384;
  std::optional<double> uniform_budget;  // default: matched to selective spend
};

struct InvocationSpec {
  Subcommand subcommand = Subcommand::Solve;
  ScaleConfig config;
  MethodSpec method;
  std::filesystem::path run_dir = "scale-run";

  std::optional<std::filesystem::path> dataset;
  std::optional<std::string> problem;  // solve: a single inline statement
  std::optional<std::filesystem::path> prompts_dir;

  BackendDescriptor backend;
  std::optional<std::filesystem::path> script;
  std::string api_key_env = "SCALE_API_KEY";
  int max_in_flight = 8;

  bool fresh_per_point = false;
  std::vector<double> thresholds{0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<std::int64_t> budgets{std::begin(kDefaultBudgetGrid), std::end(kDefaultBudgetGrid)};

  SimulateSpec simulate;
};

/// Either a spec to run, or an early exit (help, version, error) with the
/// text to print and the exit code.
struct ParseOutcome {
  std::optional<InvocationSpec> spec;
  int exit_code = kExitOk;
  std::string output;  // stdout for help/version, diagnostic otherwise
};

/// Config values merge as file < environment (SCALE_<KEY>) < flags.
ParseOutcome parse_invocation(const std::vector<std::string>& args,
                              const std::map<std::string, std::string>& env);

int run_invocation(const InvocationSpec& spec, const std::map<std::string, std::string>& env,
                   std::ostream& out, std::ostream& err);

/// argv[0] is skipped. `envp` may be null.
int main_entry(int argc, char** argv, char** envp, std::ostream& out, std::ostream& err);

}  // namespace scale::cli
