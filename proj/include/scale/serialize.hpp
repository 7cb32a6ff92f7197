#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "scale/core.hpp"

namespace scale {

// JSON mappings for the persisted types. Keys follow the field names.
void to_json(nlohmann::json& j, const Problem& v);
void from_json(const nlohmann::json& j, Problem& v);
void to_json(nlohmann::json& j, const SubProblem& v);
void from_json(const nlohmann::json& j, SubProblem& v);
void to_json(nlohmann::json& j, const Decomposition& v);
void from_json(const nlohmann::json& j, Decomposition& v);
void to_json(nlohmann::json& j, const DifficultyScore& v);
void from_json(const nlohmann::json& j, DifficultyScore& v);
void to_json(nlohmann::json& j, const TokenUsage& v);
void from_json(const nlohmann::json& j, TokenUsage& v);
void to_json(nlohmann::json& j, const SubSolution& v);
void from_json(const nlohmann::json& j, SubSolution& v);
void to_json(nlohmann::json& j, const CallRecord& v);
void from_json(const nlohmann::json& j, CallRecord& v);
void to_json(nlohmann::json& j, const DecompositionCandidateSet& v);
void from_json(const nlohmann::json& j, DecompositionCandidateSet& v);
void to_json(nlohmann::json& j, const SolveTrace& v);
void from_json(const nlohmann::json& j, SolveTrace& v);
void to_json(nlohmann::json& j, const ScaleConfig& v);
void from_json(const nlohmann::json& j, ScaleConfig& v);

/// Flat key/value view of a config, keys exactly as the ScaleConfig fields.
using ConfigValues = std::map<std::string, std::string>;

/// Applies string values onto `config`. Unknown keys or unparseable values
/// throw ConfigError naming the key.
void apply_config_values(ScaleConfig& config, const ConfigValues& values);

/// Config file: a flat JSON object.
ConfigValues read_config_file(const std::filesystem::path& path);
std::string serialize_config(const ScaleConfig& config);
ScaleConfig parse_config(const std::string& text);

std::string serialize_trace(const SolveTrace& trace);
SolveTrace parse_trace(const std::string& text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace scale
