#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "scale/backend.hpp"

namespace scale {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

std::string_view to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::Error: return "error";
  }
  return "stop";
}

FinishReason parse_finish_reason(std::string_view text) {
  if (text == "stop") return FinishReason::Stop;
  if (text == "length") return FinishReason::Length;
  if (text == "error") return FinishReason::Error;
  throw ParseError("unknown finish_reason: " + std::string(text));
}

std::string_view to_string(ModeMechanism mechanism) {
  switch (mechanism) {
    case ModeMechanism::SuffixTag: return "suffix_tag";
    case ModeMechanism::RequestField: return "request_field";
    case ModeMechanism::ModelPair: return "model_pair";
  }
  return "suffix_tag";
}

ModeMechanism parse_mode_mechanism(std::string_view text) {
  if (text == "suffix_tag") return ModeMechanism::SuffixTag;
  if (text == "request_field") return ModeMechanism::RequestField;
  if (text == "model_pair") return ModeMechanism::ModelPair;
  throw ParseError("unknown mode mechanism: " + std::string(text));
}

void validate_request(const ModelRequest& request) {
  if (request.messages.empty()) {
    throw std::invalid_argument("model request has no messages");
  }
  if (request.max_tokens <= 0) {
    throw std::invalid_argument("model request max_tokens must be > 0");
  }
}

std::int64_t estimate_tokens(std::string_view text) {
  std::int64_t count = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i == text.size()) break;
    std::int64_t punct = 0;
    bool other = false;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) {
      if (std::ispunct(static_cast<unsigned char>(text[i]))) {
        ++punct;
      } else {
        other = true;
      }
      ++i;
    }
    count += other ? 1 + punct : 1;
  }
  return count;
}

// Mock -----------------------------------------------------------------------

std::string mock_key(const ModelRequest& request) {
  nlohmann::json canonical;
  auto& messages = canonical["messages"] = nlohmann::json::array();
  for (const auto& m : request.messages) {
    messages.push_back({std::string(to_string(m.role)), m.content});
  }
  canonical["mode"] = to_string(request.mode);
  canonical["max_tokens"] = request.max_tokens;
  canonical["seed"] = request.seed ? nlohmann::json(*request.seed) : nlohmann::json(nullptr);
  const std::string bytes = canonical.dump();

  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return out;
}

std::string serialize_script_record(const ScriptRecord& record) {
  nlohmann::ordered_json j;
  j["key"] = record.key;
  j["text"] = record.text;
  j["prompt_tokens"] = record.prompt_tokens;
  j["completion_tokens"] = record.completion_tokens;
  j["finish_reason"] = to_string(record.finish_reason);
  return j.dump();
}

std::vector<ScriptRecord> load_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mock script " + path.string());
  std::vector<ScriptRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(),
                    [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    try {
      auto j = nlohmann::json::parse(line);
      ScriptRecord r;
      r.key = j.at("key").get<std::string>();
      r.text = j.at("text").get<std::string>();
      r.prompt_tokens = j.at("prompt_tokens").get<std::int64_t>();
      r.completion_tokens = j.at("completion_tokens").get<std::int64_t>();
      r.finish_reason = parse_finish_reason(j.at("finish_reason").get<std::string>());
      if (r.prompt_tokens < 0 || r.completion_tokens < 0) {
        throw ParseError("negative token count");
      }
      if (r.text.empty() && r.finish_reason != FinishReason::Error) {
        throw ParseError("empty text requires finish_reason \"error\"");
      }
      records.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

MockBackend::MockBackend(std::vector<ScriptRecord> records, BackendDescriptor descriptor)
    : descriptor_(std::move(descriptor)) {
  descriptor_.kind = BackendKind::Mock;
  for (auto& r : records) {
    auto key = r.key;
    auto [it, inserted] = records_.emplace(key, std::move(r));
    if (!inserted) throw ParseError("duplicate mock script key " + key);
  }
}

std::unique_ptr<MockBackend> MockBackend::from_file(const std::filesystem::path& path) {
  return std::make_unique<MockBackend>(load_script(path));
}

std::int64_t MockBackend::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

ModelResponse MockBackend::complete(const ModelRequest& request) {
  validate_request(request);
  const std::string key = mock_key(request);
  std::lock_guard lock(mutex_);
  ++calls_;
  auto it = records_.find(key);
  if (it == records_.end()) {
    throw BackendError(BackendError::Kind::MissingKey,
                       "mock script has no record for key " + key + " (stage " +
                           std::string(to_string(request.stage)) + ", step " +
                           std::to_string(request.step) + ")");
  }
  const ScriptRecord& r = it->second;
  if (r.finish_reason == FinishReason::Error) {
    throw BackendError(BackendError::Kind::Server, "scripted backend failure for key " + key);
  }
  if (r.completion_tokens > request.max_tokens) {
    throw BackendError(BackendError::Kind::Malformed,
                       "scripted completion_tokens exceed max_tokens for key " + key);
  }
  return ModelResponse{r.text, TokenUsage{r.prompt_tokens, r.completion_tokens, true},
                       r.finish_reason};
}

FunctionBackend::FunctionBackend(Responder responder, BackendDescriptor descriptor)
    : descriptor_(std::move(descriptor)), responder_(std::move(responder)) {}

ModelResponse FunctionBackend::complete(const ModelRequest& request) {
  validate_request(request);
  std::lock_guard lock(mutex_);
  return responder_(request);
}

ModelResponse RecordingBackend::complete(const ModelRequest& request) {
  const std::string key = mock_key(request);
  ScriptRecord record;
  record.key = key;
  try {
    ModelResponse response = inner_.complete(request);
    record.text = response.text;
    record.prompt_tokens = response.usage.prompt_tokens;
    record.completion_tokens = response.usage.completion_tokens;
    record.finish_reason = response.finish_reason;
    std::lock_guard lock(mutex_);
    records_.insert_or_assign(key, record);
    return response;
  } catch (const BackendError& e) {
    if (e.kind() == BackendError::Kind::Server) {
      record.finish_reason = FinishReason::Error;
      std::lock_guard lock(mutex_);
      records_.insert_or_assign(key, record);
    }
    throw;
  }
}

std::vector<ScriptRecord> RecordingBackend::records() const {
  std::lock_guard lock(mutex_);
  std::vector<ScriptRecord> out;
  out.reserve(records_.size());
  for (const auto& [key, r] : records_) out.push_back(r);
  std::sort(out.begin(), out.end(),
            [](const ScriptRecord& a, const ScriptRecord& b) { return a.key < b.key; });
  return out;
}

}  // namespace scale
