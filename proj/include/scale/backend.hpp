#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scale/core.hpp"

namespace scale {

class BackendError : public Error {
 public:
  enum class Kind { Timeout, RateLimited, Transport, Server, Rejected, Malformed, MissingKey };

  BackendError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }
  bool retryable() const noexcept {
    return kind_ == Kind::Timeout || kind_ == Kind::RateLimited ||
           kind_ == Kind::Transport || kind_ == Kind::Server;
  }

 private:
  Kind kind_;
};

enum class Role { System, User, Assistant };

std::string_view to_string(Role role);

struct ChatMessage {
  Role role = Role::User;
  std::string content;
};

struct ModelRequest {
  std::vector<ChatMessage> messages;
  ProcessingMode mode = ProcessingMode::System2;
  std::int64_t max_tokens = 1024;
  double temperature = 0.6;
  double top_p = 0.95;
  std::optional<std::uint64_t> seed;

  // Bookkeeping only; not sent on the wire and not part of the mock key.
  CallStage stage = CallStage::Solve;
  int step = 0;
};

/// Throws std::invalid_argument when messages is empty or max_tokens <= 0.
void validate_request(const ModelRequest& request);

enum class FinishReason { Stop, Length, Error };

std::string_view to_string(FinishReason reason);
FinishReason parse_finish_reason(std::string_view text);

struct ModelResponse {
  std::string text;
  TokenUsage usage;
  FinishReason finish_reason = FinishReason::Stop;
};

enum class BackendKind { Http, Mock };
enum class ModeMechanism { SuffixTag, RequestField, ModelPair };

std::string_view to_string(ModeMechanism mechanism);
ModeMechanism parse_mode_mechanism(std::string_view text);

struct BackendDescriptor {
  BackendKind kind = BackendKind::Mock;
  std::optional<std::string> endpoint;
  std::string model_name;
  ModeMechanism mode_mechanism = ModeMechanism::SuffixTag;
  // model_pair: model serving System-1 requests.
  std::optional<std::string> system1_model;
};

/// Uniform model-invocation contract. Implementations are safe to call from
/// many threads at once.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual ModelResponse complete(const ModelRequest& request) = 0;
  virtual const BackendDescriptor& descriptor() const = 0;
};

/// Whitespace-separated units; a unit made only of punctuation counts once,
/// otherwise each punctuation character inside it adds one.
std::int64_t estimate_tokens(std::string_view text);

// Mock backend ---------------------------------------------------------------

/// Stable 16-hex-digit key over (messages, mode, max_tokens, seed).
std::string mock_key(const ModelRequest& request);

struct ScriptRecord {
  std::string key;
  std::string text;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  FinishReason finish_reason = FinishReason::Stop;
};

/// One JSONL line: {"key","text","prompt_tokens","completion_tokens","finish_reason"}.
std::string serialize_script_record(const ScriptRecord& record);
std::vector<ScriptRecord> load_script(const std::filesystem::path& path);

/// Deterministic playback of scripted responses. A record whose
/// finish_reason is "error" makes the call fail with a server error.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(std::vector<ScriptRecord> records,
                       BackendDescriptor descriptor = {BackendKind::Mock, {}, "mock"});
  static std::unique_ptr<MockBackend> from_file(const std::filesystem::path& path);

  ModelResponse complete(const ModelRequest& request) override;
  const BackendDescriptor& descriptor() const override { return descriptor_; }

  std::size_t size() const noexcept { return records_.size(); }
  std::int64_t calls() const;

 private:
  BackendDescriptor descriptor_;
  std::unordered_map<std::string, ScriptRecord> records_;
  mutable std::mutex mutex_;
  std::int64_t calls_ = 0;
};

/// Backend answering through a callback. Used for authoring scripts and in
/// tests.
class FunctionBackend final : public Backend {
 public:
  using Responder = std::function<ModelResponse(const ModelRequest&)>;

  explicit FunctionBackend(Responder responder,
                           BackendDescriptor descriptor = {BackendKind::Mock, {}, "function"});
  ModelResponse complete(const ModelRequest& request) override;
  const BackendDescriptor& descriptor() const override { return descriptor_; }

 private:
  BackendDescriptor descriptor_;
  Responder responder_;
  std::mutex mutex_;
};

/// Wraps a backend and records every exchange as a script record.
class RecordingBackend final : public Backend {
 public:
  explicit RecordingBackend(Backend& inner) : inner_(inner) {}
  ModelResponse complete(const ModelRequest& request) override;
  const BackendDescriptor& descriptor() const override { return inner_.descriptor(); }

  /// Unique records sorted by key.
  std::vector<ScriptRecord> records() const;

 private:
  Backend& inner_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, ScriptRecord> records_;
};

// HTTP backend ---------------------------------------------------------------

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
  double jitter = 0.25;  // +/- fraction of the nominal delay

  std::chrono::milliseconds nominal_delay(int retry) const;
};

/// Runs `attempt` until it succeeds, throws a non-retryable BackendError, or
/// max_retries+1 attempts have been made.
ModelResponse with_retries(const RetryPolicy& policy,
                           const std::function<ModelResponse()>& attempt,
                           const std::function<void(std::chrono::milliseconds)>& sleep);

struct HttpOptions {
  std::string api_key;
  RetryPolicy retry;
  int max_in_flight = 8;
  std::chrono::seconds connect_timeout{10};
  std::chrono::seconds read_timeout{1800};
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to sleep_for
};

/// Request body for the chat-completion interface, with mode signaled per
/// the descriptor's mechanism.
std::string build_chat_request_body(const ModelRequest& request,
                                    const BackendDescriptor& descriptor);

/// Parses a chat-completion response body. Throws BackendError(Malformed).
ModelResponse parse_chat_response(const std::string& body, const ModelRequest& request);

class HttpBackend final : public Backend {
 public:
  HttpBackend(BackendDescriptor descriptor, HttpOptions options);

  ModelResponse complete(const ModelRequest& request) override;
  const BackendDescriptor& descriptor() const override { return descriptor_; }

  std::int64_t attempts() const noexcept { return attempts_.load(); }

 private:
  ModelResponse attempt_once(const std::string& body, const ModelRequest& request);

  BackendDescriptor descriptor_;
  HttpOptions options_;
  std::string base_url_;
  std::string path_;
  std::counting_semaphore<1024> in_flight_;
  std::atomic<std::int64_t> attempts_{0};
};

}  // namespace scale
