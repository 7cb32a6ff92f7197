#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "scale/backend.hpp"

namespace scale {
namespace {

using json = nlohmann::json;

constexpr const char* kNoThinkTag = "/no_think";

// Splits "http://host:port/v1" into ("http://host:port", "/v1").
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("endpoint must include a scheme: " + endpoint);
  }
  auto path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {endpoint, ""};
  std::string path = endpoint.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {endpoint.substr(0, path_start), path};
}

std::int64_t estimate_prompt_tokens(const ModelRequest& request) {
  std::int64_t total = 0;
  for (const auto& m : request.messages) total += estimate_tokens(m.content);
  return total;
}

}  // namespace

std::chrono::milliseconds RetryPolicy::nominal_delay(int retry) const {
  double ms = static_cast<double>(base_delay.count()) * std::pow(factor, retry);
  return std::chrono::milliseconds(static_cast<std::int64_t>(ms));
}

ModelResponse with_retries(const RetryPolicy& policy,
                           const std::function<ModelResponse()>& attempt,
                           const std::function<void(std::chrono::milliseconds)>& sleep) {
  thread_local std::mt19937_64 jitter_rng{std::random_device{}()};
  for (int retry = 0;; ++retry) {
    try {
      return attempt();
    } catch (const BackendError& e) {
      if (!e.retryable() || retry >= policy.max_retries) throw;
    }
    auto delay = policy.nominal_delay(retry);
    if (policy.jitter > 0.0 && delay.count() > 0) {
      std::uniform_real_distribution<double> dist(1.0 - policy.jitter, 1.0 + policy.jitter);
      delay = std::chrono::milliseconds(
          static_cast<std::int64_t>(static_cast<double>(delay.count()) * dist(jitter_rng)));
    }
    sleep(delay);
  }
}

std::string build_chat_request_body(const ModelRequest& request,
                                    const BackendDescriptor& descriptor) {
  json body;
  body["model"] = descriptor.model_name;
  auto& messages = body["messages"] = json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  body["max_tokens"] = request.max_tokens;
  body["temperature"] = request.temperature;
  body["top_p"] = request.top_p;
  if (request.seed) body["seed"] = *request.seed;

  const bool system1 = request.mode == ProcessingMode::System1;
  switch (descriptor.mode_mechanism) {
    case ModeMechanism::SuffixTag:
      if (system1) {
        // The soft switch applies to the latest user turn.
        for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
          if ((*it)["role"] == "user") {
            (*it)["content"] = (*it)["content"].get<std::string>() + "\n" + kNoThinkTag;
            break;
          }
        }
      }
      break;
    case ModeMechanism::RequestField:
      body["chat_template_kwargs"] = {{"enable_thinking", !system1}};
      break;
    case ModeMechanism::ModelPair:
      if (system1) {
        if (!descriptor.system1_model) {
          throw std::invalid_argument("model_pair mechanism needs a system1 model");
        }
        body["model"] = *descriptor.system1_model;
      }
      break;
  }
  return body.dump();
}

ModelResponse parse_chat_response(const std::string& body, const ModelRequest& request) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& e) {
    throw BackendError(BackendError::Kind::Malformed,
                       std::string("response body is not JSON: ") + e.what());
  }
  try {
    const auto& choice = doc.at("choices").at(0);
    const auto& message = choice.at("message");
    ModelResponse out;
    if (message.contains("content") && message["content"].is_string()) {
      out.text = message["content"].get<std::string>();
    }
    // Servers that split reasoning from content leave content empty when the
    // reasoning was cut off.
    if (out.text.empty() && message.contains("reasoning_content") &&
        message["reasoning_content"].is_string()) {
      out.text = message["reasoning_content"].get<std::string>();
    }
    std::string finish = choice.value("finish_reason", std::string("stop"));
    if (!choice.contains("finish_reason") || choice["finish_reason"].is_null()) finish = "stop";
    out.finish_reason = finish == "length" ? FinishReason::Length : FinishReason::Stop;
    if (out.text.empty()) {
      throw BackendError(BackendError::Kind::Malformed, "response has no content");
    }
    if (doc.contains("usage") && doc["usage"].is_object() &&
        doc["usage"].contains("completion_tokens")) {
      out.usage.completion_tokens = doc["usage"].at("completion_tokens").get<std::int64_t>();
      out.usage.prompt_tokens = doc["usage"].value("prompt_tokens", std::int64_t{0});
      out.usage.reported = true;
    } else {
      out.usage.completion_tokens = estimate_tokens(out.text);
      out.usage.prompt_tokens = estimate_prompt_tokens(request);
      out.usage.reported = false;
    }
    if (out.usage.completion_tokens < 0 || out.usage.prompt_tokens < 0) {
      throw BackendError(BackendError::Kind::Malformed, "negative token counts in usage");
    }
    return out;
  } catch (const json::exception& e) {
    throw BackendError(BackendError::Kind::Malformed,
                       std::string("unexpected response shape: ") + e.what());
  }
}

HttpBackend::HttpBackend(BackendDescriptor descriptor, HttpOptions options)
    : descriptor_(std::move(descriptor)),
      options_(std::move(options)),
      in_flight_(std::clamp(options_.max_in_flight, 1, 1024)) {
  descriptor_.kind = BackendKind::Http;
  if (!descriptor_.endpoint || descriptor_.endpoint->empty()) {
    throw std::invalid_argument("http backend requires an endpoint");
  }
  if (descriptor_.mode_mechanism == ModeMechanism::ModelPair && !descriptor_.system1_model) {
    throw std::invalid_argument("model_pair mechanism needs a system1 model");
  }
  std::tie(base_url_, path_) = split_endpoint(*descriptor_.endpoint);
  path_ += "/chat/completions";
  if (!options_.sleep) {
    options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

ModelResponse HttpBackend::attempt_once(const std::string& body, const ModelRequest& request) {
  attempts_.fetch_add(1);
  httplib::Client client(base_url_);
  client.set_connection_timeout(options_.connect_timeout);
  client.set_read_timeout(options_.read_timeout);
  client.set_write_timeout(options_.connect_timeout);
  httplib::Headers headers;
  if (!options_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + options_.api_key);
  }

  in_flight_.acquire();
  auto result = client.Post(path_, headers, body, "application/json");
  in_flight_.release();

  if (!result) {
    throw BackendError(BackendError::Kind::Timeout,
                       "request to " + base_url_ + path_ + " failed: " +
                           httplib::to_string(result.error()));
  }
  const int status = result->status;
  if (status == 429) {
    throw BackendError(BackendError::Kind::RateLimited, "rate limited (HTTP 429)");
  }
  if (status >= 500) {
    throw BackendError(BackendError::Kind::Server, "server error HTTP " + std::to_string(status));
  }
  if (status != 200) {
    throw BackendError(BackendError::Kind::Rejected,
                       "HTTP " + std::to_string(status) + ": " + result->body.substr(0, 512));
  }
  return parse_chat_response(result->body, request);
}

ModelResponse HttpBackend::complete(const ModelRequest& request) {
  validate_request(request);
  const std::string body = build_chat_request_body(request, descriptor_);
  return with_retries(
      options_.retry, [&] { return attempt_once(body, request); }, options_.sleep);
}

}  // namespace scale
