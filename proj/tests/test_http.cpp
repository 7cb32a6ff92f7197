#include <gtest/gtest.h>

#include <atomic>
#include <mutex>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "scale/backend.hpp"

using namespace scale;
using json = nlohmann::json;

namespace {

// A loopback port with nothing listening on it: bind an ephemeral port,
// read it back, close the socket.
int unused_port() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

// Chat-completion stub on a loopback port. `status_for` picks the status of
// the n-th request (0-based).
class StubServer {
 public:
  explicit StubServer(std::function<int(int)> status_for) : status_for_(std::move(status_for)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      int n = hits_.fetch_add(1);
      {
        std::lock_guard lock(mutex_);
        bodies_.push_back(json::parse(req.body));
        auth_ = req.get_header_value("Authorization");
      }
      res.status = status_for_(n);
      if (res.status == 200) {
        json body = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "\\boxed{7}"}}},
                                   {"finish_reason", "stop"}}}},
                     {"usage", {{"prompt_tokens", 9}, {"completion_tokens", 5}}}};
        res.set_content(body.dump(), "application/json");
      } else {
        res.set_content("{}", "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int hits() const { return hits_.load(); }
  json last_body() {
    std::lock_guard lock(mutex_);
    return bodies_.back();
  }
  std::string auth() {
    std::lock_guard lock(mutex_);
    return auth_;
  }

 private:
  std::function<int(int)> status_for_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  std::mutex mutex_;
  std::vector<json> bodies_;
  std::string auth_;
};

HttpOptions fast_options(int retries, std::vector<std::chrono::milliseconds>* sleeps = nullptr) {
  HttpOptions o;
  o.retry.max_retries = retries;
  o.connect_timeout = std::chrono::seconds(2);
  o.read_timeout = std::chrono::seconds(5);
  o.sleep = [sleeps](std::chrono::milliseconds d) {
    if (sleeps) sleeps->push_back(d);
  };
  return o;
}

ModelRequest request(ProcessingMode mode = ProcessingMode::System2) {
  ModelRequest r;
  r.messages = {{Role::User, "What is 3 + 4?"}};
  r.mode = mode;
  r.max_tokens = 32768;
  r.seed = 5;
  return r;
}

}  // namespace

TEST(HttpBackend, SuccessfulCompletion) {
  StubServer server([](int) { return 200; });
  auto options = fast_options(3);
  options.api_key = "secret";
  HttpBackend backend({BackendKind::Http, server.endpoint(), "qwen3", ModeMechanism::SuffixTag, {}},
                      options);
  auto r = backend.complete(request());
  EXPECT_EQ(r.text, "\\boxed{7}");
  EXPECT_EQ(r.usage, (TokenUsage{9, 5, true}));
  EXPECT_LE(r.usage.completion_tokens, 32768);
  EXPECT_EQ(backend.attempts(), 1);
  EXPECT_EQ(server.auth(), "Bearer secret");
  auto body = server.last_body();
  EXPECT_EQ(body["model"], "qwen3");
  EXPECT_EQ(body["max_tokens"], 32768);
  EXPECT_EQ(body["seed"], 5);
}

TEST(HttpBackend, RateLimitThenSuccess) {
  StubServer server([](int n) { return n == 0 ? 429 : 200; });
  std::vector<std::chrono::milliseconds> sleeps;
  HttpBackend backend({BackendKind::Http, server.endpoint(), "m", ModeMechanism::SuffixTag, {}},
                      fast_options(3, &sleeps));
  EXPECT_EQ(backend.complete(request()).text, "\\boxed{7}");
  EXPECT_EQ(backend.attempts(), 2);
  EXPECT_EQ(server.hits(), 2);
  ASSERT_EQ(sleeps.size(), 1u);
  EXPECT_GE(sleeps[0].count(), 750);
  EXPECT_LE(sleeps[0].count(), 1250);
}

TEST(HttpBackend, ServerErrorsExhaustRetries) {
  StubServer server([](int) { return 500; });
  HttpBackend backend({BackendKind::Http, server.endpoint(), "m", ModeMechanism::SuffixTag, {}},
                      fast_options(2));
  try {
    backend.complete(request());
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::Server);
  }
  EXPECT_EQ(backend.attempts(), 3);
  EXPECT_EQ(server.hits(), 3);
}

TEST(HttpBackend, ClientErrorIsNotRetried) {
  StubServer server([](int) { return 400; });
  HttpBackend backend({BackendKind::Http, server.endpoint(), "m", ModeMechanism::SuffixTag, {}},
                      fast_options(3));
  try {
    backend.complete(request());
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::Rejected);
  }
  EXPECT_EQ(server.hits(), 1);
}

TEST(HttpBackend, UnreachableEndpointTimesOut) {
  const int port = unused_port();
  HttpBackend backend({BackendKind::Http, "http://127.0.0.1:" + std::to_string(port) + "/v1", "m",
                       ModeMechanism::SuffixTag, {}},
                      fast_options(2));
  try {
    backend.complete(request());
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.kind(), BackendError::Kind::Timeout);
  }
  EXPECT_EQ(backend.attempts(), 3);
}

TEST(HttpBackend, ModeMechanismsOnTheWire) {
  StubServer server([](int) { return 200; });
  HttpBackend tag({BackendKind::Http, server.endpoint(), "m", ModeMechanism::SuffixTag, {}},
                  fast_options(0));
  tag.complete(request(ProcessingMode::System1));
  EXPECT_EQ(server.last_body()["messages"][0]["content"], "What is 3 + 4?\n/no_think");

  HttpBackend field({BackendKind::Http, server.endpoint(), "m", ModeMechanism::RequestField, {}},
                    fast_options(0));
  field.complete(request(ProcessingMode::System1));
  EXPECT_EQ(server.last_body()["chat_template_kwargs"]["enable_thinking"], false);

  HttpBackend pair({BackendKind::Http, server.endpoint(), "qwq", ModeMechanism::ModelPair,
                    std::string("qwen3")},
                   fast_options(0));
  pair.complete(request(ProcessingMode::System1));
  EXPECT_EQ(server.last_body()["model"], "qwen3");
  pair.complete(request(ProcessingMode::System2));
  EXPECT_EQ(server.last_body()["model"], "qwq");
}

TEST(HttpBackend, DescriptorValidation) {
  EXPECT_THROW(HttpBackend({BackendKind::Http, {}, "m", ModeMechanism::SuffixTag, {}}, {}),
               std::invalid_argument);
  EXPECT_THROW(
      HttpBackend({BackendKind::Http, "http://127.0.0.1:1", "m", ModeMechanism::ModelPair, {}}, {}),
      std::invalid_argument);
  EXPECT_THROW(HttpBackend({BackendKind::Http, "127.0.0.1:1", "m", ModeMechanism::SuffixTag, {}}, {}),
               std::invalid_argument);
}
