#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>

#include "arbor/gateway.hpp"

namespace arbor::llm {

// Test/offline backend driven by a handler function. The handler returns the
// raw reply text for a request; token counts are synthesized from lengths.
class ScriptedBackend : public ChatBackend {
 public:
  using Handler = std::function<std::string(const ChatRequest&)>;

  explicit ScriptedBackend(Handler handler, std::string id = "scripted-mock");

  ChatResponse complete(const ChatRequest& request) override;
  std::string id() const override { return id_; }

 private:
  Handler handler_;
  std::string id_;
};

struct HttpBackendConfig {
  std::string base_url;  // e.g. "http://localhost:8000" or "https://host"
  std::string path = "/v1/chat/completions";
  std::string api_key_env = "ARBOR_API_KEY";  // credentials come from the environment
  std::map<std::string, std::string> extra_headers;  // values may contain {api_key}
  int connect_timeout_ms = 10000;
  int read_timeout_ms = 120000;
};

// Chat-completion wire format over HTTP, configurable by base URL and header
// template; works against hosted and local model servers.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpBackendConfig config);

  ChatResponse complete(const ChatRequest& request) override;
  std::string id() const override;

 private:
  HttpBackendConfig config_;
  std::string api_key_;
};

// Deterministic canned backend for demo/smoke runs without a model server.
std::shared_ptr<ChatBackend> make_canned_demo_backend();

}  // namespace arbor::llm
