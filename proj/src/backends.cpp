#include "arbor/backends.hpp"

#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace arbor::llm {

ScriptedBackend::ScriptedBackend(Handler handler, std::string id)
    : handler_(std::move(handler)), id_(std::move(id)) {
  if (!handler_) throw Error(ErrorKind::config, "scripted backend needs a handler");
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
  std::string text = handler_(request);
  ChatResponse r;
  r.text = std::move(text);
  std::size_t prompt_chars = 0;
  for (const ChatMessage& m : request.messages) prompt_chars += m.text.size();
  r.token_usage.prompt_tokens = static_cast<std::int64_t>(prompt_chars / 4 + 1);
  r.token_usage.output_tokens = static_cast<std::int64_t>(r.text.size() / 4 + 1);
  r.backend_id = id_;
  return r;
}

namespace {

std::string substitute_api_key(const std::string& value, const std::string& key) {
  std::string out;
  std::size_t pos = 0;
  const std::string marker = "{api_key}";
  while (true) {
    std::size_t hit = value.find(marker, pos);
    if (hit == std::string::npos) {
      out += value.substr(pos);
      return out;
    }
    out += value.substr(pos, hit - pos);
    out += key;
    pos = hit + marker.size();
  }
}

}  // namespace

HttpChatBackend::HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty())
    throw Error(ErrorKind::config, "live backend requires a base_url");
  if (!config_.api_key_env.empty()) {
    const char* v = std::getenv(config_.api_key_env.c_str());
    if (v) api_key_ = v;
  }
}

std::string HttpChatBackend::id() const { return "http:" + config_.base_url; }

ChatResponse HttpChatBackend::complete(const ChatRequest& request) {
  nlohmann::ordered_json body;
  body["model"] = request.model_id;
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_output_tokens;
  nlohmann::ordered_json msgs = nlohmann::ordered_json::array();
  for (const ChatMessage& m : request.messages)
    msgs.push_back({{"role", to_string(m.role)}, {"content", m.text}});
  body["messages"] = std::move(msgs);

  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.connect_timeout_ms / 1000,
                                (config_.connect_timeout_ms % 1000) * 1000);
  client.set_read_timeout(config_.read_timeout_ms / 1000,
                          (config_.read_timeout_ms % 1000) * 1000);

  httplib::Headers headers;
  if (!api_key_.empty() && !config_.extra_headers.count("Authorization"))
    headers.emplace("Authorization", "Bearer " + api_key_);
  for (const auto& [name, value] : config_.extra_headers)
    headers.emplace(name, substitute_api_key(value, api_key_));

  auto res = client.Post(config_.path, headers, body.dump(), "application/json");
  if (!res)
    throw Error(ErrorKind::transport,
                "no response from " + config_.base_url + ": " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500)
    throw Error(ErrorKind::transport, "HTTP " + std::to_string(res->status) + " from provider");
  if (res->status != 200)
    throw Error(ErrorKind::refusal, "HTTP " + std::to_string(res->status) + ": " + res->body);

  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::refusal, std::string("unparseable provider reply: ") + e.what());
  }
  ChatResponse out;
  try {
    out.text = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::refusal, "provider reply lacks choices[0].message.content");
  }
  if (parsed.contains("usage")) {
    out.token_usage.prompt_tokens = parsed["usage"].value("prompt_tokens", std::int64_t{0});
    out.token_usage.output_tokens = parsed["usage"].value("completion_tokens", std::int64_t{0});
  }
  out.backend_id = id();
  return out;
}

std::shared_ptr<ChatBackend> make_canned_demo_backend() {
  auto handler = [](const ChatRequest& request) -> std::string {
    const std::string& tag = request.request_tag;
    if (tag.rfind("thinker.strategies", 0) == 0)
      return "1. Implement the statement as directly as possible.\n"
             "2. Decompose the task into a helper per requirement and compose them.\n"
             "3. Precompute intermediate values first, then assemble the answer.";
    if (tag.rfind("thinker.more", 0) == 0) return "NONE";
    if (tag.rfind("thinker.reflections", 0) == 0)
      return "1. Identify the first failing input and handle that case explicitly.";
    if (tag.rfind("solver", 0) == 0 || tag.rfind("debugger", 0) == 0)
      return "```python\nimport sys\n\nfor line in sys.stdin:\n    pass\n```";
    if (tag.rfind("critic.evaluate", 0) == 0)
      return "score: 2\naction: abort\nrationale: The attempt does not implement the "
             "strategy faithfully enough to be worth refining.";
    if (tag.rfind("critic.verify", 0) == 0)
      return "decision: reject\nrationale: Passing the visible tests alone is not "
             "evidence of generality.\nsuggestion: Cover boundary inputs explicitly.";
    return "NONE";
  };
  return std::make_shared<ScriptedBackend>(handler, "canned-demo");
}

}  // namespace arbor::llm
