#include "arbor/gateway.hpp"

#include <charconv>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <thread>

#include <nlohmann/json.hpp>

#include "arbor/hash.hpp"
#include "arbor/log.hpp"

namespace arbor::llm {

const char* to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "?";
}

Role role_from_string(const std::string& s) {
  if (s == "system") return Role::system;
  if (s == "user") return Role::user;
  if (s == "assistant") return Role::assistant;
  throw Error(ErrorKind::parse, "unknown chat role: " + s);
}

void ChatRequest::validate() const {
  bool has_user = false;
  for (const ChatMessage& m : messages)
    if (m.role == Role::user) has_user = true;
  if (!has_user)
    throw Error(ErrorKind::validation, "chat request needs at least one user message");
  if (temperature < 0.0)
    throw Error(ErrorKind::validation, "temperature must be >= 0");
  if (max_output_tokens <= 0)
    throw Error(ErrorKind::validation, "max_output_tokens must be > 0");
}

namespace {

std::string shortest_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string request_key(const ChatRequest& request) {
  Fnv1a64 h;
  h.feed("arbor.chatreq.v1");
  h.feed(request.model_id);
  h.feed(shortest_double(request.temperature));
  h.feed(request.request_tag);
  for (const ChatMessage& m : request.messages) {
    h.feed(to_string(m.role));
    h.feed(m.text);
  }
  return hex64(h.state);
}

void Transcript::put(TranscriptEntry entry) {
  auto it = by_key_.find(entry.key);
  if (it != by_key_.end()) {
    entries_[it->second] = std::move(entry);
    return;
  }
  by_key_[entry.key] = entries_.size();
  entries_.push_back(std::move(entry));
}

const TranscriptEntry* Transcript::find(const std::string& key) const {
  auto it = by_key_.find(key);
  if (it == by_key_.end()) return nullptr;
  return &entries_[it->second];
}

namespace {

nlohmann::ordered_json entry_to_json(const TranscriptEntry& e) {
  nlohmann::ordered_json j;
  j["key"] = e.key;
  j["request_tag"] = e.request_tag;
  j["model_id"] = e.model_id;
  j["temperature"] = e.temperature;
  nlohmann::ordered_json msgs = nlohmann::ordered_json::array();
  for (const ChatMessage& m : e.messages)
    msgs.push_back({{"role", to_string(m.role)}, {"text", m.text}});
  j["messages"] = std::move(msgs);
  j["response_text"] = e.response_text;
  j["token_usage"] = {{"prompt_tokens", e.token_usage.prompt_tokens},
                      {"output_tokens", e.token_usage.output_tokens}};
  return j;
}

TranscriptEntry entry_from_json(const nlohmann::json& j) {
  TranscriptEntry e;
  e.key = j.at("key").get<std::string>();
  e.request_tag = j.at("request_tag").get<std::string>();
  e.model_id = j.at("model_id").get<std::string>();
  e.temperature = j.at("temperature").get<double>();
  for (const auto& m : j.at("messages"))
    e.messages.push_back(
        {role_from_string(m.at("role").get<std::string>()), m.at("text").get<std::string>()});
  e.response_text = j.at("response_text").get<std::string>();
  if (j.contains("token_usage")) {
    e.token_usage.prompt_tokens = j["token_usage"].value("prompt_tokens", std::int64_t{0});
    e.token_usage.output_tokens = j["token_usage"].value("output_tokens", std::int64_t{0});
  }
  return e;
}

}  // namespace

Transcript Transcript::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open transcript: " + path);
  Transcript t;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, path + ":" + std::to_string(line_no) +
                                        ": malformed transcript line: " + e.what());
    }
    try {
      if (j.contains("transcript_meta")) {
        t.created_at = j["transcript_meta"].value("created_at", "");
        t.backend_id = j["transcript_meta"].value("backend_id", "");
        continue;
      }
      t.put(entry_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::parse, path + ":" + std::to_string(line_no) +
                                        ": transcript entry missing field: " + e.what());
    }
  }
  return t;
}

void Transcript::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write transcript: " + path);
  if (!created_at.empty() || !backend_id.empty()) {
    nlohmann::ordered_json meta;
    meta["transcript_meta"] = {{"created_at", created_at}, {"backend_id", backend_id}};
    out << meta.dump() << "\n";
  }
  for (const TranscriptEntry& e : entries_) out << entry_to_json(e).dump() << "\n";
  if (!out) throw Error(ErrorKind::io, "short write saving transcript: " + path);
}

Gateway::Gateway(std::shared_ptr<ChatBackend> backend) : backend_(std::move(backend)) {
  if (!backend_) throw Error(ErrorKind::config, "gateway requires a backend");
}

Gateway Gateway::replay(Transcript transcript) {
  Gateway g;
  g.replay_ = std::move(transcript);
  return g;
}

Gateway Gateway::replay_file(const std::string& path) {
  return replay(Transcript::load(path));
}

void Gateway::record_to(const std::string& path) {
  std::lock_guard<std::mutex> lock(*mutex_);
  sink_.emplace(path, std::ios::trunc);
  if (!*sink_) throw Error(ErrorKind::io, "cannot open transcript for write: " + path);
  auto now = std::chrono::system_clock::now();
  std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
  recorded_.created_at = buf;
  recorded_.backend_id = backend_ ? backend_->id() : "";
  nlohmann::ordered_json meta;
  meta["transcript_meta"] = {{"created_at", recorded_.created_at},
                             {"backend_id", recorded_.backend_id}};
  *sink_ << meta.dump() << "\n";
  sink_->flush();
}

const Transcript& Gateway::transcript() const {
  if (replay_) return *replay_;
  return recorded_;
}

ChatResponse Gateway::complete(const ChatRequest& request) {
  request.validate();
  const std::string key = request_key(request);

  if (replay_) {
    const TranscriptEntry* entry = replay_->find(key);
    if (!entry)
      throw Error(ErrorKind::replay_miss,
                  "replay miss for request '" + request.request_tag + "' (key " + key + ")");
    ChatResponse r;
    r.text = entry->response_text;
    r.token_usage = entry->token_usage;
    r.backend_id = "replay";
    return r;
  }

  ChatResponse response;
  int attempt = 0;
  for (;;) {
    try {
      response = backend_->complete(request);
      break;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::transport || attempt >= max_retries) throw;
      int delay = retry_base_ms << attempt;
      log::warn("transient gateway failure for '" + request.request_tag +
                "', retrying in " + std::to_string(delay) + " ms: " + e.what());
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
      ++attempt;
    }
  }
  if (response.text.empty())
    throw Error(ErrorKind::refusal,
                "empty completion for request '" + request.request_tag + "'");

  std::lock_guard<std::mutex> lock(*mutex_);
  TranscriptEntry entry;
  entry.key = key;
  entry.request_tag = request.request_tag;
  entry.model_id = request.model_id;
  entry.temperature = request.temperature;
  entry.messages = request.messages;
  entry.response_text = response.text;
  entry.token_usage = response.token_usage;
  if (sink_) {
    *sink_ << entry_to_json(entry).dump() << "\n";
    sink_->flush();
  }
  recorded_.put(std::move(entry));
  return response;
}

}  // namespace arbor::llm
