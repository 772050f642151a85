#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "arbor/error.hpp"

namespace arbor::llm {

enum class Role { system, user, assistant };

const char* to_string(Role role);
Role role_from_string(const std::string& s);

struct ChatMessage {
  Role role = Role::user;
  std::string text;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  std::string model_id;
  double temperature = 0.0;
  int max_output_tokens = 4096;
  std::string request_tag;  // agent role + purpose, e.g. "solver.generate"

  void validate() const;
};

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t output_tokens = 0;

  TokenUsage& operator+=(const TokenUsage& other) {
    prompt_tokens += other.prompt_tokens;
    output_tokens += other.output_tokens;
    return *this;
  }
};

struct ChatResponse {
  std::string text;
  TokenUsage token_usage;
  std::string backend_id;
};

// Platform-stable content key over (model_id, messages, temperature,
// request_tag). max_output_tokens is response shaping and is ignored.
// No whitespace normalization: requests differing in whitespace differ.
std::string request_key(const ChatRequest& request);

struct TranscriptEntry {
  std::string key;
  std::string request_tag;
  std::string model_id;
  double temperature = 0.0;
  std::vector<ChatMessage> messages;
  std::string response_text;
  TokenUsage token_usage;
};

class Transcript {
 public:
  void put(TranscriptEntry entry);  // same key replaces (responses must agree)
  const TranscriptEntry* find(const std::string& key) const;
  std::size_t size() const { return entries_.size(); }
  const std::vector<TranscriptEntry>& entries() const { return entries_; }

  std::string created_at;  // metadata, informational only
  std::string backend_id;

  static Transcript load(const std::string& path);
  void save(const std::string& path) const;

 private:
  std::vector<TranscriptEntry> entries_;
  std::unordered_map<std::string, std::size_t> by_key_;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual std::string id() const = 0;
};

// Provider-agnostic completion front end with deterministic record/replay.
// Thread-safe: concurrent complete() calls are allowed; transcript writes are
// serialized so no entry is lost or interleaved.
class Gateway {
 public:
  explicit Gateway(std::shared_ptr<ChatBackend> backend);

  static Gateway replay(Transcript transcript);
  static Gateway replay_file(const std::string& path);

  // Record every completion to the given JSONL file (and in memory).
  void record_to(const std::string& path);

  ChatResponse complete(const ChatRequest& request);

  bool replay_mode() const { return replay_.has_value(); }
  const Transcript& transcript() const;  // replay source or recorded entries

  // Transient transport failures are retried with exponential backoff.
  int max_retries = 3;
  int retry_base_ms = 250;

 private:
  Gateway() = default;

  std::shared_ptr<ChatBackend> backend_;
  std::optional<Transcript> replay_;
  Transcript recorded_;
  std::optional<std::ofstream> sink_;
  std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
};

}  // namespace arbor::llm
