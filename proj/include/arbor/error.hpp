#pragma once

#include <stdexcept>
#include <string>

namespace arbor {

enum class ErrorKind {
  validation,    // domain object violates an invariant
  structural,    // unknown node / malformed tree operation
  state,         // operation not legal in the current state (e.g. double attach)
  limit,         // depth or budget limit exceeded
  config,        // bad configuration, unknown backend, missing template
  parse,         // malformed file (problems, transcript, config)
  io,            // filesystem failure
  transport,     // network-level gateway failure
  replay_miss,   // replay transcript has no entry for a request
  refusal,       // provider returned an error or an empty completion
  agent_parse,   // agent reply unparseable after the retry protocol
  agent_invariant,  // agent reply parsed but violates a role invariant
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind);

}  // namespace arbor
