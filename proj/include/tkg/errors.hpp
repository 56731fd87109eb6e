#pragma once

#include <stdexcept>
#include <string>

namespace tkg {

// Broken precondition on the caller's side (bad k, zero vector, position out of range).
class ContractViolation : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Input file missing or unreadable, or a line that does not parse.
class LoadError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Records parse but violate an invariant (dangling ids, bad years, ...).
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class NotFoundError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// An aggregate with no usable signal: no embedded papers, or a zero vector after cancellation.
class DegenerateError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// State conflict, e.g. a vote with no pending A/B pair.
class ConflictError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// LLM transport failure. Callers may retry.
class LlmTransportError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class AgentParseError : public std::runtime_error {
  public:
    AgentParseError(const std::string& what, std::string raw)
        : std::runtime_error(what), raw_(std::move(raw)) {}
    const std::string& raw() const noexcept { return raw_; }

  private:
    std::string raw_;
};

// Teaming pipeline could not produce a result (no eligible candidates, all rerank calls failed).
class PipelineError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace tkg
