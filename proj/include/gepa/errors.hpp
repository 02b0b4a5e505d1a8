#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gepa {

/// Base class for every error raised by the optimizer library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingField : public Error {
 public:
  explicit MissingField(std::string name)
      : Error("missing input field '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class ArityMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidProgram : public Error {
 public:
  using Error::Error;
};

class UnknownController : public Error {
 public:
  explicit UnknownController(const std::string& id) : Error("unknown controller '" + id + "'") {}
};

class UnknownModule : public Error {
 public:
  explicit UnknownModule(const std::string& id) : Error("unknown module '" + id + "'") {}
};

class BudgetExhausted : public Error {
 public:
  BudgetExhausted(std::int64_t needed, std::int64_t remaining)
      : Error("rollout budget exhausted: needed " + std::to_string(needed) + ", remaining " +
              std::to_string(remaining)),
        needed_(needed),
        remaining_(remaining) {}
  std::int64_t needed() const noexcept { return needed_; }
  std::int64_t remaining() const noexcept { return remaining_; }

 private:
  std::int64_t needed_;
  std::int64_t remaining_;
};

class InvalidSize : public Error {
 public:
  using Error::Error;
};

class UnknownMetric : public Error {
 public:
  explicit UnknownMetric(const std::string& id) : Error("unknown metric '" + id + "'") {}
};

class UnknownFeedbackFunction : public Error {
 public:
  explicit UnknownFeedbackFunction(const std::string& id)
      : Error("unknown feedback function '" + id + "'") {}
};

/// Raised when a metric or feedback function breaks its own contract
/// (score outside [0,1], or feedback score differing from the paired metric).
class MetricContractViolation : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class NoFencedBlock : public Error {
 public:
  NoFencedBlock() : Error("reflection reply contains no fenced block") {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class SchemaVersionMismatch : public Error {
 public:
  SchemaVersionMismatch(int found, int supported)
      : Error("state schema version " + std::to_string(found) + " is not supported (expected <= " +
              std::to_string(supported) + ")") {}
};

class UnknownIndex : public Error {
 public:
  using Error::Error;
};

// Generation errors.

class GenerationError : public Error {
 public:
  using Error::Error;
};

class TransportError : public GenerationError {
 public:
  using GenerationError::GenerationError;
};

class TimeoutError : public GenerationError {
 public:
  using GenerationError::GenerationError;
};

class ProviderError : public GenerationError {
 public:
  ProviderError(int status, std::string body)
      : GenerationError("provider returned HTTP " + std::to_string(status) + ": " + body),
        status_(status),
        body_(std::move(body)) {}
  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

class ScriptExhausted : public GenerationError {
 public:
  ScriptExhausted() : GenerationError("scripted adapter has no reply left and no default") {}
};

}  // namespace gepa
