#pragma once

#include <stdexcept>
#include <string>

namespace simbridge {

// Precondition violations: bad dimensions, invalid arguments.
struct ContractViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Non-finite gradient fed to an optimizer or non-finite training target.
// Parameters are guaranteed untouched when this is thrown.
struct PoisonedUpdate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A batch routed to a domain-restricted consumer contained transitions
// tagged with the wrong domain.
struct DomainContamination : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyBuffer : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dataset deserialization failure, split by cause.
struct DatasetLoadError : std::runtime_error {
  enum class Kind { bad_header, truncated, dim_mismatch };
  Kind kind;
  DatasetLoadError(Kind k, const std::string& msg)
      : std::runtime_error(msg), kind(k) {}
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace simbridge
