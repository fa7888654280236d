#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kpzlab {

// Bad input: off-grid points, malformed ensembles, window violations. CLI exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class WindowError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Rejection sampler gave up; carries the attempt count.
class SamplerExhausted : public std::runtime_error {
 public:
  SamplerExhausted(const std::string& what, std::size_t attempts)
      : std::runtime_error(what + " (attempts=" + std::to_string(attempts) + ")"),
        attempts_(attempts) {}
  std::size_t attempts() const { return attempts_; }

 private:
  std::size_t attempts_;
};

// A self-consistency check inside an operation failed (e.g. melon top line vs DP).
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Ensemble file could not be decoded; offset is the byte position of the problem.
class FormatError : public ValidationError {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : ValidationError(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Statistical acceptance gate failed. CLI exit code 3.
class GateFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

}  // namespace kpzlab
