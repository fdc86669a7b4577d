#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace implreg {

enum class ErrorKind {
  InvalidInput,
  Inconsistent,
  AtKink,
  Undefined,
  Diverged,
  NotConverged,
  NotZeroError,
  InsufficientData,
  NotApplicable,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers switch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised by the trainers when the parameter norm exceeds the divergence guard.
class DivergedError : public Error {
 public:
  DivergedError(std::int64_t step, double norm)
      : Error(ErrorKind::Diverged, "parameter norm " + std::to_string(norm) +
                                       " exceeded guard at step " + std::to_string(step)),
        step_(step) {}

  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace implreg
