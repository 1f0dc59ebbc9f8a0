#pragma once

#include <stdexcept>
#include <string>

namespace rheat {

/// Broad failure classes. The CLI maps them onto its exit codes.
enum class ErrorKind {
  domain,     // argument outside the operation's precondition
  numerical,  // broken covariance, zero pivot, non-SPD input
  config,     // malformed or inconsistent experiment configuration
  io,         // unreadable or unwritable file
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace rheat
