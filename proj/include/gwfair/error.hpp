#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace gwfair {

enum class ErrorKind {
  Infeasible,
  EmptyProblem,
  PolicyMismatch,
  InvalidArgument,
  ConfigError,
  ParseError,
  SemanticError,
  UnknownName,
  BadCase,
  EmptyTrace,
  Blocked,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::EmptyProblem: return "EmptyProblem";
    case ErrorKind::PolicyMismatch: return "PolicyMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SemanticError: return "SemanticError";
    case ErrorKind::UnknownName: return "UnknownName";
    case ErrorKind::BadCase: return "BadCase";
    case ErrorKind::EmptyTrace: return "EmptyTrace";
    case ErrorKind::Blocked: return "Blocked";
  }
  return "Unknown";
}

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, std::optional<int> line = std::nullopt)
      : std::runtime_error(format(kind, what, line)), kind_(kind), message_(what), line_(line) {}

  ErrorKind kind() const noexcept { return kind_; }
  // Source line for ParseError, when known.
  std::optional<int> line() const noexcept { return line_; }
  // what() without the kind and line prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  static std::string format(ErrorKind kind, const std::string& what, std::optional<int> line) {
    std::string s = to_string(kind);
    if (line) s += " (line " + std::to_string(*line) + ")";
    return s + ": " + what;
  }

  ErrorKind kind_;
  std::string message_;
  std::optional<int> line_;
};

}  // namespace gwfair
