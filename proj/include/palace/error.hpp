#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace palace {

enum class ErrorKind {
  malformed_input,
  config,
  empty_corpus,
  parse,
  provider,
  not_found,
  dimension_mismatch,
  layer_mismatch,
  io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::malformed_input: return "malformed_input";
    case ErrorKind::config: return "config";
    case ErrorKind::empty_corpus: return "empty_corpus";
    case ErrorKind::parse: return "parse";
    case ErrorKind::provider: return "provider";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::dimension_mismatch: return "dimension_mismatch";
    case ErrorKind::layer_mismatch: return "layer_mismatch";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries a kind so callers (and the
/// CLI's machine-readable error line) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse failures keep the offending provider output for retry bookkeeping.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::string raw)
      : Error(ErrorKind::parse, message), raw_(std::move(raw)) {}

  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

}  // namespace palace
