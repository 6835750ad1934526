#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fprig {

enum class ErrorCode {
  validation,
  parse,
  not_found,
  conflict,
  ordering,
  transport,
  configuration,
  window,
  format,
  provider,
  insufficient_data,
  io,
};

std::string_view to_string(ErrorCode code);

// All recoverable failures in the library are reported through this type.
// `field` names the offending input field when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(message), code_(code), field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::validation: return "validation";
    case ErrorCode::parse: return "parse";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::ordering: return "ordering";
    case ErrorCode::transport: return "transport";
    case ErrorCode::configuration: return "configuration";
    case ErrorCode::window: return "window";
    case ErrorCode::format: return "format";
    case ErrorCode::provider: return "provider";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

}  // namespace fprig
