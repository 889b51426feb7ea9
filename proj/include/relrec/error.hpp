#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace relrec {

enum class ErrorCode {
  not_found,
  conflict,
  referential,
  vocabulary,
  parse,
  schema,
  label,
  kind,
  invalid_pair,
  degenerate_data,
  shape,
  parameter,
  provenance,
  incomplete_data,
  unsupported_table,
  missing_input,
  configuration,
  io,
  internal,
};

// Closed code set exposed by the CLI and the HTTP API.
enum class ApiCode { not_found, conflict, schema, parameter, internal };

inline std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::referential: return "referential";
    case ErrorCode::vocabulary: return "vocabulary";
    case ErrorCode::parse: return "parse";
    case ErrorCode::schema: return "schema";
    case ErrorCode::label: return "label";
    case ErrorCode::kind: return "kind";
    case ErrorCode::invalid_pair: return "invalid_pair";
    case ErrorCode::degenerate_data: return "degenerate_data";
    case ErrorCode::shape: return "shape";
    case ErrorCode::parameter: return "parameter";
    case ErrorCode::provenance: return "provenance";
    case ErrorCode::incomplete_data: return "incomplete_data";
    case ErrorCode::unsupported_table: return "unsupported_table";
    case ErrorCode::missing_input: return "missing_input";
    case ErrorCode::configuration: return "configuration";
    case ErrorCode::io: return "io";
    case ErrorCode::internal: return "internal";
  }
  return "internal";
}

inline std::string_view to_string(ApiCode c) {
  switch (c) {
    case ApiCode::not_found: return "not_found";
    case ApiCode::conflict: return "conflict";
    case ApiCode::schema: return "schema";
    case ApiCode::parameter: return "parameter";
    case ApiCode::internal: return "internal";
  }
  return "internal";
}

inline ApiCode api_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::not_found:
    case ErrorCode::referential:
      return ApiCode::not_found;
    case ErrorCode::conflict:
    case ErrorCode::provenance:
      return ApiCode::conflict;
    case ErrorCode::vocabulary:
    case ErrorCode::parse:
    case ErrorCode::schema:
    case ErrorCode::label:
    case ErrorCode::kind:
    case ErrorCode::shape:
      return ApiCode::schema;
    case ErrorCode::invalid_pair:
    case ErrorCode::degenerate_data:
    case ErrorCode::parameter:
    case ErrorCode::incomplete_data:
    case ErrorCode::unsupported_table:
    case ErrorCode::missing_input:
    case ErrorCode::configuration:
      return ApiCode::parameter;
    case ErrorCode::io:
    case ErrorCode::internal:
      return ApiCode::internal;
  }
  return ApiCode::internal;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message),
        detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  ApiCode api() const noexcept { return api_code(code_); }
  const std::string& message() const noexcept { return message_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string message_;
  std::string detail_;
};

}  // namespace relrec
