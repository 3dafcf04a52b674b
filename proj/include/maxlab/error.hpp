#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace maxlab {

enum class ErrorKind {
  invalid_region,
  invalid_body,
  invalid_exponent,
  invalid_parameter,
  invalid_level,
  dimension,
  alignment,
  domain,
  consistency,
  configuration,
  degenerate_box,
  degenerate_input,
  io,
};

std::string_view to_string(ErrorKind kind);

// All library failures are reported through this type. The kind is stable and
// machine readable; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace maxlab
