#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hss {

/// Failure categories surfaced by the library. The CLI maps them to exit
/// codes: everything up to `io` is a validation failure (2), the rest
/// are numerical failures (3).
enum class ErrorKind {
  shape,
  configuration,
  physical_parameter,
  topology,
  wiring,
  scenario,
  parse,
  schema,
  cross_reference,
  io,
  well_posedness,
  singular_operating_point,
  pole_proximity,
  numerical,
};

std::string_view to_string(ErrorKind kind);

bool is_validation_error(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace hss
