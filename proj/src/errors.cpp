#include "hss/errors.hpp"

namespace hss {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::shape: return "shape";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::physical_parameter: return "physical-parameter";
    case ErrorKind::topology: return "topology";
    case ErrorKind::wiring: return "wiring";
    case ErrorKind::scenario: return "scenario";
    case ErrorKind::parse: return "parse";
    case ErrorKind::schema: return "schema";
    case ErrorKind::cross_reference: return "cross-reference";
    case ErrorKind::io: return "io";
    case ErrorKind::well_posedness: return "well-posedness";
    case ErrorKind::singular_operating_point: return "singular-operating-point";
    case ErrorKind::pole_proximity: return "pole-proximity";
    case ErrorKind::numerical: return "numerical";
  }
  return "unknown";
}

bool is_validation_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::shape:
    case ErrorKind::configuration:
    case ErrorKind::physical_parameter:
    case ErrorKind::topology:
    case ErrorKind::wiring:
    case ErrorKind::scenario:
    case ErrorKind::parse:
    case ErrorKind::schema:
    case ErrorKind::cross_reference:
    case ErrorKind::io:
      return true;
    default:
      return false;
  }
}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace hss
