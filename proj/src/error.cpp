#include "maxlab/error.hpp"

namespace maxlab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_region: return "invalid-region";
    case ErrorKind::invalid_body: return "invalid-body";
    case ErrorKind::invalid_exponent: return "invalid-exponent";
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::invalid_level: return "invalid-level";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::alignment: return "alignment";
    case ErrorKind::domain: return "domain";
    case ErrorKind::consistency: return "consistency";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::degenerate_box: return "degenerate-box";
    case ErrorKind::degenerate_input: return "degenerate-input";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace maxlab
