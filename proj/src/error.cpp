#include "svlab/error.hpp"

namespace svlab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::invalid_input: return "invalid-input";
    case ErrorCode::unsupported_query: return "unsupported-query";
    case ErrorCode::no_convergence: return "no-convergence";
    case ErrorCode::calibration_unavailable: return "calibration-unavailable";
    case ErrorCode::budget_exceeded: return "budget-exceeded";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown";
}

}  // namespace svlab
