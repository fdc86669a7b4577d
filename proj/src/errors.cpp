#include "implreg/errors.hpp"

namespace implreg {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid_input";
    case ErrorKind::Inconsistent: return "inconsistent";
    case ErrorKind::AtKink: return "at_kink";
    case ErrorKind::Undefined: return "undefined";
    case ErrorKind::Diverged: return "diverged";
    case ErrorKind::NotConverged: return "not_converged";
    case ErrorKind::NotZeroError: return "not_zero_error";
    case ErrorKind::InsufficientData: return "insufficient_data";
    case ErrorKind::NotApplicable: return "not_applicable";
  }
  return "unknown";
}

}  // namespace implreg
