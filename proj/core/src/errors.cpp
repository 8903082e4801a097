#include "hetsca/errors.hpp"

namespace hetsca {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::NotHermitian: return "NotHermitian";
    case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::ConvergenceFailure: return "ConvergenceFailure";
    case Errc::EmptyNullSpace: return "EmptyNullSpace";
    case Errc::ParseError: return "ParseError";
    case Errc::ValidationError: return "ValidationError";
    case Errc::InfeasibleZF: return "InfeasibleZF";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::SingularCovariance: return "SingularCovariance";
    case Errc::UnknownUtility: return "UnknownUtility";
    case Errc::BracketFailure: return "BracketFailure";
    case Errc::NonMonotone: return "NonMonotone";
    case Errc::ProxStall: return "ProxStall";
    case Errc::AscentViolation: return "AscentViolation";
    case Errc::IoError: return "IoError";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message, std::string key)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      key_(std::move(key)) {}

}  // namespace hetsca
