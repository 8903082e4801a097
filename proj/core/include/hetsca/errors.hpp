#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hetsca {

enum class Errc {
  NotHermitian,
  NotPositiveDefinite,
  DimensionMismatch,
  ConvergenceFailure,
  EmptyNullSpace,
  ParseError,
  ValidationError,
  InfeasibleZF,
  ShapeMismatch,
  SingularCovariance,
  UnknownUtility,
  BracketFailure,
  NonMonotone,
  ProxStall,
  AscentViolation,
  IoError,
  InvalidArgument,
};

std::string_view to_string(Errc code) noexcept;

/// Library-wide exception. `key()` names the offending configuration field
/// for ValidationError and is empty otherwise.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::string key = {});

  Errc code() const noexcept { return code_; }
  const std::string& key() const noexcept { return key_; }

 private:
  Errc code_;
  std::string key_;
};

}  // namespace hetsca
