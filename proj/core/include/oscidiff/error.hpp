#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace oscidiff {

enum class Errc {
  AsymmetricCoefficient,
  EllipticityViolation,
  SolverDiverged,
  PeriodicityNotReached,
  RegimeMismatch,
  DimensionMismatch,
  BoundViolated,
  SymmetryViolated,
  SkewFormulaMismatch,
  NewtonStalled,
  StepRejected,
  InvalidArgument,
  InvalidConfig,
  MissingArtifact,
  ParseError,
};

std::string_view to_string(Errc code);

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it to an exit status and a diagnostic.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }
  /// The message without the leading code name.
  std::string_view message() const noexcept;

 private:
  Errc code_;
};

}  // namespace oscidiff
