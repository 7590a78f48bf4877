#include "oscidiff/error.hpp"

namespace oscidiff {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::AsymmetricCoefficient: return "AsymmetricCoefficient";
    case Errc::EllipticityViolation: return "EllipticityViolation";
    case Errc::SolverDiverged: return "SolverDiverged";
    case Errc::PeriodicityNotReached: return "PeriodicityNotReached";
    case Errc::RegimeMismatch: return "RegimeMismatch";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::BoundViolated: return "BoundViolated";
    case Errc::SymmetryViolated: return "SymmetryViolated";
    case Errc::SkewFormulaMismatch: return "SkewFormulaMismatch";
    case Errc::NewtonStalled: return "NewtonStalled";
    case Errc::StepRejected: return "StepRejected";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::MissingArtifact: return "MissingArtifact";
    case Errc::ParseError: return "ParseError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

std::string_view Error::message() const noexcept {
  std::string_view all = what();
  return all.substr(to_string(code_).size() + 2);
}

}  // namespace oscidiff
