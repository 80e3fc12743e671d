#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ebgevrey {

enum class ErrorCode {
  // configuration
  missing_key,
  unknown_key,
  malformed_line,
  ordering_violation,
  non_positive_coefficient,
  point_on_interface,
  // evaluation
  on_discontinuity,
  out_of_domain,
  invalid_argument,
  // numerics
  singular_mass,
  factorization_failure,
  cholesky_failure,
  degenerate_coefficient,
  near_singular,
  boundary_root,
  non_converged_sampling,
  no_convergence,
  multiple_root_suspected,
  qr_no_convergence,
  no_certified_pairs,
  zero_vector,
  insufficient_converged_range,
  insufficient_decay,
  // io
  io_error,
};

constexpr std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::missing_key: return "MissingKey";
    case ErrorCode::unknown_key: return "UnknownKey";
    case ErrorCode::malformed_line: return "MalformedLine";
    case ErrorCode::ordering_violation: return "OrderingViolation";
    case ErrorCode::non_positive_coefficient: return "NonPositiveCoefficient";
    case ErrorCode::point_on_interface: return "PointOnInterface";
    case ErrorCode::on_discontinuity: return "OnDiscontinuity";
    case ErrorCode::out_of_domain: return "OutOfDomain";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::singular_mass: return "SingularMass";
    case ErrorCode::factorization_failure: return "FactorizationFailure";
    case ErrorCode::cholesky_failure: return "CholeskyFailure";
    case ErrorCode::degenerate_coefficient: return "DegenerateCoefficient";
    case ErrorCode::near_singular: return "NearSingular";
    case ErrorCode::boundary_root: return "BoundaryRoot";
    case ErrorCode::non_converged_sampling: return "NonConvergedSampling";
    case ErrorCode::no_convergence: return "NoConvergence";
    case ErrorCode::multiple_root_suspected: return "MultipleRootSuspected";
    case ErrorCode::qr_no_convergence: return "QRNoConvergence";
    case ErrorCode::no_certified_pairs: return "NoCertifiedPairs";
    case ErrorCode::zero_vector: return "ZeroVector";
    case ErrorCode::insufficient_converged_range: return "InsufficientConvergedRange";
    case ErrorCode::insufficient_decay: return "InsufficientDecay";
    case ErrorCode::io_error: return "IOError";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable code next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ebgevrey
