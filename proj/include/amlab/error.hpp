#pragma once

#include <stdexcept>
#include <string>

namespace amlab {

enum class ErrorKind {
  invalid_dimension,
  n_not_power_of_two,
  invalid_argument,
  ball_outside_domain,
  scaled_ball_outside_domain,
  dilated_ball_outside_domain,
  nonpositive_scale,
  empty_family,
  subset_violation,
  epsilon_below_grid,
  dimension_not_two,
  empty_t_grid,
  nonpositive_r,
  empty_r_set,
  base_not_linear,
  evaluation_inside_support,
  no_admissible_centers,
  empty_radii,
  unknown_generator,
  hypothesis_violation,
  exponent_order_violation,
  family_mismatch,
  grid_mismatch,
  parse_error,
  io_error,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_dimension: return "invalid-dimension";
    case ErrorKind::n_not_power_of_two: return "N-not-power-of-two";
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::ball_outside_domain: return "ball-outside-domain";
    case ErrorKind::scaled_ball_outside_domain: return "scaled-ball-outside-domain";
    case ErrorKind::dilated_ball_outside_domain: return "dilated-ball-outside-domain";
    case ErrorKind::nonpositive_scale: return "nonpositive-scale";
    case ErrorKind::empty_family: return "empty-family";
    case ErrorKind::subset_violation: return "E-not-subset-of-B";
    case ErrorKind::epsilon_below_grid: return "epsilon-below-grid";
    case ErrorKind::dimension_not_two: return "dimension-not-two";
    case ErrorKind::empty_t_grid: return "empty-t-grid";
    case ErrorKind::nonpositive_r: return "nonpositive-R";
    case ErrorKind::empty_r_set: return "empty-R-set";
    case ErrorKind::base_not_linear: return "base-not-linear";
    case ErrorKind::evaluation_inside_support: return "evaluation-inside-support";
    case ErrorKind::no_admissible_centers: return "no-admissible-centers";
    case ErrorKind::empty_radii: return "empty-radii";
    case ErrorKind::unknown_generator: return "unknown-generator";
    case ErrorKind::hypothesis_violation: return "hypothesis-violation";
    case ErrorKind::exponent_order_violation: return "exponent-order-violation";
    case ErrorKind::family_mismatch: return "family-mismatch";
    case ErrorKind::grid_mismatch: return "grid-mismatch";
    case ErrorKind::parse_error: return "parse-error";
    case ErrorKind::io_error: return "io-error";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the kinds above so
/// front ends can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace amlab
