#pragma once

#include <stdexcept>
#include <string>

namespace isoflow {

// Thrown when an input violates a documented precondition (bad exponent,
// mismatched endpoints, too few nodes, ...).  CLI maps this to exit code 2.
struct precondition_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when the metric degenerates where it must not (W = 0 at an interior
// sample, Hessian with a zero eigenvalue at a well, ...).
struct degeneracy_error : std::domain_error {
  using std::domain_error::domain_error;
};

// Thrown when a formula leaves its domain of validity (negative radicand in
// the radial g_beta integrand, point outside a series' validity radius).
struct domain_error : std::domain_error {
  using std::domain_error::domain_error;
};

// Thrown when an iteration fails to converge or a linear solve is too ill
// conditioned to trust.  CLI maps this to exit code 3.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace isoflow
