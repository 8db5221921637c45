#pragma once

#include <stdexcept>
#include <string>

namespace gaussflow {

// Integrator gave up: step size underflow or non-finite generator output.
class IntegratorError : public std::runtime_error {
 public:
  IntegratorError(const std::string& what, double t) : std::runtime_error(what), t_(t) {}
  double time() const noexcept { return t_; }

 private:
  double t_;
};

// A Gaussian covariance violates the uncertainty bound (some symplectic eigenvalue < 1/2).
class InvalidStateError : public std::invalid_argument {
 public:
  InvalidStateError(const std::string& what, double min_symplectic_eigenvalue)
      : std::invalid_argument(what), min_eig_(min_symplectic_eigenvalue) {}
  double min_symplectic_eigenvalue() const noexcept { return min_eig_; }

 private:
  double min_eig_;
};

// The ii block of the flow is not invertible (at or beyond the critical time).
class SingularBlockError : public std::runtime_error {
 public:
  SingularBlockError(const std::string& what, double t, double det, double rcond)
      : std::runtime_error(what), t_(t), det_(det), rcond_(rcond) {}
  double time() const noexcept { return t_; }
  double determinant() const noexcept { return det_; }
  double reciprocal_condition() const noexcept { return rcond_; }

 private:
  double t_;
  double det_;
  double rcond_;
};

// Sampling grid cannot represent the requested field.
class GridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gaussflow
