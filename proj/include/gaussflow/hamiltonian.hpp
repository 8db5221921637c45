#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "gaussflow/symplectic.hpp"

namespace gaussflow {

// A matrix-valued function of time that may be constant. Constant values let
// callers take the matrix-exponential path instead of integrating.
template <typename Scalar = double>
class MatrixSchedule {
 public:
  using Function = std::function<Mat<Scalar>(Scalar)>;

  MatrixSchedule() = default;

  static MatrixSchedule constant(Mat<Scalar> value) {
    MatrixSchedule s;
    s.rows_ = value.rows();
    s.cols_ = value.cols();
    s.constant_ = std::move(value);
    return s;
  }

  static MatrixSchedule varying(Eigen::Index rows, Eigen::Index cols, Function fn) {
    if (!fn) throw std::invalid_argument("MatrixSchedule: empty function");
    MatrixSchedule s;
    s.rows_ = rows;
    s.cols_ = cols;
    s.fn_ = std::move(fn);
    return s;
  }

  bool is_constant() const { return constant_.has_value(); }
  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }

  Mat<Scalar> operator()(Scalar t) const {
    if (constant_) return *constant_;
    Mat<Scalar> m = fn_(t);
    if (m.rows() != rows_ || m.cols() != cols_) {
      throw std::invalid_argument("MatrixSchedule: function returned " +
                                  std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                  ", expected " + std::to_string(rows_) + "x" +
                                  std::to_string(cols_));
    }
    return m;
  }

 private:
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  std::optional<Mat<Scalar>> constant_;
  Function fn_;
};

// H(z) = 1/2 z . hessian(t) z on R^{2n}.
template <typename Scalar = double>
class QuadraticHamiltonian {
 public:
  QuadraticHamiltonian() = default;

  explicit QuadraticHamiltonian(Mat<Scalar> hessian) {
    detail::require_even_square(hessian, "QuadraticHamiltonian");
    if (!is_symmetric(hessian)) {
      throw std::invalid_argument("QuadraticHamiltonian: hessian is not symmetric");
    }
    hessian_ = MatrixSchedule<Scalar>::constant((hessian + hessian.transpose()) / Scalar(2));
  }

  QuadraticHamiltonian(Eigen::Index dof, typename MatrixSchedule<Scalar>::Function fn)
      : hessian_(MatrixSchedule<Scalar>::varying(2 * dof, 2 * dof, std::move(fn))) {}

  Eigen::Index dof() const { return hessian_.rows() / 2; }
  bool is_autonomous() const { return hessian_.is_constant(); }

  Mat<Scalar> hessian(Scalar t = 0) const {
    Mat<Scalar> h = hessian_(t);
    if (!hessian_.is_constant() && !is_symmetric(h)) {
      throw std::invalid_argument("QuadraticHamiltonian: hessian(t) is not symmetric at t = " +
                                  std::to_string(static_cast<double>(t)));
    }
    return h;
  }

  // J hessian(t): generator of the Hamiltonian flow.
  Mat<Scalar> generator(Scalar t = 0) const { return symplectic_form<Scalar>(dof()) * hessian(t); }

  Scalar energy(const Vec<Scalar>& z, Scalar t = 0) const {
    return z.dot(hessian(t) * z) / Scalar(2);
  }

 private:
  MatrixSchedule<Scalar> hessian_;
};

}  // namespace gaussflow
