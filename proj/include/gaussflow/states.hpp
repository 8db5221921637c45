#pragma once

// Gaussian density matrices through their Weyl symbols
//   rho(z) = det(Gamma)^{-1/2} exp(-1/2 (z - m) . Gamma^{-1} (z - m)),  hbar = 1.
// Integrals against (2 pi)^{-n} dz are traces.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "gaussflow/errors.hpp"
#include "gaussflow/hamiltonian.hpp"
#include "gaussflow/symplectic.hpp"

namespace gaussflow {

namespace tolerances {
// lambda_j >= 1/2 - kValidity is a quantum state; |lambda_j - 1/2| <= kValidity is a pure mode.
inline constexpr double kValidity = 1e-9;
}  // namespace tolerances

template <typename Scalar = double>
struct GaussianState {
  Vec<Scalar> mean;
  Mat<Scalar> cov;

  GaussianState() = default;
  GaussianState(Vec<Scalar> m, Mat<Scalar> c) : mean(std::move(m)), cov(std::move(c)) {
    detail::require_even_square(cov, "GaussianState");
    if (mean.size() != cov.rows()) {
      throw std::invalid_argument("GaussianState: mean has size " + std::to_string(mean.size()) +
                                  ", covariance is " + std::to_string(cov.rows()) + " square");
    }
    if (!is_symmetric(cov)) {
      throw std::invalid_argument("GaussianState: covariance is not symmetric");
    }
    cov = (cov + cov.transpose()) / Scalar(2);
  }
  explicit GaussianState(const Mat<Scalar>& c) : GaussianState(Vec<Scalar>::Zero(c.rows()), c) {}

  Eigen::Index dof() const { return cov.rows() / 2; }
};

// ------------------------------------------------------------------ presets

template <typename Scalar = double>
GaussianState<Scalar> vacuum_state(Eigen::Index n) {
  return GaussianState<Scalar>(Mat<Scalar>::Identity(2 * n, 2 * n) / Scalar(2));
}

// Product of n thermal modes of H_osc, Gamma = I / (2 tau), tau in (0, 1].
template <typename Scalar = double>
GaussianState<Scalar> isotropic_thermal_state(Eigen::Index n, Scalar tau) {
  if (!(tau > 0)) throw std::invalid_argument("isotropic_thermal_state: tau must be positive");
  return GaussianState<Scalar>(Mat<Scalar>::Identity(2 * n, 2 * n) / (Scalar(2) * tau));
}

// Squeezed vacuum, position variance e^{-2r}/2 and momentum variance e^{2r}/2 per mode.
template <typename Scalar = double>
GaussianState<Scalar> squeezed_state(Eigen::Index n, Scalar r) {
  Vec<Scalar> diag(2 * n);
  diag.head(n).setConstant(std::exp(-2 * r) / 2);
  diag.tail(n).setConstant(std::exp(2 * r) / 2);
  return GaussianState<Scalar>(Mat<Scalar>(diag.asDiagonal()));
}

// ---------------------------------------------------------------- validity

template <typename Scalar = double>
struct ValidityReport {
  bool positive_definite = false;
  bool valid = false;           // all lambda_j >= 1/2
  bool pure = false;            // all lambda_j == 1/2
  bool partially_pure = false;  // some but not all lambda_j == 1/2
  Scalar min_symplectic_eigenvalue = 0;
  Vec<Scalar> symplectic_eigenvalues;
};

template <typename Scalar>
ValidityReport<Scalar> validate(const GaussianState<Scalar>& state,
                                double tol = tolerances::kValidity) {
  if (!is_symmetric(state.cov)) {
    throw std::invalid_argument("validate: covariance is not symmetric");
  }
  ValidityReport<Scalar> report;
  try {
    report.symplectic_eigenvalues = symplectic_eigenvalues<Scalar>(state.cov);
  } catch (const std::invalid_argument&) {
    // not positive-definite: cannot be a density matrix
    return report;
  }
  report.positive_definite = true;
  const auto& lam = report.symplectic_eigenvalues;
  report.min_symplectic_eigenvalue = lam.minCoeff();
  report.valid = report.min_symplectic_eigenvalue >= Scalar(0.5) - Scalar(tol);
  Eigen::Index n_pure = 0;
  for (Eigen::Index j = 0; j < lam.size(); ++j) {
    if (std::abs(lam(j) - Scalar(0.5)) <= Scalar(tol)) ++n_pure;
  }
  report.pure = report.valid && n_pure == lam.size();
  report.partially_pure = report.valid && n_pure > 0 && n_pure < lam.size();
  return report;
}

template <typename Scalar>
void require_valid(const GaussianState<Scalar>& state, const char* where) {
  const auto report = validate(state);
  if (!report.valid) {
    throw InvalidStateError(std::string(where) +
                                ": not a quantum state, smallest symplectic eigenvalue " +
                                std::to_string(static_cast<double>(report.min_symplectic_eigenvalue)) +
                                " is below the bound 1/2",
                            static_cast<double>(report.min_symplectic_eigenvalue));
  }
}

// -------------------------------------------------------- purity, entropies

// 2^{-n} det(Gamma)^{-1/2}, evaluated in log space.
template <typename Scalar>
Scalar purity(const GaussianState<Scalar>& state) {
  require_valid(state, "purity");
  Eigen::LLT<Mat<Scalar>> llt(state.cov);
  const Scalar half_logdet = llt.matrixLLT().diagonal().array().log().sum();
  return std::exp(-Scalar(state.dof()) * std::log(Scalar(2)) - half_logdet);
}

template <typename Scalar>
Scalar linear_entropy(const GaussianState<Scalar>& state) {
  return Scalar(1) - purity(state);
}

// Entropy in bits of one thermal mode with parameter tau in (0, 1].
template <typename Scalar>
Scalar mode_entropy(Scalar tau) {
  if (!(tau > 0)) throw std::invalid_argument("mode_entropy: tau must be positive");
  if (tau >= 1) return 0;
  const Scalar nats = (1 - tau) / (2 * tau) * std::log((1 + tau) / (1 - tau)) -
                      std::log(2 * tau / (1 + tau));
  return nats / std::numbers::ln2_v<Scalar>;
}

// Sum of mode entropies with tau_j = 1 / (2 lambda_j).
template <typename Scalar>
Scalar von_neumann_entropy(const GaussianState<Scalar>& state) {
  require_valid(state, "von_neumann_entropy");
  const Vec<Scalar> lam = symplectic_eigenvalues<Scalar>(state.cov);
  Scalar s = 0;
  for (Eigen::Index j = 0; j < lam.size(); ++j) s += mode_entropy(Scalar(1) / (2 * lam(j)));
  return s;
}

// ------------------------------------------------------------ thermal states

// Gibbs state exp(-beta H)/Z of a positive-definite quadratic Hamiltonian:
// Gamma = S diag(c, c) S^T with c_j = 1 / (2 tanh(beta lambda_j / 2)), where
// (S, lambda) is the Williamson form of the Hessian.
template <typename Scalar>
GaussianState<Scalar> thermal_state(const QuadraticHamiltonian<Scalar>& h, Scalar beta) {
  if (!h.is_autonomous()) {
    throw std::invalid_argument("thermal_state: Hamiltonian must be time independent");
  }
  if (!(beta > 0)) throw std::invalid_argument("thermal_state: beta must be positive");
  WilliamsonDecomposition<Scalar> w;
  try {
    w = williamson<Scalar>(h.hessian());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("thermal_state: Hessian must be positive-definite (") +
                                e.what() + ")");
  }
  const Eigen::Index n = h.dof();
  Vec<Scalar> c(2 * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Scalar v = Scalar(1) / (2 * std::tanh(beta * w.lambda(j) / 2));
    c(j) = v;
    c(n + j) = v;
  }
  Mat<Scalar> cov = w.S * c.asDiagonal() * w.S.transpose();
  return GaussianState<Scalar>(Vec<Scalar>::Zero(2 * n), (cov + cov.transpose()) / Scalar(2));
}

// ---------------------------------------------------------------- Wigner

template <typename Scalar>
Scalar wigner_eval(const GaussianState<Scalar>& state, const Vec<Scalar>& z) {
  if (z.size() != state.mean.size()) {
    throw std::invalid_argument("wigner_eval: point has wrong dimension");
  }
  require_valid(state, "wigner_eval");
  Eigen::LLT<Mat<Scalar>> llt(state.cov);
  const Vec<Scalar> dz = z - state.mean;
  const Scalar quad = dz.dot(llt.solve(dz));
  const Scalar half_logdet = llt.matrixLLT().diagonal().array().log().sum();
  return std::exp(-half_logdet - quad / 2);
}

// |E[exp(-i zeta . z)]| = exp(-1/2 zeta . Gamma zeta)
template <typename Scalar>
Scalar centred_characteristic(const GaussianState<Scalar>& state, const Vec<Scalar>& zeta) {
  return std::exp(-zeta.dot(state.cov * zeta) / 2);
}

}  // namespace gaussflow
