#pragma once

// Reference models.
//
// Two oscillators:  H = 1/2 (xi^2 + eta^2 + w_S^2 x^2 + w_E^2 y^2) + gamma x y,
// solvable through the normal modes lambda_pm of [[w_S^2, gamma], [gamma, w_E^2]].
//
// Oscillator bath:  H = xi^2/2m + w_S^2 x^2/2 + sum_j [eta_j^2/2 + k_j (y_j - x)^2 / 2],
// split as H_S = xi^2/2m + (w_S^2 + sum k_j) x^2/2, H_E = sum (eta_j^2 + k_j y_j^2)/2
// and coupling -x sum_j k_j y_j.

#include <Eigen/Dense>

#include <vector>

#include "gaussflow/bipartite.hpp"
#include "gaussflow/symplectic.hpp"

namespace gaussflow {

// ------------------------------------------------------------ two oscillators

struct TwoOscillatorParams {
  double omega_s = 1;
  double omega_e_sq = 1;  // may be negative (inverted environment oscillator)
  double gamma = 0;
};

struct NormalModes {
  double lambda_plus = 0;
  double lambda_minus = 0;
  double R = 0;  // sqrt((w_S^2 - w_E^2)^2 + 4 gamma^2)
  double cos_theta = 1;
  double sin_theta = 0;  // carries the sign of gamma
};

NormalModes normal_modes(const TwoOscillatorParams& p);

// cos(t sqrt(lambda)) and sin(t sqrt(lambda)) / sqrt(lambda), continued to lambda <= 0.
double even_propagator(double lambda, double t);
double odd_propagator(double lambda, double t);

// Exact flow in block coordinates (x, xi, y, eta).
PhaseSpaceFlow<double> two_oscillator_flow(const TwoOscillatorParams& p, double t);

// det Phi_ii^t from the closed forms in terms of (w_S, w_E, gamma) and of theta.
double two_oscillator_det_ii(const TwoOscillatorParams& p, double t);
double two_oscillator_det_ii_theta(const TwoOscillatorParams& p, double t);

BipartiteSystem two_oscillator_system(const TwoOscillatorParams& p);

// --------------------------------------------------------------- bath model

struct QBMParams {
  double mass = 1;
  double omega_s = 1;
  std::vector<double> k;       // spring constants, all > 0
  std::vector<double> masses;  // bath masses; empty means all 1
};

BipartiteSystem qbm_build(const QBMParams& p);

// Memory kernel sum_j k_j cos(sqrt(k_j) t); requires unit bath masses.
double qbm_kernel(const QBMParams& p, double t);

// Force sum_j [k_j y_j(0) cos(sqrt(k_j) t) + sqrt(k_j) eta_j(0) sin(sqrt(k_j) t)]
// for the bath part u0 = (y_1..y_N, eta_1..eta_N) of the initial point.
double qbm_force(const QBMParams& p, const VectorXd& u0, double t);

struct QBMResidual {
  std::vector<double> times;
  std::vector<double> x;
  std::vector<double> residual;
  double sup_norm = 0;
};

// Residual of
//   m x'' + int_0^t K(t - s) x'(s) ds + w_S^2 x + K(t) x(0) - F(t)
// along the exact trajectory from z0 = (x, xi, y_1..y_N, eta_1..eta_N) on the uniform
// grid {0, ..., t_max}. The memory integral uses the trapezoid rule.
// Throws GridError when the step does not resolve the fastest bath frequency.
QBMResidual qbm_residual(const QBMParams& p, const VectorXd& z0, double t_max, int steps);

}  // namespace gaussflow
