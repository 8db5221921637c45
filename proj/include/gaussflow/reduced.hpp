#pragma once

// Reduced dynamics of the system part: exact Gaussian moments, coefficients of
// the reduced Fokker-Planck equation, critical time, short-time rates.

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gaussflow/bipartite.hpp"
#include "gaussflow/states.hpp"

namespace gaussflow {

// ------------------------------------------------------------- trajectories

struct ReducedPoint {
  double t = 0;
  VectorXd mean;
  MatrixXd cov;
  double purity = 0;
  double linear_entropy = 0;
  double von_neumann_entropy = 0;
  double det_ii = 0;
  double min_symplectic_eigenvalue = 0;
  double total_log_det = 0;  // log det of the evolved total covariance
};

struct ReducedTrajectory {
  Eigen::Index d = 0;
  std::vector<ReducedPoint> points;

  std::size_t size() const { return points.size(); }
  const ReducedPoint& operator[](std::size_t k) const { return points[k]; }
  GaussianState<double> state(std::size_t k) const { return {points[k].mean, points[k].cov}; }
};

// Gamma_S(t) = Phi_ii Gamma_S Phi_ii^T + Phi_ie Gamma_E Phi_ie^T,
// m_S(t) = Phi_ii m_S + Phi_ie m_E.  Defined at every t.
GaussianState<double> reduced_state(const FlowSnapshot& snap, const GaussianState<double>& system0,
                                    const GaussianState<double>& environment0);

ReducedTrajectory evolve_reduced(const FlowBundle& flow, const GaussianState<double>& system0,
                                 const GaussianState<double>& environment0);

// 1 - purity at each point, recomputed through `linear_entropy`.
std::vector<double> linear_entropy_curve(const ReducedTrajectory& trajectory);

// Purity from (2 pi)^{-d} int exp(-zeta.Theta zeta) |chi_0(Phi_ii^T zeta)|^2 d zeta on a
// tensor trapezoid grid with `points` nodes per axis; independent of the determinant route.
double purity_by_quadrature(const FlowSnapshot& snap, const GaussianState<double>& system0,
                            const GaussianState<double>& environment0, int points = 161);

// Quadratic form Q_t(zeta) = zeta . Q zeta of the information-loss diagnostic;
// Q = Phi_ii Gamma_S Phi_ii^T + Phi_ie Gamma_E Phi_ie^T.
MatrixXd information_form(const FlowSnapshot& snap, const GaussianState<double>& system0,
                          const GaussianState<double>& environment0);

// ------------------------------------------------------ master coefficients

enum class Picture { interaction, schrodinger };

const char* to_string(Picture p);
Picture picture_from_string(const std::string& s);

// Coefficients of the reduced equation
//   d/dt rho = (A grad) . z rho + (B grad) . grad rho + v . grad rho
// together with the accumulated thermal covariance Theta.
struct MasterCoefficients {
  double t = 0;
  Picture picture = Picture::interaction;
  MatrixXd A;
  MatrixXd B;
  VectorXd v;
  MatrixXd Theta;
  double det_ii = 1;
  double rcond_ii = 1;
};

namespace tolerances {
inline constexpr double kSingularBlock = 1e-14;  // reciprocal condition number floor
}

// Throws SingularBlockError when the ii block is numerically singular.
MasterCoefficients master_coefficients(const FlowSnapshot& snap,
                                       const GaussianState<double>& environment0,
                                       Picture picture = Picture::interaction);

std::vector<MasterCoefficients> master_coefficients(const FlowBundle& flow,
                                                    const GaussianState<double>& environment0,
                                                    Picture picture = Picture::interaction);

// ------------------------------------------------------------ critical time

struct CriticalTimeOptions {
  double step = 0;       // sampling step; 0 picks 0.1 / ||generator||
  double margin = 1e-6;  // |det| below this without a sign change triggers a warning
  double rel_tol = 1e-10;
  FlowOptions flow;
};

struct CriticalTimeResult {
  std::optional<double> t_c;
  double step = 0;
  double t_max = 0;
  double min_abs_det = 1;
  double coupling_norm = 0;
  std::vector<std::string> warnings;
};

// First sign change of det_fn on (0, t_max], refined by bisection.
CriticalTimeResult critical_time(const std::function<double(double)>& det_fn, double t_max,
                                 double step, const CriticalTimeOptions& options = {});

// det Phi_ii^t of the given system.
CriticalTimeResult critical_time(const BipartiteSystem& sys, double t_max,
                                 const CriticalTimeOptions& options = {});

// ------------------------------------------------------- short-time rates

// Second derivative of the reduced purity at t = 0 for a pure system state and a
// mean-zero environment:
//   -4 tr(Gamma_S G Gamma_E G^T) + tr(J_S G J_E G^T).
struct PurityRate {
  double value = 0;
  double fluctuation_term = 0;  // -4 tr(Gamma_S G Gamma_E G^T)
  double quantum_term = 0;      // -tr(J_S G J_E G^T)
};

PurityRate purity_rate_initial(const BipartiteSystem& sys, const GaussianState<double>& system0,
                               const GaussianState<double>& environment0);

// Initial rate of change of the system-environment correlation block,
//   C'(0) = Gamma_S^{-1} J_S G - G J_E Gamma_E^{-1};
// nonzero iff G + J_S Gamma_S G J_E Gamma_E^{-1} != 0.
struct CorrelationRate {
  MatrixXd rate;
  MatrixXd criterion;
  double norm = 0;
  bool correlates = false;
};

CorrelationRate correlation_rate(const BipartiteSystem& sys, const GaussianState<double>& system0,
                                 const GaussianState<double>& environment0,
                                 double tol = 1e-12);

}  // namespace gaussflow
