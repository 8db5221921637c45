#pragma once

// System (S, d dof) coupled to environment (E, N dof) through V(z, u) = z . G u.
// Total phase space is ordered (z, u) = (x, xi, y, eta) with form J_S (+) J_E.

#include <Eigen/Dense>

#include <vector>

#include "gaussflow/hamiltonian.hpp"
#include "gaussflow/symplectic.hpp"

namespace gaussflow {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class BipartiteSystem {
 public:
  BipartiteSystem(QuadraticHamiltonian<double> system, QuadraticHamiltonian<double> environment,
                  MatrixSchedule<double> coupling);
  BipartiteSystem(QuadraticHamiltonian<double> system, QuadraticHamiltonian<double> environment,
                  MatrixXd coupling);

  Eigen::Index d() const { return system_.dof(); }
  Eigen::Index N() const { return environment_.dof(); }
  bool is_autonomous() const;

  const QuadraticHamiltonian<double>& system() const { return system_; }
  const QuadraticHamiltonian<double>& environment() const { return environment_; }
  const MatrixSchedule<double>& coupling_schedule() const { return coupling_; }
  MatrixXd coupling(double t = 0) const { return coupling_(t); }

 private:
  QuadraticHamiltonian<double> system_;
  QuadraticHamiltonian<double> environment_;
  MatrixSchedule<double> coupling_;
};

// Hessian of H_S (+) H_E plus G, G^T in the (z, u) off-diagonal blocks.
MatrixXd total_hessian(const BipartiteSystem& sys, double t);

// J (total_hessian) and the block-diagonal free generator.
MatrixXd total_generator(const BipartiteSystem& sys, double t);
MatrixXd free_generator(const BipartiteSystem& sys, double t);

// Everything known about the bipartite flow at one instant.
struct FlowSnapshot {
  double t = 0;
  PhaseSpaceFlow<double> full;         // Phi^t
  MatrixXd system_flow;                // Phi_S^t
  MatrixXd environment_flow;           // Phi_E^t
  PhaseSpaceFlow<double> interaction;  // Psi^t = (Phi_0^t)^{-1} Phi^t
  MatrixXd coupling;                   // G(t) = (Phi_S^t)^T G Phi_E^t
  MatrixXd bare_coupling;              // G evaluated at t
};

struct FlowDiagnostics {
  double max_symplectic_deviation = 0;  // over Phi^t and Psi^t on the grid
  long integrator_steps = 0;
  bool used_exponential = false;
};

struct FlowBundle {
  Eigen::Index d = 0;
  Eigen::Index N = 0;
  std::vector<double> times;
  std::vector<FlowSnapshot> snapshots;
  FlowDiagnostics diagnostics;

  std::size_t size() const { return snapshots.size(); }
  const FlowSnapshot& operator[](std::size_t k) const { return snapshots[k]; }
};

// Flows on a sorted grid starting at 0, accumulated as U(t_{k+1}, 0) = U(t_{k+1}, t_k) U(t_k, 0).
FlowBundle full_flow(const BipartiteSystem& sys, const std::vector<double>& t_grid,
                     const FlowOptions& options = {});

// Single snapshot at any real t (negative t runs the flow backward).
FlowSnapshot flow_at(const BipartiteSystem& sys, double t, const FlowOptions& options = {});

// Builds a snapshot from already computed Phi^t, Phi_S^t, Phi_E^t.
FlowSnapshot make_snapshot(const BipartiteSystem& sys, double t, const MatrixXd& full,
                           const MatrixXd& system_flow, const MatrixXd& environment_flow);

// J grad^2 V(t) with V(t) = z . G(t) u, i.e. [[0, J_S G(t)], [J_E G(t)^T, 0]].
MatrixXd interaction_generator(const BipartiteSystem& sys, double t,
                               const FlowOptions& options = {});
MatrixXd interaction_generator(const MatrixXd& dressed_coupling, Eigen::Index d, Eigen::Index N);

// Psi^t obtained by integrating the interaction generator directly.
MatrixXd integrate_interaction_flow(const BipartiteSystem& sys, double t,
                                    const FlowOptions& options = {});

// Uniform grid {0, t_max/steps, ..., t_max}.
std::vector<double> uniform_grid(double t_max, int steps);

}  // namespace gaussflow
