#include "gaussflow/bipartite.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gaussflow {

namespace {

void check_dims(const QuadraticHamiltonian<double>& s, const QuadraticHamiltonian<double>& e,
                Eigen::Index rows, Eigen::Index cols) {
  if (s.dof() == 0) throw std::invalid_argument("BipartiteSystem: system has no degrees of freedom");
  if (rows != 2 * s.dof() || cols != 2 * e.dof()) {
    throw std::invalid_argument("BipartiteSystem: coupling is " + std::to_string(rows) + "x" +
                                std::to_string(cols) + ", expected " +
                                std::to_string(2 * s.dof()) + "x" + std::to_string(2 * e.dof()));
  }
}

MatrixXd propagate(const QuadraticHamiltonian<double>& h, double t0, double t1,
                   const FlowOptions& options, long* steps) {
  if (h.dof() == 0) return MatrixXd(0, 0);
  if (h.is_autonomous()) return matrix_exponential<double>(h.generator(), t1 - t0);
  auto result = integrate_flow<double>([&](double t) { return h.generator(t); }, t0, t1, options);
  if (steps) *steps += result.accepted_steps;
  return result.U;
}

MatrixXd propagate_total(const BipartiteSystem& sys, double t0, double t1,
                         const FlowOptions& options, long* steps) {
  if (sys.is_autonomous()) return matrix_exponential<double>(total_generator(sys, 0), t1 - t0);
  auto result = integrate_flow<double>([&](double t) { return total_generator(sys, t); }, t0, t1,
                                       options, bipartite_symplectic_form(sys.d(), sys.N()));
  if (steps) *steps += result.accepted_steps;
  return result.U;
}

}  // namespace

BipartiteSystem::BipartiteSystem(QuadraticHamiltonian<double> system,
                                 QuadraticHamiltonian<double> environment,
                                 MatrixSchedule<double> coupling)
    : system_(std::move(system)), environment_(std::move(environment)), coupling_(std::move(coupling)) {
  check_dims(system_, environment_, coupling_.rows(), coupling_.cols());
}

BipartiteSystem::BipartiteSystem(QuadraticHamiltonian<double> system,
                                 QuadraticHamiltonian<double> environment, MatrixXd coupling)
    : BipartiteSystem(std::move(system), std::move(environment),
                      MatrixSchedule<double>::constant(std::move(coupling))) {}

bool BipartiteSystem::is_autonomous() const {
  return system_.is_autonomous() && environment_.is_autonomous() && coupling_.is_constant();
}

MatrixXd total_hessian(const BipartiteSystem& sys, double t) {
  const Eigen::Index zs = 2 * sys.d();
  const Eigen::Index us = 2 * sys.N();
  MatrixXd h = MatrixXd::Zero(zs + us, zs + us);
  h.topLeftCorner(zs, zs) = sys.system().hessian(t);
  if (us > 0) {
    h.bottomRightCorner(us, us) = sys.environment().hessian(t);
    const MatrixXd g = sys.coupling(t);
    h.topRightCorner(zs, us) = g;
    h.bottomLeftCorner(us, zs) = g.transpose();
  }
  return h;
}

MatrixXd total_generator(const BipartiteSystem& sys, double t) {
  return bipartite_symplectic_form(sys.d(), sys.N()) * total_hessian(sys, t);
}

MatrixXd free_generator(const BipartiteSystem& sys, double t) {
  MatrixXd k = total_generator(sys, t);
  const Eigen::Index zs = 2 * sys.d();
  const Eigen::Index us = 2 * sys.N();
  k.topRightCorner(zs, us).setZero();
  k.bottomLeftCorner(us, zs).setZero();
  return k;
}

FlowSnapshot make_snapshot(const BipartiteSystem& sys, double t, const MatrixXd& full,
                           const MatrixXd& system_flow, const MatrixXd& environment_flow) {
  const Eigen::Index d = sys.d();
  const Eigen::Index N = sys.N();
  FlowSnapshot snap;
  snap.t = t;
  snap.full = PhaseSpaceFlow<double>(d, N, t, full);
  snap.system_flow = system_flow;
  snap.environment_flow = environment_flow;

  MatrixXd psi(full.rows(), full.cols());
  const Eigen::PartialPivLU<MatrixXd> lu_s(system_flow);
  psi.topRows(2 * d) = lu_s.solve(full.topRows(2 * d));
  if (N > 0) {
    const Eigen::PartialPivLU<MatrixXd> lu_e(environment_flow);
    psi.bottomRows(2 * N) = lu_e.solve(full.bottomRows(2 * N));
  }
  snap.interaction = PhaseSpaceFlow<double>(d, N, t, std::move(psi));
  snap.bare_coupling = sys.coupling(t);
  snap.coupling = N > 0 ? MatrixXd(system_flow.transpose() * snap.bare_coupling * environment_flow)
                        : MatrixXd(2 * d, 0);
  return snap;
}

FlowBundle full_flow(const BipartiteSystem& sys, const std::vector<double>& t_grid,
                     const FlowOptions& options) {
  if (t_grid.empty() || t_grid.front() != 0.0) {
    throw std::invalid_argument("full_flow: time grid must start at 0");
  }
  for (std::size_t k = 1; k < t_grid.size(); ++k) {
    if (!(t_grid[k] > t_grid[k - 1])) {
      throw std::invalid_argument("full_flow: time grid must be strictly increasing");
    }
  }
  FlowBundle bundle;
  bundle.d = sys.d();
  bundle.N = sys.N();
  bundle.times = t_grid;
  bundle.diagnostics.used_exponential = sys.is_autonomous();
  const MatrixXd j_total = bipartite_symplectic_form(sys.d(), sys.N());

  const Eigen::Index dim = 2 * (sys.d() + sys.N());
  MatrixXd phi = MatrixXd::Identity(dim, dim);
  MatrixXd phi_s = MatrixXd::Identity(2 * sys.d(), 2 * sys.d());
  MatrixXd phi_e = MatrixXd::Identity(2 * sys.N(), 2 * sys.N());
  long steps = 0;
  double max_dev = 0;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (k > 0) {
      const double t0 = t_grid[k - 1];
      const double t1 = t_grid[k];
      phi = propagate_total(sys, t0, t1, options, &steps) * phi;
      phi_s = propagate(sys.system(), t0, t1, options, &steps) * phi_s;
      if (sys.N() > 0) phi_e = propagate(sys.environment(), t0, t1, options, &steps) * phi_e;
    }
    bundle.snapshots.push_back(make_snapshot(sys, t_grid[k], phi, phi_s, phi_e));
    const auto& snap = bundle.snapshots.back();
    max_dev = std::max({max_dev, symplectic_deviation(snap.full.M, j_total),
                        symplectic_deviation(snap.interaction.M, j_total)});
  }
  bundle.diagnostics.max_symplectic_deviation = max_dev;
  bundle.diagnostics.integrator_steps = steps;
  return bundle;
}

FlowSnapshot flow_at(const BipartiteSystem& sys, double t, const FlowOptions& options) {
  const MatrixXd phi = propagate_total(sys, 0, t, options, nullptr);
  const MatrixXd phi_s = propagate(sys.system(), 0, t, options, nullptr);
  const MatrixXd phi_e = sys.N() > 0 ? propagate(sys.environment(), 0, t, options, nullptr)
                                     : MatrixXd(0, 0);
  return make_snapshot(sys, t, phi, phi_s, phi_e);
}

MatrixXd interaction_generator(const MatrixXd& dressed_coupling, Eigen::Index d, Eigen::Index N) {
  const Eigen::Index zs = 2 * d;
  const Eigen::Index us = 2 * N;
  MatrixXd k = MatrixXd::Zero(zs + us, zs + us);
  if (N == 0) return k;
  k.topRightCorner(zs, us) = symplectic_form(d) * dressed_coupling;
  k.bottomLeftCorner(us, zs) = symplectic_form(N) * dressed_coupling.transpose();
  return k;
}

MatrixXd interaction_generator(const BipartiteSystem& sys, double t, const FlowOptions& options) {
  if (sys.N() == 0) return interaction_generator(MatrixXd(2 * sys.d(), 0), sys.d(), 0);
  const MatrixXd phi_s = propagate(sys.system(), 0, t, options, nullptr);
  const MatrixXd phi_e = propagate(sys.environment(), 0, t, options, nullptr);
  return interaction_generator(MatrixXd(phi_s.transpose() * sys.coupling(t) * phi_e), sys.d(),
                               sys.N());
}

MatrixXd integrate_interaction_flow(const BipartiteSystem& sys, double t,
                                    const FlowOptions& options) {
  auto result = integrate_flow<double>(
      [&](double s) { return interaction_generator(sys, s, options); }, 0.0, t, options,
      bipartite_symplectic_form(sys.d(), sys.N()));
  return result.U;
}

std::vector<double> uniform_grid(double t_max, int steps) {
  if (!(t_max > 0) || steps < 1) {
    throw std::invalid_argument("uniform_grid: need t_max > 0 and steps >= 1");
  }
  std::vector<double> grid(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) grid[static_cast<std::size_t>(k)] = t_max * k / steps;
  return grid;
}

}  // namespace gaussflow
