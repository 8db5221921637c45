#include "gaussflow/reduced.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "gaussflow/errors.hpp"

namespace gaussflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_state_dims(const FlowSnapshot& snap, const GaussianState<double>& s,
                      const GaussianState<double>& e) {
  if (s.dof() != snap.full.d || e.dof() != snap.full.N) {
    std::ostringstream msg;
    msg << "state dimensions (" << s.dof() << ", " << e.dof() << ") do not match the flow ("
        << snap.full.d << ", " << snap.full.N << ")";
    throw std::invalid_argument(msg.str());
  }
}

void check_state_dims(const BipartiteSystem& sys, const GaussianState<double>& s,
                      const GaussianState<double>& e) {
  if (s.dof() != sys.d() || e.dof() != sys.N()) {
    std::ostringstream msg;
    msg << "state dimensions (" << s.dof() << ", " << e.dof() << ") do not match the system ("
        << sys.d() << ", " << sys.N() << ")";
    throw std::invalid_argument(msg.str());
  }
}

double log_det_spd(const MatrixXd& m) {
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return kNaN;
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double bisect(const std::function<double(double)>& f, double a, double b, double fa,
              double rel_tol) {
  while (b - a > rel_tol * std::max(std::abs(b), 1e-300)) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    const double fm = f(mid);
    if (fm == 0) return mid;
    if ((fm > 0) == (fa > 0)) {
      a = mid;
      fa = fm;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

// ---------------------------------------------------------------- moments

GaussianState<double> reduced_state(const FlowSnapshot& snap, const GaussianState<double>& system0,
                                    const GaussianState<double>& environment0) {
  check_state_dims(snap, system0, environment0);
  const auto& f = snap.full;
  MatrixXd cov = f.ii() * system0.cov * f.ii().transpose();
  VectorXd mean = f.ii() * system0.mean;
  if (f.N > 0) {
    cov += f.ie() * environment0.cov * f.ie().transpose();
    mean += f.ie() * environment0.mean;
  }
  return {std::move(mean), (cov + cov.transpose()) / 2};
}

ReducedTrajectory evolve_reduced(const FlowBundle& flow, const GaussianState<double>& system0,
                                 const GaussianState<double>& environment0) {
  require_valid(system0, "evolve_reduced (system state)");
  require_valid(environment0, "evolve_reduced (environment state)");
  ReducedTrajectory traj;
  traj.d = flow.d;
  const MatrixXd cov0 = direct_sum(system0.cov, environment0.cov);
  for (const auto& snap : flow.snapshots) {
    const auto state = reduced_state(snap, system0, environment0);
    ReducedPoint p;
    p.t = snap.t;
    p.mean = state.mean;
    p.cov = state.cov;
    p.det_ii = snap.full.ii().determinant();
    p.total_log_det = log_det_spd(snap.full.M * cov0 * snap.full.M.transpose());
    try {
      p.min_symplectic_eigenvalue = symplectic_eigenvalues<double>(state.cov).minCoeff();
    } catch (const std::invalid_argument&) {
      p.min_symplectic_eigenvalue = kNaN;
    }
    try {
      p.purity = purity(state);
      p.linear_entropy = 1 - p.purity;
      p.von_neumann_entropy = von_neumann_entropy(state);
    } catch (const std::invalid_argument&) {
      // round-off pushed the covariance across the uncertainty bound
      p.purity = p.linear_entropy = p.von_neumann_entropy = kNaN;
    }
    traj.points.push_back(std::move(p));
  }
  return traj;
}

std::vector<double> linear_entropy_curve(const ReducedTrajectory& trajectory) {
  std::vector<double> out;
  out.reserve(trajectory.size());
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    out.push_back(linear_entropy(trajectory.state(k)));
  }
  return out;
}

double purity_by_quadrature(const FlowSnapshot& snap, const GaussianState<double>& system0,
                            const GaussianState<double>& environment0, int points) {
  check_state_dims(snap, system0, environment0);
  if (points < 3) throw std::invalid_argument("purity_by_quadrature: need at least 3 points");
  const Eigen::Index dim = 2 * snap.full.d;
  const MatrixXd phi_t = snap.full.ii().transpose();
  const MatrixXd theta = snap.full.N > 0
                             ? MatrixXd(snap.full.ie() * environment0.cov * snap.full.ie().transpose())
                             : MatrixXd::Zero(dim, dim);

  // The box only needs to contain the integrand; use the evolved covariance to size it.
  const auto sizing = reduced_state(snap, system0, environment0);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sizing.cov);
  const double lambda_min = es.eigenvalues().minCoeff();
  if (!(lambda_min > 0)) throw std::invalid_argument("purity_by_quadrature: degenerate covariance");
  const double half_width = std::sqrt(40.0 / lambda_min);
  const double h = 2 * half_width / (points - 1);

  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  VectorXd zeta(dim);
  double sum = 0;
  for (;;) {
    double weight = 1;
    for (Eigen::Index a = 0; a < dim; ++a) {
      const int i = idx[static_cast<std::size_t>(a)];
      zeta(a) = -half_width + h * i;
      if (i == 0 || i == points - 1) weight *= 0.5;
    }
    const VectorXd pulled = phi_t * zeta;
    sum += weight * std::exp(-zeta.dot(theta * zeta)) *
           std::exp(-pulled.dot(system0.cov * pulled));
    Eigen::Index a = 0;
    while (a < dim && ++idx[static_cast<std::size_t>(a)] == points) {
      idx[static_cast<std::size_t>(a)] = 0;
      ++a;
    }
    if (a == dim) break;
  }
  return sum * std::pow(h, static_cast<double>(dim)) /
         std::pow(2 * std::numbers::pi, static_cast<double>(snap.full.d));
}

MatrixXd information_form(const FlowSnapshot& snap, const GaussianState<double>& system0,
                          const GaussianState<double>& environment0) {
  return reduced_state(snap, system0, environment0).cov;
}

// ------------------------------------------------------ master coefficients

const char* to_string(Picture p) {
  return p == Picture::interaction ? "interaction" : "schrodinger";
}

Picture picture_from_string(const std::string& s) {
  if (s == "interaction") return Picture::interaction;
  if (s == "schrodinger" || s == "schroedinger") return Picture::schrodinger;
  throw std::invalid_argument("unknown picture '" + s + "' (expected interaction|schrodinger)");
}

MasterCoefficients master_coefficients(const FlowSnapshot& snap,
                                       const GaussianState<double>& environment0,
                                       Picture picture) {
  const Eigen::Index d = snap.full.d;
  const Eigen::Index N = snap.full.N;
  if (environment0.dof() != N) {
    throw std::invalid_argument("master_coefficients: environment state has wrong dimension");
  }
  const auto& flow = picture == Picture::interaction ? snap.interaction : snap.full;
  const MatrixXd& g = picture == Picture::interaction ? snap.coupling : snap.bare_coupling;

  MasterCoefficients c;
  c.t = snap.t;
  c.picture = picture;
  const MatrixXd ii = flow.ii();
  const Eigen::PartialPivLU<MatrixXd> lu(ii);
  c.det_ii = lu.determinant();
  c.rcond_ii = lu.rcond();
  if (!(c.rcond_ii >= tolerances::kSingularBlock)) {
    std::ostringstream msg;
    msg << "master_coefficients: ii block is singular at t = " << snap.t << " (det = " << c.det_ii
        << ", rcond = " << c.rcond_ii << ")";
    throw SingularBlockError(msg.str(), snap.t, c.det_ii, c.rcond_ii);
  }
  if (N == 0) {
    c.A = c.B = c.Theta = MatrixXd::Zero(2 * d, 2 * d);
    c.v = VectorXd::Zero(2 * d);
    return c;
  }

  const MatrixXd jg = symplectic_form(d) * g;
  const MatrixXd ii_inv = lu.inverse();
  const MatrixXd ei_ii_inv = flow.ei() * ii_inv;
  const MatrixXd a_t = -jg * ei_ii_inv;
  c.A = a_t.transpose();
  const MatrixXd schur = flow.ee() - ei_ii_inv * flow.ie();
  const MatrixXd l = jg * schur * environment0.cov * flow.ie().transpose();
  c.B = (l + l.transpose()) / 2;
  c.v = -jg * flow.ee() * environment0.mean;
  const MatrixXd theta = flow.ie() * environment0.cov * flow.ie().transpose();
  c.Theta = (theta + theta.transpose()) / 2;
  return c;
}

std::vector<MasterCoefficients> master_coefficients(const FlowBundle& flow,
                                                    const GaussianState<double>& environment0,
                                                    Picture picture) {
  std::vector<MasterCoefficients> out;
  out.reserve(flow.size());
  for (const auto& snap : flow.snapshots) out.push_back(master_coefficients(snap, environment0, picture));
  return out;
}

// ------------------------------------------------------------ critical time

CriticalTimeResult critical_time(const std::function<double(double)>& det_fn, double t_max,
                                 double step, const CriticalTimeOptions& options) {
  if (!(t_max > 0)) throw std::invalid_argument("critical_time: t_max must be positive");
  if (!(step > 0)) throw std::invalid_argument("critical_time: step must be positive");
  CriticalTimeResult r;
  r.step = step;
  r.t_max = t_max;
  const long n = static_cast<long>(std::ceil(t_max / step));
  double t_prev = 0;
  double f_prev = det_fn(0);
  r.min_abs_det = std::abs(f_prev);
  for (long k = 1; k <= n; ++k) {
    const double t = std::min(t_max, k * step);
    const double f = det_fn(t);
    if (!std::isfinite(f)) throw std::runtime_error("critical_time: determinant is not finite");
    r.min_abs_det = std::min(r.min_abs_det, std::abs(f));
    if (f == 0 || (f > 0) != (f_prev > 0)) {
      r.t_c = f == 0 ? t : bisect(det_fn, t_prev, t, f_prev, options.rel_tol);
      return r;
    }
    t_prev = t;
    f_prev = f;
  }
  if (r.min_abs_det < options.margin) {
    std::ostringstream msg;
    msg << "det dips to " << r.min_abs_det << " without changing sign; a root may lie between "
        << "samples (step " << step << ")";
    r.warnings.push_back(msg.str());
  }
  return r;
}

CriticalTimeResult critical_time(const BipartiteSystem& sys, double t_max,
                                 const CriticalTimeOptions& options) {
  if (!(t_max > 0)) throw std::invalid_argument("critical_time: t_max must be positive");
  const Eigen::Index zs = 2 * sys.d();
  double step = options.step;
  if (step <= 0) {
    double norm = total_generator(sys, 0).norm();
    if (!sys.is_autonomous()) {
      for (int k = 1; k <= 16; ++k) norm = std::max(norm, total_generator(sys, t_max * k / 16).norm());
    }
    step = 0.1 / std::max(norm, 1e-12);
  }

  const MatrixXd j_total = bipartite_symplectic_form(sys.d(), sys.N());
  const bool autonomous = sys.is_autonomous();
  const MatrixXd k = total_generator(sys, 0);
  const MatrixXd e_step = autonomous ? matrix_exponential<double>(k, step) : MatrixXd();
  auto gen = [&](double t) { return total_generator(sys, t); };
  auto advance = [&](const MatrixXd& phi, double t0, double t1) -> MatrixXd {
    if (autonomous) {
      return (t1 - t0 == step) ? MatrixXd(e_step * phi)
                               : MatrixXd(matrix_exponential<double>(k, t1 - t0) * phi);
    }
    return integrate_flow<double>(gen, t0, t1, options.flow, j_total).U * phi;
  };
  auto det_ii = [&](const MatrixXd& phi) { return phi.topLeftCorner(zs, zs).determinant(); };

  CriticalTimeResult r;
  r.step = step;
  r.t_max = t_max;
  r.min_abs_det = 1;
  const long n = static_cast<long>(std::ceil(t_max / step));
  MatrixXd phi = MatrixXd::Identity(k.rows(), k.cols());
  double t_prev = 0;
  double f_prev = 1;
  for (long j = 1; j <= n; ++j) {
    const double t = std::min(t_max, t_prev + step);
    MatrixXd next = advance(phi, t_prev, t);
    const double f = det_ii(next);
    if (!std::isfinite(f)) throw std::runtime_error("critical_time: determinant is not finite");
    r.min_abs_det = std::min(r.min_abs_det, std::abs(f));
    if (f == 0 || (f > 0) != (f_prev > 0)) {
      const double t0 = t_prev;
      r.t_c = f == 0 ? t
                     : bisect([&](double s) { return det_ii(advance(phi, t0, s)); }, t_prev, t,
                              f_prev, options.rel_tol);
      break;
    }
    phi = std::move(next);
    t_prev = t;
    f_prev = f;
  }
  if (!r.t_c && r.min_abs_det < options.margin) {
    std::ostringstream msg;
    msg << "det dips to " << r.min_abs_det << " without changing sign; a root may lie between "
        << "samples (step " << step << ")";
    r.warnings.push_back(msg.str());
  }
  r.coupling_norm = sys.coupling(0).norm();
  return r;
}

// ------------------------------------------------------- short-time rates

PurityRate purity_rate_initial(const BipartiteSystem& sys, const GaussianState<double>& system0,
                               const GaussianState<double>& environment0) {
  check_state_dims(sys, system0, environment0);
  require_valid(environment0, "purity_rate_initial (environment state)");
  if (!validate(system0).pure) {
    throw std::invalid_argument("purity_rate_initial: the system state must be pure");
  }
  if (environment0.mean.cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("purity_rate_initial: the environment state must have zero mean");
  }
  PurityRate r;
  if (sys.N() == 0) return r;
  const MatrixXd g = sys.coupling(0);
  r.fluctuation_term = -4 * (system0.cov * g * environment0.cov * g.transpose()).trace();
  r.quantum_term = -(symplectic_form(sys.d()) * g * symplectic_form(sys.N()) * g.transpose()).trace();
  r.value = r.fluctuation_term + r.quantum_term;
  return r;
}

CorrelationRate correlation_rate(const BipartiteSystem& sys, const GaussianState<double>& system0,
                                 const GaussianState<double>& environment0, double tol) {
  check_state_dims(sys, system0, environment0);
  const MatrixXd g = sys.coupling(0);
  const Eigen::LLT<MatrixXd> ls(system0.cov);
  const Eigen::LLT<MatrixXd> le(environment0.cov);
  if (ls.info() != Eigen::Success) {
    throw std::invalid_argument("correlation_rate: system covariance is singular");
  }
  if (le.info() != Eigen::Success) {
    throw std::invalid_argument("correlation_rate: environment covariance is singular");
  }
  const MatrixXd js = symplectic_form(sys.d());
  const MatrixXd je = symplectic_form(sys.N());
  // G J_E Gamma_E^{-1} = (Gamma_E^{-1} J_E^T G^T)^T
  const MatrixXd right = le.solve(MatrixXd(je.transpose() * g.transpose())).transpose();
  CorrelationRate r;
  r.rate = ls.solve(MatrixXd(js * g)) - right;
  r.criterion = g + js * system0.cov * right;
  r.norm = r.rate.norm();
  r.correlates = r.criterion.norm() > tol * std::max(1.0, g.norm());
  return r;
}

}  // namespace gaussflow
