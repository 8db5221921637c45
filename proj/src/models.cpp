#include "gaussflow/models.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "gaussflow/errors.hpp"

namespace gaussflow {

NormalModes normal_modes(const TwoOscillatorParams& p) {
  if (!(p.omega_s > 0)) throw std::invalid_argument("two oscillators: omega_s must be positive");
  NormalModes m;
  const double ws2 = p.omega_s * p.omega_s;
  const double delta = ws2 - p.omega_e_sq;
  m.R = std::hypot(delta, 2 * p.gamma);
  m.lambda_plus = 0.5 * (ws2 + p.omega_e_sq + m.R);
  m.lambda_minus = 0.5 * (ws2 + p.omega_e_sq - m.R);
  if (m.R == 0) return m;  // degenerate and uncoupled: any angle works
  m.cos_theta = std::sqrt(0.5 * (1 + delta / m.R));
  // sin from sin cos = gamma / R keeps the sign of gamma; fall back near cos = 0
  m.sin_theta = m.cos_theta > 0.5 ? p.gamma / (m.R * m.cos_theta)
                                  : std::copysign(std::sqrt(0.5 * (1 - delta / m.R)), p.gamma);
  return m;
}

double even_propagator(double lambda, double t) {
  if (lambda >= 0) return std::cos(t * std::sqrt(lambda));
  return std::cosh(t * std::sqrt(-lambda));
}

double odd_propagator(double lambda, double t) {
  if (lambda == 0) return t;
  if (lambda > 0) {
    const double w = std::sqrt(lambda);
    return std::sin(t * w) / w;
  }
  const double w = std::sqrt(-lambda);
  return std::sinh(t * w) / w;
}

PhaseSpaceFlow<double> two_oscillator_flow(const TwoOscillatorParams& p, double t) {
  const NormalModes m = normal_modes(p);
  const double c2 = m.cos_theta * m.cos_theta;
  const double s2 = m.sin_theta * m.sin_theta;
  const double sc = m.sin_theta * m.cos_theta;
  const double cp = even_propagator(m.lambda_plus, t);
  const double cm = even_propagator(m.lambda_minus, t);
  const double sp = odd_propagator(m.lambda_plus, t);
  const double sm = odd_propagator(m.lambda_minus, t);
  const double lsp = m.lambda_plus * sp;  // -d/dt of cos(t sqrt(lambda)), entire in lambda
  const double lsm = m.lambda_minus * sm;

  auto block = [](double c, double s, double ls) {
    Eigen::Matrix2d b;
    b << c, s, -ls, c;
    return b;
  };
  MatrixXd M(4, 4);
  // ordering (x, xi | y, eta)
  M.topLeftCorner<2, 2>() = block(c2 * cp + s2 * cm, c2 * sp + s2 * sm, c2 * lsp + s2 * lsm);
  M.bottomRightCorner<2, 2>() = block(s2 * cp + c2 * cm, s2 * sp + c2 * sm, s2 * lsp + c2 * lsm);
  const Eigen::Matrix2d cross = sc * block(cp - cm, sp - sm, lsp - lsm);
  M.topRightCorner<2, 2>() = cross;
  M.bottomLeftCorner<2, 2>() = cross;
  return PhaseSpaceFlow<double>(1, 1, t, std::move(M));
}

double two_oscillator_det_ii(const TwoOscillatorParams& p, double t) {
  const NormalModes m = normal_modes(p);
  if (m.R == 0) return 1;
  const double ws2 = p.omega_s * p.omega_s;
  const double r2 = m.R * m.R;
  const double bracket =
      even_propagator(m.lambda_plus, t) * even_propagator(m.lambda_minus, t) +
      0.5 * (ws2 + p.omega_e_sq) * odd_propagator(m.lambda_plus, t) *
          odd_propagator(m.lambda_minus, t) -
      1;
  return 1 + 2 * p.gamma * p.gamma / r2 * bracket;
}

double two_oscillator_det_ii_theta(const TwoOscillatorParams& p, double t) {
  const NormalModes m = normal_modes(p);
  const double s2c2 = std::pow(m.sin_theta * m.cos_theta, 2);
  const double bracket =
      even_propagator(m.lambda_plus, t) * even_propagator(m.lambda_minus, t) +
      0.5 * (m.lambda_plus + m.lambda_minus) * odd_propagator(m.lambda_plus, t) *
          odd_propagator(m.lambda_minus, t) -
      1;
  return 1 + 2 * s2c2 * bracket;
}

BipartiteSystem two_oscillator_system(const TwoOscillatorParams& p) {
  normal_modes(p);  // validates
  const MatrixXd hs = Eigen::Vector2d(p.omega_s * p.omega_s, 1).asDiagonal();
  const MatrixXd he = Eigen::Vector2d(p.omega_e_sq, 1).asDiagonal();
  MatrixXd g = MatrixXd::Zero(2, 2);
  g(0, 0) = p.gamma;
  return BipartiteSystem(QuadraticHamiltonian<double>(hs), QuadraticHamiltonian<double>(he), g);
}

// ------------------------------------------------------------------- bath

namespace {

void check_qbm(const QBMParams& p) {
  if (!(p.mass > 0)) throw std::invalid_argument("qbm: system mass must be positive");
  if (!std::isfinite(p.omega_s)) throw std::invalid_argument("qbm: omega_s must be finite");
  for (std::size_t j = 0; j < p.k.size(); ++j) {
    if (!(p.k[j] > 0)) {
      throw std::invalid_argument("qbm: spring constant k[" + std::to_string(j) +
                                  "] must be positive");
    }
  }
  if (!p.masses.empty() && p.masses.size() != p.k.size()) {
    throw std::invalid_argument("qbm: masses and k must have the same length");
  }
  for (double mj : p.masses) {
    if (!(mj > 0)) throw std::invalid_argument("qbm: bath masses must be positive");
  }
}

void require_unit_masses(const QBMParams& p, const char* where) {
  for (double mj : p.masses) {
    if (mj != 1) throw std::invalid_argument(std::string(where) + ": requires unit bath masses");
  }
}

}  // namespace

BipartiteSystem qbm_build(const QBMParams& p) {
  check_qbm(p);
  const auto n = static_cast<Eigen::Index>(p.k.size());
  double k_sum = 0;
  for (double kj : p.k) k_sum += kj;
  const MatrixXd hs = Eigen::Vector2d(p.omega_s * p.omega_s + k_sum, 1 / p.mass).asDiagonal();
  MatrixXd he = MatrixXd::Zero(2 * n, 2 * n);
  MatrixXd g = MatrixXd::Zero(2, 2 * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double kj = p.k[static_cast<std::size_t>(j)];
    he(j, j) = kj;
    he(n + j, n + j) = p.masses.empty() ? 1.0 : 1 / p.masses[static_cast<std::size_t>(j)];
    g(0, j) = -kj;
  }
  return BipartiteSystem(QuadraticHamiltonian<double>(hs), QuadraticHamiltonian<double>(he), g);
}

double qbm_kernel(const QBMParams& p, double t) {
  check_qbm(p);
  require_unit_masses(p, "qbm_kernel");
  double k = 0;
  for (double kj : p.k) k += kj * std::cos(std::sqrt(kj) * t);
  return k;
}

double qbm_force(const QBMParams& p, const VectorXd& u0, double t) {
  check_qbm(p);
  require_unit_masses(p, "qbm_force");
  const auto n = static_cast<Eigen::Index>(p.k.size());
  if (u0.size() != 2 * n) throw std::invalid_argument("qbm_force: bath point has wrong size");
  double f = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double kj = p.k[static_cast<std::size_t>(j)];
    const double w = std::sqrt(kj);
    f += kj * u0(j) * std::cos(w * t) + w * u0(n + j) * std::sin(w * t);
  }
  return f;
}

QBMResidual qbm_residual(const QBMParams& p, const VectorXd& z0, double t_max, int steps) {
  check_qbm(p);
  require_unit_masses(p, "qbm_residual");
  const auto n = static_cast<Eigen::Index>(p.k.size());
  if (z0.size() != 2 + 2 * n) throw std::invalid_argument("qbm_residual: initial point has wrong size");
  const std::vector<double> grid = uniform_grid(t_max, steps);
  const double h = t_max / steps;
  double w_max = 0;
  for (double kj : p.k) w_max = std::max(w_max, std::sqrt(kj));
  if (h * w_max >= std::numbers::pi / 2) {
    throw GridError("qbm_residual: step " + std::to_string(h) +
                    " does not resolve the bath frequency " + std::to_string(w_max) +
                    " (need step * max sqrt(k) < pi/2)");
  }

  const BipartiteSystem sys = qbm_build(p);
  const FlowBundle flow = full_flow(sys, grid);
  const MatrixXd k_total = total_generator(sys, 0);
  const VectorXd u0 = z0.tail(2 * n);

  QBMResidual out;
  out.times = grid;
  const std::size_t count = grid.size();
  std::vector<double> xdot(count);
  std::vector<double> kernel(count);
  for (std::size_t i = 0; i < count; ++i) kernel[i] = qbm_kernel(p, grid[i]);
  out.x.resize(count);
  out.residual.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const VectorXd z = flow[i].full.M * z0;
    out.x[i] = z(0);
    xdot[i] = z(1) / p.mass;
    const double xi_dot = (k_total * z)(1);
    double memory = 0;
    for (std::size_t j = 0; i > 0 && j <= i; ++j) {
      const double w = (j == 0 || j == i) ? 0.5 : 1.0;
      memory += w * kernel[i - j] * xdot[j];
    }
    memory *= h;
    const double r = xi_dot + memory + p.omega_s * p.omega_s * out.x[i] + kernel[i] * z0(0) -
                     qbm_force(p, u0, grid[i]);
    out.residual[i] = r;
    out.sup_norm = std::max(out.sup_norm, std::abs(r));
  }
  return out;
}

}  // namespace gaussflow
