#pragma once

// Dense symplectic linear algebra on R^{2n} with block coordinates
// (x_1..x_n, xi_1..xi_n) and J = [[0, I], [-I, 0]].

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "gaussflow/errors.hpp"

namespace gaussflow {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

namespace tolerances {
// Relative asymmetry accepted for matrices that are symmetric by contract.
inline constexpr double kSymmetry = 1e-10;
// Smallest eigenvalue must exceed this fraction of the spectral norm.
inline constexpr double kPositiveDefinite = 1e-12;
inline constexpr int kMaxExponentialDim = 512;
inline constexpr double kIntegrator = 1e-10;
}  // namespace tolerances

// ------------------------------- basic forms --------------------------------

template <typename Scalar = double>
Mat<Scalar> symplectic_form(Eigen::Index n) {
  Mat<Scalar> J = Mat<Scalar>::Zero(2 * n, 2 * n);
  J.topRightCorner(n, n).setIdentity();
  J.bottomLeftCorner(n, n) = -Mat<Scalar>::Identity(n, n);
  return J;
}

template <typename Derived1, typename Derived2>
Mat<typename Derived1::Scalar> direct_sum(const Eigen::MatrixBase<Derived1>& a,
                                          const Eigen::MatrixBase<Derived2>& b) {
  using Scalar = typename Derived1::Scalar;
  Mat<Scalar> out = Mat<Scalar>::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

// max |M^T J M - J|
template <typename Derived, typename DerivedJ>
typename Derived::Scalar symplectic_deviation(const Eigen::MatrixBase<Derived>& M,
                                              const Eigen::MatrixBase<DerivedJ>& J) {
  return (M.transpose() * J * M - J).cwiseAbs().maxCoeff();
}

template <typename Derived>
typename Derived::Scalar symplectic_deviation(const Eigen::MatrixBase<Derived>& M) {
  using Scalar = typename Derived::Scalar;
  return symplectic_deviation(M, symplectic_form<Scalar>(M.rows() / 2));
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.array().isFinite().all();
}

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& a,
                  double rel_tol = tolerances::kSymmetry) {
  if (a.rows() != a.cols()) return false;
  const auto scale = std::max<typename Derived::Scalar>(a.cwiseAbs().maxCoeff(), 1);
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

// ------------------------------ phase-space flow ----------------------------

// Flow of a bipartite phase space R^{2d} (+) R^{2N}; M acts on (z, u) with
// z = (x, xi) of the system and u = (y, eta) of the environment.
template <typename Scalar = double>
struct PhaseSpaceFlow {
  Eigen::Index d = 0;
  Eigen::Index N = 0;
  Scalar t = 0;
  Mat<Scalar> M;

  PhaseSpaceFlow() = default;
  PhaseSpaceFlow(Eigen::Index d_, Eigen::Index N_, Scalar t_, Mat<Scalar> m)
      : d(d_), N(N_), t(t_), M(std::move(m)) {
    if (M.rows() != 2 * (d + N) || M.cols() != 2 * (d + N)) {
      throw std::invalid_argument("PhaseSpaceFlow: matrix is not 2(d+N) square");
    }
  }

  auto ii() const { return M.topLeftCorner(2 * d, 2 * d); }
  auto ie() const { return M.topRightCorner(2 * d, 2 * N); }
  auto ei() const { return M.bottomLeftCorner(2 * N, 2 * d); }
  auto ee() const { return M.bottomRightCorner(2 * N, 2 * N); }
};

// J_S (+) J_E, the symplectic form of the bipartite phase space.
template <typename Scalar = double>
Mat<Scalar> bipartite_symplectic_form(Eigen::Index d, Eigen::Index N) {
  return direct_sum(symplectic_form<Scalar>(d), symplectic_form<Scalar>(N));
}

// ------------------------------ symmetric helpers ---------------------------

namespace detail {

template <typename Derived>
void require_square(const Eigen::MatrixBase<Derived>& a, const char* where) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw std::invalid_argument(std::string(where) + ": matrix must be square and non-empty");
  }
}

template <typename Derived>
void require_even_square(const Eigen::MatrixBase<Derived>& a, const char* where) {
  require_square(a, where);
  if (a.rows() % 2 != 0) {
    throw std::invalid_argument(std::string(where) + ": dimension must be even");
  }
}

// Eigendecomposition of a symmetric positive-definite matrix, validated.
template <typename Scalar>
Eigen::SelfAdjointEigenSolver<Mat<Scalar>> spd_eigen(const Mat<Scalar>& gamma,
                                                     const char* where) {
  require_even_square(gamma, where);
  if (!all_finite(gamma)) {
    throw std::invalid_argument(std::string(where) + ": non-finite entries");
  }
  if (!is_symmetric(gamma)) {
    throw std::invalid_argument(std::string(where) + ": matrix is not symmetric");
  }
  Mat<Scalar> sym = (gamma + gamma.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(sym);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error(std::string(where) + ": eigendecomposition failed");
  }
  const Scalar norm = es.eigenvalues().cwiseAbs().maxCoeff();
  const Scalar smallest = es.eigenvalues()(0);
  if (!(smallest > Scalar(tolerances::kPositiveDefinite) * norm)) {
    throw std::invalid_argument(std::string(where) +
                                ": matrix is not positive-definite (smallest eigenvalue " +
                                std::to_string(static_cast<double>(smallest)) + ")");
  }
  return es;
}

template <typename Scalar>
Mat<Scalar> spectral_power(const Eigen::SelfAdjointEigenSolver<Mat<Scalar>>& es, Scalar p) {
  const Vec<Scalar> w = es.eigenvalues().array().pow(p).matrix();
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

// A^{p} for symmetric positive-definite A.
template <typename Scalar>
Mat<Scalar> spd_power(const Mat<Scalar>& a, Scalar p) {
  return detail::spectral_power<Scalar>(detail::spd_eigen<Scalar>(a, "spd_power"), p);
}

// ------------------------------ exponentials --------------------------------

// exp(t M) by scaling and squaring with the degree-13 Pade approximant.
template <typename Scalar>
Mat<Scalar> matrix_exponential(const Mat<Scalar>& m, Scalar t,
                               int max_dim = tolerances::kMaxExponentialDim) {
  detail::require_square(m, "matrix_exponential");
  if (m.rows() > max_dim) {
    throw std::invalid_argument("matrix_exponential: dimension " + std::to_string(m.rows()) +
                                " exceeds configured maximum " + std::to_string(max_dim));
  }
  if (!all_finite(m) || !std::isfinite(static_cast<double>(t))) {
    throw std::invalid_argument("matrix_exponential: non-finite input");
  }
  const Mat<Scalar> scaled = t * m;
  return scaled.exp();
}

// ------------------------------ flow integration ----------------------------

struct FlowOptions {
  double tol = tolerances::kIntegrator;
  double initial_step = 0;  // 0: chosen from the generator norm
  long max_steps = 10'000'000;
};

template <typename Scalar>
struct FlowResult {
  Mat<Scalar> U;
  long accepted_steps = 0;
  long rejected_steps = 0;
  // max |U^T J U - J| of the returned propagator; reported, never corrected
  Scalar symplectic_deviation = 0;
};

template <typename Scalar>
using Generator = std::function<Mat<Scalar>(Scalar)>;

// Time-ordered solution U(t1, t0) of dU/dt = K(t) U, U(t0) = I, by the
// Dormand-Prince 5(4) pair with per-step error control. t1 < t0 integrates backward.
// J is used only for the symplecticity diagnostic (default: standard form).
template <typename Scalar>
FlowResult<Scalar> integrate_flow(const Generator<Scalar>& generator, Scalar t0, Scalar t1,
                                  const FlowOptions& options = {},
                                  const Mat<Scalar>& J = Mat<Scalar>()) {
  auto eval = [&](Scalar t) {
    Mat<Scalar> k = generator(t);
    if (!all_finite(k)) {
      throw IntegratorError("integrate_flow: generator returned non-finite entries",
                            static_cast<double>(t));
    }
    return k;
  };

  Mat<Scalar> k0 = eval(t0);
  detail::require_square(k0, "integrate_flow");
  const Eigen::Index n = k0.rows();
  FlowResult<Scalar> result;
  result.U = Mat<Scalar>::Identity(n, n);

  const Scalar span = t1 - t0;
  if (span != 0) {
    // Dormand-Prince tableau
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                     b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695,
                     e4 = b4 - 393.0 / 640, e5 = b5 + 92097.0 / 339200,
                     e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;

    const Scalar dir = span > 0 ? Scalar(1) : Scalar(-1);
    const Scalar tol = static_cast<Scalar>(options.tol);
    Scalar h;
    if (options.initial_step > 0) {
      h = static_cast<Scalar>(options.initial_step);
    } else {
      const Scalar knorm = k0.cwiseAbs().rowwise().sum().maxCoeff();
      h = knorm > 0 ? Scalar(0.01) / knorm : std::abs(span);
    }
    h = std::min(h, std::abs(span));

    Scalar t = t0;
    Mat<Scalar> U = result.U;
    Mat<Scalar> f1 = k0 * U;
    while ((t1 - t) * dir > 0) {
      if (result.accepted_steps + result.rejected_steps >= options.max_steps) {
        throw IntegratorError("integrate_flow: maximum number of steps exceeded",
                              static_cast<double>(t));
      }
      const Scalar remaining = std::abs(t1 - t);
      bool last = false;
      if (h >= remaining) {
        h = remaining;
        last = true;
      }
      const Scalar min_step = Scalar(16) * std::numeric_limits<Scalar>::epsilon() *
                              std::max<Scalar>(std::abs(t), 1);
      if (h < min_step) {
        throw IntegratorError("integrate_flow: step size underflow (stiff generator?)",
                              static_cast<double>(t));
      }
      const Scalar hs = dir * h;
      const Mat<Scalar> f2 = eval(t + c2 * hs) * (U + hs * (a21 * f1));
      const Mat<Scalar> f3 = eval(t + c3 * hs) * (U + hs * (a31 * f1 + a32 * f2));
      const Mat<Scalar> f4 = eval(t + c4 * hs) * (U + hs * (a41 * f1 + a42 * f2 + a43 * f3));
      const Mat<Scalar> f5 =
          eval(t + c5 * hs) * (U + hs * (a51 * f1 + a52 * f2 + a53 * f3 + a54 * f4));
      const Scalar t_new = last ? t1 : t + hs;
      const Mat<Scalar> f6 =
          eval(t_new) * (U + hs * (a61 * f1 + a62 * f2 + a63 * f3 + a64 * f4 + a65 * f5));
      Mat<Scalar> U_new = U + hs * (b1 * f1 + b3 * f3 + b4 * f4 + b5 * f5 + b6 * f6);
      const Mat<Scalar> f7 = eval(t_new) * U_new;
      const Mat<Scalar> err =
          hs * (e1 * f1 + e3 * f3 + e4 * f4 + e5 * f5 + e6 * f6 + e7 * f7);

      const Mat<Scalar> scale =
          (tol + tol * U.cwiseAbs().cwiseMax(U_new.cwiseAbs()).array()).matrix();
      const Scalar err_norm = (err.cwiseAbs().array() / scale.array()).maxCoeff();

      if (err_norm <= 1) {
        t = t_new;
        U = std::move(U_new);
        f1 = f7;
        ++result.accepted_steps;
      } else {
        ++result.rejected_steps;
      }
      const Scalar factor =
          err_norm == 0 ? Scalar(5)
                        : std::clamp<Scalar>(Scalar(0.9) * std::pow(err_norm, Scalar(-0.2)),
                                             Scalar(0.2), Scalar(5));
      h = h * factor;
      if (!std::isfinite(static_cast<double>(err_norm))) {
        throw IntegratorError("integrate_flow: non-finite error estimate",
                              static_cast<double>(t));
      }
    }
    result.U = std::move(U);
  }
  const Mat<Scalar> form = J.size() == 0 ? symplectic_form<Scalar>(n / 2) : J;
  if (n % 2 == 0) result.symplectic_deviation = symplectic_deviation(result.U, form);
  return result;
}

// ------------------------------ symplectic spectra --------------------------

// Symplectic eigenvalues of a positive-definite Gamma, ascending: the moduli of the
// eigenvalues of J Gamma, computed from the antisymmetric Gamma^{1/2} J Gamma^{1/2}.
template <typename Scalar>
Vec<Scalar> symplectic_eigenvalues(const Mat<Scalar>& gamma) {
  const auto es = detail::spd_eigen<Scalar>(gamma, "symplectic_eigenvalues");
  const Eigen::Index n = gamma.rows() / 2;
  const Mat<Scalar> root = detail::spectral_power<Scalar>(es, Scalar(0.5));
  const Mat<Scalar> a = root * symplectic_form<Scalar>(n) * root;
  const Mat<Scalar> sq = a.transpose() * a;
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es2((sq + sq.transpose()) / Scalar(2),
                                                  Eigen::EigenvaluesOnly);
  Vec<Scalar> out(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Scalar pair = (es2.eigenvalues()(2 * j) + es2.eigenvalues()(2 * j + 1)) / Scalar(2);
    out(j) = std::sqrt(std::max<Scalar>(pair, 0));
  }
  return out;
}

template <typename Scalar>
struct WilliamsonDecomposition {
  Mat<Scalar> S;       // symplectic, S^T Gamma S = diag(lambda, lambda)
  Vec<Scalar> lambda;  // ascending
};

// Williamson normal form. A = Gamma^{-1/2} J Gamma^{-1/2} is brought to
// [[0, Omega], [-Omega, 0]] by an orthonormal basis {v_j, v_j*} built from the
// eigenvectors of -A^2; then S = Gamma^{-1/2} R diag(Omega^{-1/2}, Omega^{-1/2}).
template <typename Scalar>
WilliamsonDecomposition<Scalar> williamson(const Mat<Scalar>& gamma) {
  const auto es = detail::spd_eigen<Scalar>(gamma, "williamson");
  const Eigen::Index dim = gamma.rows();
  const Eigen::Index n = dim / 2;
  const Mat<Scalar> inv_root = detail::spectral_power<Scalar>(es, Scalar(-0.5));
  Mat<Scalar> a = inv_root * symplectic_form<Scalar>(n) * inv_root;
  a = (a - a.transpose()) / Scalar(2);

  const Mat<Scalar> sq = a.transpose() * a;
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es2((sq + sq.transpose()) / Scalar(2));
  const Vec<Scalar>& nu2 = es2.eigenvalues();
  const Mat<Scalar>& q = es2.eigenvectors();

  // Largest nu first so that lambda = 1/nu comes out ascending.
  std::vector<Eigen::Index> remaining(dim);
  std::iota(remaining.begin(), remaining.end(), 0);
  std::sort(remaining.begin(), remaining.end(),
            [&](Eigen::Index i, Eigen::Index j) { return nu2(i) > nu2(j); });

  Mat<Scalar> basis(dim, 0);
  auto project_out = [&](Vec<Scalar> w) {
    for (int pass = 0; pass < 2; ++pass) {
      if (basis.cols() > 0) w -= basis * (basis.transpose() * w);
    }
    return w;
  };

  Mat<Scalar> R(dim, dim);
  Vec<Scalar> nu(n);
  const Scalar cluster = Scalar(1e-6);
  for (Eigen::Index p = 0; p < n; ++p) {
    const Scalar top = nu2(remaining.front());
    std::size_t best = 0;
    Scalar best_norm = -1;
    Vec<Scalar> best_vec;
    for (std::size_t c = 0; c < remaining.size(); ++c) {
      if (nu2(remaining[c]) < top * (1 - cluster)) break;
      Vec<Scalar> w = project_out(q.col(remaining[c]));
      const Scalar wn = w.norm();
      if (wn > best_norm) {
        best_norm = wn;
        best = c;
        best_vec = std::move(w);
      }
    }
    const Vec<Scalar> v = best_vec / best_norm;
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));

    Vec<Scalar> av = a * v;
    const Scalar nu_p = av.norm();
    Vec<Scalar> vstar = project_out(-av / nu_p);
    vstar -= v * v.dot(vstar);
    vstar.normalize();

    // Retire the remaining eigenvector that v* absorbed.
    std::size_t partner = 0;
    Scalar overlap = -1;
    for (std::size_t c = 0; c < remaining.size(); ++c) {
      if (nu2(remaining[c]) < top * (1 - cluster) && c > 0) break;
      const Scalar o = std::abs(q.col(remaining[c]).dot(vstar));
      if (o > overlap) {
        overlap = o;
        partner = c;
      }
    }
    if (!remaining.empty()) {
      remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(partner));
    }

    R.col(p) = v;
    R.col(n + p) = vstar;
    nu(p) = v.dot(a * vstar);
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 2);
    basis.col(basis.cols() - 2) = v;
    basis.col(basis.cols() - 1) = vstar;
  }

  Vec<Scalar> scale(dim);
  scale << nu.array().rsqrt().matrix(), nu.array().rsqrt().matrix();
  WilliamsonDecomposition<Scalar> out;
  out.S = inv_root * R * scale.asDiagonal();
  out.lambda = nu.cwiseInverse();
  return out;
}

}  // namespace gaussflow
