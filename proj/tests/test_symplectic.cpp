#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gaussflow/errors.hpp"
#include "gaussflow/models.hpp"
#include "gaussflow/symplectic.hpp"
#include "oracles.hpp"

namespace gf = gaussflow;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST(SymplecticForm, Properties) {
  for (int n : {1, 2, 5}) {
    const MatrixXd j = gf::symplectic_form(n);
    EXPECT_TRUE(j.transpose().isApprox(-j));
    EXPECT_TRUE((j * j).isApprox(-MatrixXd::Identity(2 * n, 2 * n)));
    EXPECT_NEAR(j.determinant(), 1.0, 1e-14);
  }
}

TEST(MatrixExponential, ZeroIsIdentity) {
  const MatrixXd e = gf::matrix_exponential<double>(MatrixXd::Zero(4, 4), 7.0);
  EXPECT_TRUE(e.isIdentity(0));
}

TEST(MatrixExponential, QuarterTurnOfJ) {
  const MatrixXd j = gf::symplectic_form(1);
  const MatrixXd e = gf::matrix_exponential<double>(j, std::numbers::pi / 2);
  EXPECT_LT((e - j).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(MatrixExponential, HarmonicOscillatorMatchesAnalyticFlow) {
  // J hess(H_osc) with hess = I, compared with the decoupled analytic model
  const MatrixXd e = gf::matrix_exponential<double>(gf::symplectic_form(1), 1.0);
  const auto ref = gf::two_oscillator_flow({1.0, 1.0, 0.0}, 1.0);
  EXPECT_LT((e - ref.ii()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(MatrixExponential, AgreesWithTaylorOracle) {
  oracle::Random rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const MatrixXd m = rng.matrix(6, 6, 0.8);
    const MatrixXd ref = oracle::expm_taylor(m);
    EXPECT_LT((gf::matrix_exponential<double>(m, 1.0) - ref).norm(), 1e-12 * ref.norm());
  }
}

TEST(MatrixExponential, RejectsBadInput) {
  EXPECT_THROW(gf::matrix_exponential<double>(MatrixXd::Zero(2, 3), 1.0), std::invalid_argument);
  MatrixXd m = MatrixXd::Zero(2, 2);
  m(0, 1) = std::nan("");
  EXPECT_THROW(gf::matrix_exponential<double>(m, 1.0), std::invalid_argument);
}

TEST(IntegrateFlow, ZeroGeneratorGivesIdentity) {
  const auto r = gf::integrate_flow<double>([](double) { return MatrixXd::Zero(4, 4).eval(); }, 0.0, 3.0);
  EXPECT_LT((r.U - MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(IntegrateFlow, ConstantGeneratorMatchesExponential) {
  oracle::Random rng(3);
  const MatrixXd k = oracle::J(2) * rng.spd(4);
  const auto r = gf::integrate_flow<double>([&](double) { return k; }, 0.0, 2.0);
  const MatrixXd ref = oracle::expm_taylor(2.0 * k);
  EXPECT_LT((r.U - ref).cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, ref.norm()));
}

TEST(IntegrateFlow, TwoOscillatorEntry) {
  const auto sys = gf::two_oscillator_system({1.0, 1.0, 0.5});
  const auto r = gf::integrate_flow<double>(
      [&](double t) { return gf::total_generator(sys, t); }, 0.0, 1.0);
  const double expected = (std::cos(std::sqrt(1.5)) + std::cos(std::sqrt(0.5))) / 2;
  EXPECT_NEAR(r.U(0, 0), expected, 1e-8);
  EXPECT_NEAR(expected, 0.54972, 1e-5);
}

TEST(IntegrateFlow, GroupPropertyForTimeDependentGenerator) {
  auto gen = [](double t) {
    MatrixXd h(2, 2);
    h << 1 + 0.5 * std::sin(t), 0.1 * t, 0.1 * t, 1;
    return MatrixXd(oracle::J(1) * h);
  };
  const auto u10 = gf::integrate_flow<double>(gen, 0.0, 1.0);
  const auto u21 = gf::integrate_flow<double>(gen, 1.0, 2.5);
  const auto u20 = gf::integrate_flow<double>(gen, 0.0, 2.5);
  EXPECT_LT((u21.U * u10.U - u20.U).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(u20.symplectic_deviation, 1e-8);
}

TEST(IntegrateFlow, BackwardIsInverse) {
  auto gen = [](double t) {
    MatrixXd h(2, 2);
    h << 2 + std::cos(t), 0.3, 0.3, 1;
    return MatrixXd(oracle::J(1) * h);
  };
  const auto fwd = gf::integrate_flow<double>(gen, 0.0, 1.5);
  const auto bwd = gf::integrate_flow<double>(gen, 1.5, 0.0);
  EXPECT_LT((bwd.U * fwd.U - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(IntegrateFlow, NonFiniteGeneratorThrows) {
  auto gen = [](double t) {
    MatrixXd k = MatrixXd::Zero(2, 2);
    if (t > 0.5) k(0, 0) = std::numeric_limits<double>::infinity();
    return k;
  };
  EXPECT_THROW(gf::integrate_flow<double>(gen, 0.0, 1.0), gf::IntegratorError);
}

TEST(SymplecticEigenvalues, Examples) {
  EXPECT_NEAR(gf::symplectic_eigenvalues<double>(MatrixXd::Identity(2, 2))(0), 1.0, 1e-14);
  MatrixXd g = MatrixXd::Zero(2, 2);
  g(0, 0) = 4;
  g(1, 1) = 1;
  EXPECT_NEAR(gf::symplectic_eigenvalues<double>(g)(0), 2.0, 1e-14);
  EXPECT_NEAR(oracle::symplectic_eigenvalues(g)(0), 2.0, 1e-12);
  const VectorXd lam = gf::symplectic_eigenvalues<double>(MatrixXd::Identity(6, 6));
  for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(lam(j), 1.0, 1e-14);
}

TEST(SymplecticEigenvalues, MatchOracleAndCongruenceInvariant) {
  oracle::Random rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = rng.integer(1, 5);
    const MatrixXd g = rng.spd(2 * n);
    const VectorXd lam = gf::symplectic_eigenvalues<double>(g);
    EXPECT_LT((lam - oracle::symplectic_eigenvalues(g)).cwiseAbs().maxCoeff(), 1e-9 * lam.maxCoeff());
    const MatrixXd t = rng.symplectic(n);
    const VectorXd lam2 = gf::symplectic_eigenvalues<double>(MatrixXd(t.transpose() * g * t));
    EXPECT_LT((lam - lam2).cwiseAbs().maxCoeff(), 1e-9 * lam.maxCoeff());
  }
}

TEST(SymplecticEigenvalues, RejectsInvalidInput) {
  MatrixXd ns(2, 2);
  ns << 1, 0.5, 0, 1;
  EXPECT_THROW(gf::symplectic_eigenvalues<double>(ns), std::invalid_argument);
  MatrixXd indefinite = MatrixXd::Identity(2, 2);
  indefinite(1, 1) = -1;
  EXPECT_THROW(gf::symplectic_eigenvalues<double>(indefinite), std::invalid_argument);
}

TEST(Williamson, IdentityAndDiagonal) {
  auto w = gf::williamson<double>(MatrixXd::Identity(2, 2));
  EXPECT_NEAR(w.lambda(0), 1.0, 1e-14);
  EXPECT_TRUE((w.S.transpose() * w.S).isIdentity(1e-12));
  MatrixXd g = MatrixXd::Zero(2, 2);
  g(0, 0) = 4;
  g(1, 1) = 1;
  w = gf::williamson<double>(g);
  EXPECT_NEAR(w.lambda(0), 2.0, 1e-12);
  EXPECT_LT(gf::symplectic_deviation(w.S), 1e-10);
  EXPECT_LT((w.S.transpose() * g * w.S - 2 * MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Williamson, PureCovarianceHasUnitEigenvalues) {
  oracle::Random rng(5);
  const MatrixXd f = rng.symplectic(3);
  const auto w = gf::williamson<double>(MatrixXd(f * f.transpose()));
  for (Eigen::Index j = 0; j < 3; ++j) EXPECT_NEAR(w.lambda(j), 1.0, 1e-10);
}

TEST(Williamson, RoundTripOnRandomMatrices) {
  oracle::Random rng(19);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = rng.integer(1, 6);
    const MatrixXd g = rng.spd(2 * n);
    const auto w = gf::williamson<double>(g);
    VectorXd diag(2 * n);
    diag << w.lambda, w.lambda;
    EXPECT_LT(gf::symplectic_deviation(w.S), 1e-10);
    EXPECT_LT((w.S.transpose() * g * w.S - MatrixXd(diag.asDiagonal())).cwiseAbs().maxCoeff(),
              1e-10 * g.norm());
    const MatrixXd s_inv = w.S.inverse();
    const MatrixXd rebuilt = s_inv.transpose() * diag.asDiagonal() * s_inv;
    EXPECT_LT((rebuilt - g).norm(), 1e-9 * g.norm());
    EXPECT_LT((w.lambda - gf::symplectic_eigenvalues<double>(g)).cwiseAbs().maxCoeff(), 1e-10 * g.norm());
  }
}

TEST(Williamson, DegenerateSpectrum) {
  oracle::Random rng(23);
  const MatrixXd t = rng.symplectic(3);
  VectorXd diag(6);
  diag << 0.7, 0.7, 1.3, 0.7, 0.7, 1.3;
  const MatrixXd g = t * diag.asDiagonal() * t.transpose();
  const auto w = gf::williamson<double>(g);
  EXPECT_LT(gf::symplectic_deviation(w.S), 1e-9);
  EXPECT_NEAR(w.lambda(0), 0.7, 1e-10);
  EXPECT_NEAR(w.lambda(1), 0.7, 1e-10);
  EXPECT_NEAR(w.lambda(2), 1.3, 1e-10);
}
