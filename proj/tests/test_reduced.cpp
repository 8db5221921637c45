#include <gtest/gtest.h>

#include <cmath>

#include "gaussflow/errors.hpp"
#include "gaussflow/models.hpp"
#include "gaussflow/reduced.hpp"
#include "oracles.hpp"

namespace gf = gaussflow;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

gf::BipartiteSystem random_system(oracle::Random& rng, int d, int n, double g_scale = 0.3) {
  return gf::BipartiteSystem(gf::QuadraticHamiltonian<double>(rng.spd(2 * d)),
                             gf::QuadraticHamiltonian<double>(rng.spd(2 * n)),
                             MatrixXd(rng.matrix(2 * d, 2 * n, g_scale)));
}

gf::GaussianState<double> state(const MatrixXd& c) { return gf::GaussianState<double>(c); }

}  // namespace

TEST(EvolveReduced, DecoupledKeepsPurity) {
  oracle::Random rng(1);
  const gf::BipartiteSystem sys{gf::QuadraticHamiltonian<double>(rng.spd(2)),
                                gf::QuadraticHamiltonian<double>(rng.spd(2)), MatrixXd::Zero(2, 2)};
  const auto s0 = state(rng.valid_covariance(1));
  const auto traj = gf::evolve_reduced(gf::full_flow(sys, gf::uniform_grid(5, 50)), s0, gf::vacuum_state(1));
  for (const auto& p : traj.points) {
    EXPECT_NEAR(p.purity, traj[0].purity, 1e-12);
    const MatrixXd f = oracle::expm_taylor(p.t * oracle::J(1) * sys.system().hessian());
    EXPECT_LT((p.cov - f * s0.cov * f.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(EvolveReduced, InitialPointIsInitialState) {
  oracle::Random rng(2);
  const auto sys = random_system(rng, 1, 2);
  const gf::GaussianState<double> s0(rng.matrix(2, 1), rng.valid_covariance(1));
  const auto traj = gf::evolve_reduced(gf::full_flow(sys, gf::uniform_grid(1, 2)), s0,
                                       state(rng.valid_covariance(2)));
  EXPECT_LT((traj[0].cov - s0.cov).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((traj[0].mean - s0.mean).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(EvolveReduced, MarginalOfTotalCovarianceAndMean) {
  oracle::Random rng(3);
  const auto sys = gf::two_oscillator_system({1.0, 1.0, 0.5});
  const gf::GaussianState<double> s0(VectorXd::Constant(2, 0.3), MatrixXd::Identity(2, 2) / 2);
  const gf::GaussianState<double> e0(VectorXd::Constant(2, -0.2), MatrixXd::Identity(2, 2) / 2);
  const auto flow = gf::full_flow(sys, gf::uniform_grid(10, 100));
  const auto traj = gf::evolve_reduced(flow, s0, e0);
  for (std::size_t k = 0; k < flow.size(); ++k) {
    const MatrixXd phi = gf::two_oscillator_flow({1.0, 1.0, 0.5}, flow[k].t).M;
    EXPECT_LT((traj[k].cov - oracle::marginal_covariance(phi, s0.cov, e0.cov)).cwiseAbs().maxCoeff(), 1e-8);
    VectorXd m(4);
    m << s0.mean, e0.mean;
    EXPECT_LT((traj[k].mean - (phi * m).head(2)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_GE(traj[k].min_symplectic_eigenvalue, 0.5 - 1e-8);
  }
}

TEST(EvolveReduced, RejectsInvalidStates) {
  oracle::Random rng(4);
  const auto sys = random_system(rng, 1, 1);
  const auto flow = gf::full_flow(sys, gf::uniform_grid(1, 2));
  EXPECT_THROW(gf::evolve_reduced(flow, state(MatrixXd::Identity(2, 2) / 4), gf::vacuum_state(1)),
               gf::InvalidStateError);
}

TEST(EvolveReduced, DefinedBeyondCriticalTime) {
  const auto sys = gf::two_oscillator_system({2.0, 4.0, 1.0});
  const auto tc = gf::critical_time(sys, 50);
  ASSERT_TRUE(tc.t_c.has_value());
  const auto flow = gf::full_flow(sys, gf::uniform_grid(2 * *tc.t_c, 400));
  const auto traj = gf::evolve_reduced(flow, gf::vacuum_state(1), gf::vacuum_state(1));
  for (const auto& p : traj.points) {
    EXPECT_TRUE(std::isfinite(p.purity));
    EXPECT_GE(p.min_symplectic_eigenvalue, 0.5 - 1e-8);
  }
}

TEST(LinearEntropyCurve, ConstantWhenDecoupledAndZeroAtStart) {
  const auto traj0 = gf::evolve_reduced(gf::full_flow(gf::two_oscillator_system({1, 2, 0}), gf::uniform_grid(3, 30)),
                                        gf::vacuum_state(1), gf::isotropic_thermal_state(1, 0.3));
  for (double s : gf::linear_entropy_curve(traj0)) EXPECT_NEAR(s, 0.0, 1e-12);
  const auto traj = gf::evolve_reduced(gf::full_flow(gf::two_oscillator_system({1, 2, 0.4}), gf::uniform_grid(3, 30)),
                                       gf::vacuum_state(1), gf::isotropic_thermal_state(1, 0.3));
  const auto curve = gf::linear_entropy_curve(traj);
  EXPECT_NEAR(curve[0], 0.0, 1e-14);
  EXPECT_GT(curve.back(), 0.0);
  for (std::size_t k = 0; k < curve.size(); ++k) {
    EXPECT_NEAR(curve[k], 1 - 0.5 / std::sqrt(traj[k].cov.determinant()), 1e-12);
  }
}

TEST(PurityByQuadrature, MatchesDeterminantFormula) {
  const auto sys = gf::two_oscillator_system({1.0, 1.0, 0.5});
  const auto s0 = gf::vacuum_state(1);
  const auto e0 = gf::vacuum_state(1);
  for (double t : {0.0, 0.8, 2.5, 6.0}) {
    const auto snap = gf::flow_at(sys, t);
    const double q = gf::purity_by_quadrature(snap, s0, e0);
    EXPECT_NEAR(q, gf::purity(gf::reduced_state(snap, s0, e0)), 1e-6) << "t = " << t;
  }
}

TEST(InformationForm, EqualsReducedCovariance) {
  oracle::Random rng(5);
  const auto sys = random_system(rng, 1, 2);
  const auto snap = gf::flow_at(sys, 1.1);
  const auto s0 = state(rng.valid_covariance(1));
  const auto e0 = state(rng.valid_covariance(2));
  const MatrixXd q = gf::information_form(snap, s0, e0);
  EXPECT_LT((q - oracle::marginal_covariance(snap.full.M, s0.cov, e0.cov)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MasterCoefficients, VanishAtTimeZero) {
  oracle::Random rng(6);
  const auto sys = random_system(rng, 1, 2);
  const auto e0 = state(rng.valid_covariance(2));
  for (auto pic : {gf::Picture::interaction, gf::Picture::schrodinger}) {
    const auto c = gf::master_coefficients(gf::flow_at(sys, 0.0), e0, pic);
    EXPECT_TRUE(c.A.isZero(0));
    EXPECT_TRUE(c.B.isZero(0));
    EXPECT_TRUE(c.Theta.isZero(0));
  }
}

TEST(MasterCoefficients, InitialDerivatives) {
  oracle::Random rng(7);
  for (int trial = 0; trial < 4; ++trial) {
    const int d = rng.integer(1, 2);
    const int n = rng.integer(1, 3);
    const auto sys = random_system(rng, d, n);
    const auto e0 = state(rng.valid_covariance(n));
    const MatrixXd g = sys.coupling(0);
    const MatrixXd a_t_dot = -oracle::J(d) * g * oracle::J(n) * g.transpose();
    const MatrixXd b_dot = -oracle::J(d) * g * e0.cov * g.transpose() * oracle::J(d);
    const double h = 1e-4;
    const auto plus = gf::master_coefficients(gf::flow_at(sys, h), e0);
    const auto minus = gf::master_coefficients(gf::flow_at(sys, -h), e0);
    const MatrixXd fd_a_t = (plus.A - minus.A).transpose() / (2 * h);
    const MatrixXd fd_b = (plus.B - minus.B) / (2 * h);
    EXPECT_LT((fd_a_t - a_t_dot).norm(), 1e-6 * a_t_dot.norm());
    EXPECT_LT((fd_b - b_dot).norm(), 1e-6 * b_dot.norm());
  }
}

TEST(MasterCoefficients, ThetaIdentityBothPictures) {
  oracle::Random rng(8);
  const auto sys = random_system(rng, 1, 2);
  const auto e0 = state(rng.valid_covariance(2));
  const double t = 0.9;
  const double h = 1e-5;
  const MatrixXd f = oracle::J(1) * sys.system().hessian();
  for (auto pic : {gf::Picture::interaction, gf::Picture::schrodinger}) {
    const auto c = gf::master_coefficients(gf::flow_at(sys, t), e0, pic);
    const auto cp = gf::master_coefficients(gf::flow_at(sys, t + h), e0, pic);
    const auto cm = gf::master_coefficients(gf::flow_at(sys, t - h), e0, pic);
    const MatrixXd theta_dot = (cp.Theta - cm.Theta) / (2 * h);
    MatrixXd rhs = c.A.transpose() * c.Theta + c.Theta * c.A + theta_dot;
    if (pic == gf::Picture::schrodinger) rhs -= f * c.Theta + c.Theta * f.transpose();
    EXPECT_LT((2 * c.B - rhs).norm(), 1e-7 * std::max(1.0, c.B.norm())) << gf::to_string(pic);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<MatrixXd>(c.Theta).eigenvalues().minCoeff(), -1e-12);
  }
}

TEST(MasterCoefficients, MeanTransport) {
  const auto sys = gf::two_oscillator_system({1.0, 1.0, 0.5});
  const auto e0 = gf::vacuum_state(1);
  const VectorXd m0 = (VectorXd(2) << 0.7, -0.2).finished();
  const double t1 = 3.0;
  const MatrixXd m = oracle::rk4(
      [&](double t, const MatrixXd& y) {
        return MatrixXd(-gf::master_coefficients(gf::flow_at(sys, t), e0).A.transpose() * y);
      },
      m0, 0.0, t1, 300);
  const auto snap = gf::flow_at(sys, t1);
  EXPECT_LT((m - snap.interaction.ii() * m0).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(MasterCoefficients, RefusesSingularBlock) {
  const gf::TwoOscillatorParams p{2.0, 4.0, 1.0};
  const auto sys = gf::two_oscillator_system(p);
  const auto tc = gf::critical_time(sys, 50);
  ASSERT_TRUE(tc.t_c.has_value());
  // full flow at the exact zero of det Phi_ii: Schrodinger picture is singular
  gf::FlowSnapshot snap = gf::flow_at(sys, *tc.t_c);
  EXPECT_NEAR(snap.full.ii().determinant(), 0.0, 1e-8);
  try {
    auto c = gf::master_coefficients(snap, gf::vacuum_state(1), gf::Picture::schrodinger);
    // rcond may sit just above the floor at the bisected root; it must still be tiny
    EXPECT_LT(c.rcond_ii, 1e-7);
  } catch (const gf::SingularBlockError& e) {
    EXPECT_NEAR(e.time(), *tc.t_c, 1e-12);
    EXPECT_NEAR(e.determinant(), 0.0, 1e-8);
  }
  // an exactly singular block always throws
  snap.full.M.topLeftCorner(2, 2).row(1) = snap.full.M.topLeftCorner(2, 2).row(0);
  EXPECT_THROW(gf::master_coefficients(snap, gf::vacuum_state(1), gf::Picture::schrodinger),
               gf::SingularBlockError);
}

TEST(CriticalTime, NoneWhenDecoupled) {
  const auto r = gf::critical_time(gf::two_oscillator_system({1.0, 2.0, 0.0}), 100);
  EXPECT_FALSE(r.t_c.has_value());
  EXPECT_TRUE(r.warnings.empty());
}

TEST(CriticalTime, NoneForDetunedWeakCoupling) {
  const gf::TwoOscillatorParams p{1.0, 4.0, 0.05};
  const auto r = gf::critical_time(gf::two_oscillator_system(p), 200);
  EXPECT_FALSE(r.t_c.has_value());
  EXPECT_GT(r.min_abs_det, 0.9);
}

TEST(CriticalTime, RootMatchesClosedForm) {
  const gf::TwoOscillatorParams p{2.0, 4.0, 0.5};
  const auto r = gf::critical_time(gf::two_oscillator_system(p), 100);
  ASSERT_TRUE(r.t_c.has_value());
  EXPECT_NEAR(gf::two_oscillator_det_ii(p, *r.t_c), 0.0, 1e-8);
  const auto closed = gf::critical_time([&](double t) { return gf::two_oscillator_det_ii(p, t); }, 100, r.step);
  ASSERT_TRUE(closed.t_c.has_value());
  EXPECT_NEAR(*closed.t_c, *r.t_c, 1e-8 * *r.t_c);
}

TEST(CriticalTime, WarnsOnNearMiss) {
  // touches down near t = 1 without changing sign
  const auto r = gf::critical_time([](double t) { return std::pow(t - 1.0, 2) + 1e-9; }, 3.0, 0.1);
  EXPECT_FALSE(r.t_c.has_value());
  EXPECT_FALSE(r.warnings.empty());
}

TEST(PurityRate, ZeroWithoutCoupling) {
  const auto r = gf::purity_rate_initial(gf::two_oscillator_system({1, 1, 0}), gf::vacuum_state(1),
                                         gf::isotropic_thermal_state(1, 0.5));
  EXPECT_EQ(r.value, 0.0);
}

TEST(PurityRate, BathExample) {
  // x y coupling with c = 1, tau = 0.5, ground state: -2 / tau c^2 Cov_xx = -2
  const auto sys = gf::BipartiteSystem(gf::QuadraticHamiltonian<double>(MatrixXd::Identity(2, 2)),
                                       gf::QuadraticHamiltonian<double>(MatrixXd::Identity(2, 2)),
                                       MatrixXd((MatrixXd(2, 2) << 1, 0, 0, 0).finished()));
  const auto r = gf::purity_rate_initial(sys, gf::vacuum_state(1), gf::isotropic_thermal_state(1, 0.5));
  EXPECT_NEAR(r.value, -2.0, 1e-12);
  EXPECT_EQ(r.quantum_term, 0.0);
}

TEST(PurityRate, MixedCouplingQuantumCorrection) {
  // x eta_1 with weight c, xi y_1 with weight d; the commutator term is -2 c d
  const double c = 0.7;
  const double d = 0.4;
  MatrixXd g = MatrixXd::Zero(2, 2);
  g(0, 1) = c;
  g(1, 0) = d;
  const gf::BipartiteSystem sys{gf::QuadraticHamiltonian<double>(MatrixXd::Identity(2, 2)),
                                gf::QuadraticHamiltonian<double>(MatrixXd::Identity(2, 2)), g};
  const auto r = gf::purity_rate_initial(sys, gf::vacuum_state(1), gf::vacuum_state(1));
  EXPECT_NEAR(r.quantum_term, -2 * c * d, 1e-15);
  const double h = 1e-3;
  const auto s0 = gf::vacuum_state(1);
  const double fd = (gf::purity(gf::reduced_state(gf::flow_at(sys, h), s0, s0)) +
                     gf::purity(gf::reduced_state(gf::flow_at(sys, -h), s0, s0)) - 2) / (h * h);
  EXPECT_NEAR(fd, r.value, 1e-5);
}

TEST(PurityRate, PassiveCouplingKeepsVacuaPure) {
  // x eta - xi y conserves the total number of quanta
  MatrixXd g = MatrixXd::Zero(2, 2);
  g(0, 1) = 0.5;
  g(1, 0) = -0.5;
  const gf::BipartiteSystem sys{gf::QuadraticHamiltonian<double>(MatrixXd::Identity(2, 2)),
                                gf::QuadraticHamiltonian<double>(MatrixXd::Identity(2, 2)), g};
  const auto s0 = gf::vacuum_state(1);
  EXPECT_NEAR(gf::purity_rate_initial(sys, s0, s0).value, 0.0, 1e-15);
  EXPECT_NEAR(gf::purity(gf::reduced_state(gf::flow_at(sys, 2.0), s0, s0)), 1.0, 1e-12);
}

TEST(PurityRate, MatchesFiniteDifferences) {
  oracle::Random rng(9);
  const auto sys = random_system(rng, 1, 2);
  const auto s0 = state(rng.pure_covariance(1));
  const auto e0 = state(rng.valid_covariance(2));
  const double rate = gf::purity_rate_initial(sys, s0, e0).value;
  const double h = 1e-3;
  const double p_h = gf::purity(gf::reduced_state(gf::flow_at(sys, h), s0, e0));
  const double p_m = gf::purity(gf::reduced_state(gf::flow_at(sys, -h), s0, e0));
  EXPECT_NEAR((p_h + p_m - 2) / (h * h), rate, 1e-5 * std::abs(rate));
}

TEST(PurityRate, RequiresPureSystemAndCentredEnvironment) {
  oracle::Random rng(10);
  const auto sys = random_system(rng, 1, 1);
  EXPECT_THROW(gf::purity_rate_initial(sys, gf::isotropic_thermal_state(1, 0.5), gf::vacuum_state(1)),
               std::invalid_argument);
  const gf::GaussianState<double> shifted(VectorXd::Ones(2), MatrixXd::Identity(2, 2) / 2);
  EXPECT_THROW(gf::purity_rate_initial(sys, gf::vacuum_state(1), shifted), std::invalid_argument);
}

TEST(CorrelationRate, Examples) {
  const auto decoupled = gf::correlation_rate(gf::two_oscillator_system({1, 1, 0}), gf::vacuum_state(1),
                                              gf::vacuum_state(1));
  EXPECT_TRUE(decoupled.rate.isZero(0));
  EXPECT_FALSE(decoupled.correlates);

  const auto sys = gf::two_oscillator_system({1, 1, 0.3});
  const auto r = gf::correlation_rate(sys, gf::vacuum_state(1), gf::vacuum_state(1));
  const MatrixXd g = sys.coupling(0);
  const MatrixXd expected = 2 * oracle::J(1) * g - 2 * g * oracle::J(1);
  EXPECT_LT((r.rate - expected).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_TRUE(r.correlates);

  const auto r2 = gf::correlation_rate(gf::two_oscillator_system({1, 1, 0.6}), gf::vacuum_state(1),
                                       gf::vacuum_state(1));
  EXPECT_LT((r2.rate - 2 * r.rate).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(CorrelationRate, AgreesWithInverseCovarianceDerivative) {
  // C(t) is the off-diagonal block of Gamma_total(t)^{-1}, up to sign
  oracle::Random rng(11);
  const auto sys = random_system(rng, 1, 2);
  const auto s0 = state(rng.valid_covariance(1));
  const auto e0 = state(rng.valid_covariance(2));
  const double h = 1e-5;
  auto inv_block = [&](double t) {
    const MatrixXd phi = gf::flow_at(sys, t).full.M;
    MatrixXd g0 = MatrixXd::Zero(6, 6);
    g0.topLeftCorner(2, 2) = s0.cov;
    g0.bottomRightCorner(4, 4) = e0.cov;
    return MatrixXd((phi * g0 * phi.transpose()).inverse().topRightCorner(2, 4));
  };
  const MatrixXd fd = (inv_block(h) - inv_block(-h)) / (2 * h);
  const auto r = gf::correlation_rate(sys, s0, e0);
  EXPECT_LT((fd + r.rate).norm(), 1e-6 * r.rate.norm());
}
