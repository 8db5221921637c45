#include <gtest/gtest.h>

#include <cmath>

#include "gaussflow/bipartite.hpp"
#include "gaussflow/models.hpp"
#include "oracles.hpp"

namespace gf = gaussflow;
using Eigen::MatrixXd;

namespace {

gf::BipartiteSystem random_system(oracle::Random& rng, int d, int n, double g_scale = 0.3) {
  return gf::BipartiteSystem(gf::QuadraticHamiltonian<double>(rng.spd(2 * d)),
                             gf::QuadraticHamiltonian<double>(rng.spd(2 * n)),
                             MatrixXd(rng.matrix(2 * d, 2 * n, g_scale)));
}

}  // namespace

TEST(TotalHessian, BlockLayout) {
  oracle::Random rng(1);
  const MatrixXd hs = rng.spd(2);
  const MatrixXd he = rng.spd(4);
  const MatrixXd g = rng.matrix(2, 4);
  const gf::BipartiteSystem sys{gf::QuadraticHamiltonian<double>(hs), gf::QuadraticHamiltonian<double>(he), g};
  const MatrixXd h = gf::total_hessian(sys, 0);
  EXPECT_TRUE(h.topLeftCorner(2, 2).isApprox(hs));
  EXPECT_TRUE(h.bottomRightCorner(4, 4).isApprox(he));
  EXPECT_TRUE(h.topRightCorner(2, 4).isApprox(g));
  EXPECT_TRUE(h.bottomLeftCorner(4, 2).isApprox(g.transpose()));

  const gf::BipartiteSystem decoupled{gf::QuadraticHamiltonian<double>(hs),
                                      gf::QuadraticHamiltonian<double>(he), MatrixXd::Zero(2, 4)};
  EXPECT_TRUE(gf::total_hessian(decoupled, 0).topRightCorner(2, 4).isZero(0));
}

TEST(TotalHessian, TwoOscillatorCouplingEntry) {
  const auto sys = gf::two_oscillator_system({1.5, 0.8, 0.3});
  const MatrixXd h = gf::total_hessian(sys, 0);
  // (x, xi, y, eta): gamma x y
  EXPECT_DOUBLE_EQ(h(0, 2), 0.3);
  EXPECT_DOUBLE_EQ(h(2, 0), 0.3);
  EXPECT_DOUBLE_EQ(h(0, 0), 2.25);
  EXPECT_DOUBLE_EQ(h(2, 2), 0.8);
}

TEST(BipartiteSystem, DimensionMismatch) {
  EXPECT_THROW(gf::BipartiteSystem(gf::QuadraticHamiltonian<double>(MatrixXd::Identity(2, 2)),
                                   gf::QuadraticHamiltonian<double>(MatrixXd::Identity(4, 4)),
                                   MatrixXd(MatrixXd::Zero(2, 2))),
               std::invalid_argument);
}

TEST(FullFlow, DecoupledHasTrivialInteraction) {
  oracle::Random rng(2);
  const gf::BipartiteSystem sys{gf::QuadraticHamiltonian<double>(rng.spd(2)),
                                gf::QuadraticHamiltonian<double>(rng.spd(4)), MatrixXd::Zero(2, 4)};
  const auto flow = gf::full_flow(sys, gf::uniform_grid(5.0, 50));
  for (const auto& s : flow.snapshots) {
    EXPECT_LT((s.interaction.M - MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT(s.full.ie().cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(FullFlow, StartsAtIdentity) {
  oracle::Random rng(3);
  const auto sys = random_system(rng, 1, 2);
  const auto flow = gf::full_flow(sys, gf::uniform_grid(1.0, 4));
  EXPECT_TRUE(flow[0].full.M.isIdentity(0));
  EXPECT_TRUE(flow[0].interaction.M.isIdentity(0));
}

TEST(FullFlow, MatchesAnalyticTwoOscillator) {
  const gf::TwoOscillatorParams p{1.0, 0.25, 0.5};
  const auto flow = gf::full_flow(gf::two_oscillator_system(p), gf::uniform_grid(10.0, 100));
  for (const auto& s : flow.snapshots) {
    const auto ref = gf::two_oscillator_flow(p, s.t);
    EXPECT_LT((s.full.M - ref.M).cwiseAbs().maxCoeff(), 1e-8) << "t = " << s.t;
  }
}

TEST(FullFlow, MatchesTaylorOracleOnRandomSystems) {
  oracle::Random rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const auto sys = random_system(rng, rng.integer(1, 2), rng.integer(1, 3));
    const auto flow = gf::full_flow(sys, gf::uniform_grid(3.0, 30));
    const MatrixXd k = gf::total_generator(sys, 0);
    for (std::size_t i = 0; i < flow.size(); i += 10) {
      const MatrixXd ref = oracle::expm_taylor(flow[i].t * k);
      EXPECT_LT((flow[i].full.M - ref).cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, ref.norm()));
    }
  }
}

TEST(FullFlow, SymplecticAndUnimodular) {
  oracle::Random rng(5);
  const auto sys = random_system(rng, 2, 3);
  const auto flow = gf::full_flow(sys, gf::uniform_grid(10.0, 200));
  EXPECT_LT(flow.diagnostics.max_symplectic_deviation, 1e-8);
  for (const auto& s : flow.snapshots) EXPECT_NEAR(s.full.M.determinant(), 1.0, 1e-8);
}

TEST(FullFlow, RejectsBadGrid) {
  oracle::Random rng(6);
  const auto sys = random_system(rng, 1, 1);
  EXPECT_THROW(gf::full_flow(sys, {0.5, 1.0}), std::invalid_argument);
  EXPECT_THROW(gf::full_flow(sys, {0.0, 1.0, 1.0}), std::invalid_argument);
}

TEST(FullFlow, TimeDependentCouplingUsesIntegrator) {
  oracle::Random rng(7);
  const MatrixXd g = rng.matrix(2, 2, 0.4);
  const gf::BipartiteSystem sys{
      gf::QuadraticHamiltonian<double>(rng.spd(2)), gf::QuadraticHamiltonian<double>(rng.spd(2)),
      gf::MatrixSchedule<double>::varying(2, 2, [g](double t) { return MatrixXd(g * std::cos(1.3 * t)); })};
  const auto flow = gf::full_flow(sys, gf::uniform_grid(4.0, 40));
  EXPECT_FALSE(flow.diagnostics.used_exponential);
  EXPECT_GT(flow.diagnostics.integrator_steps, 0);
  EXPECT_LT(flow.diagnostics.max_symplectic_deviation, 1e-8);
  // against a fine fixed-step RK4 on the total generator
  const MatrixXd ref = oracle::rk4(
      [&](double t, const MatrixXd& u) { return MatrixXd(gf::total_generator(sys, t) * u); },
      MatrixXd::Identity(4, 4), 0.0, 4.0, 4000);
  EXPECT_LT((flow.snapshots.back().full.M - ref).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(InteractionFlow, BlockEquationsAgreeWithFactorisation) {
  oracle::Random rng(8);
  for (int trial = 0; trial < 3; ++trial) {
    const auto sys = random_system(rng, rng.integer(1, 2), rng.integer(1, 2));
    for (double t : {0.7, 2.0}) {
      const auto snap = gf::flow_at(sys, t);
      const MatrixXd direct = gf::integrate_interaction_flow(sys, t);
      EXPECT_LT((direct - snap.interaction.M).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

TEST(InteractionGenerator, AtTimeZero) {
  oracle::Random rng(9);
  const auto sys = random_system(rng, 1, 2);
  const MatrixXd k = gf::interaction_generator(sys, 0.0);
  const MatrixXd g = sys.coupling(0);
  EXPECT_LT((k.topRightCorner(2, 4) - oracle::J(1) * g).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((k.bottomLeftCorner(4, 2) - oracle::J(2) * g.transpose()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_TRUE(k.topLeftCorner(2, 2).isZero(0));
}

TEST(InteractionGenerator, PeriodicInTwoOscillatorModel) {
  // G(t) oscillates with w_S +- w_E; with w_S = 1, w_E = 2 the period is 2 pi
  const auto sys = gf::two_oscillator_system({1.0, 4.0, 0.3});
  const MatrixXd k0 = gf::interaction_generator(sys, 0.4);
  const MatrixXd k1 = gf::interaction_generator(sys, 0.4 + 2 * M_PI);
  EXPECT_LT((k0 - k1).cwiseAbs().maxCoeff(), 1e-12);
  const MatrixXd zero = gf::interaction_generator(gf::two_oscillator_system({1.0, 4.0, 0.0}), 0.9);
  EXPECT_TRUE(zero.isZero(0));
}

TEST(Snapshot, DressedCouplingFromFreeFlows) {
  oracle::Random rng(10);
  const auto sys = random_system(rng, 1, 1);
  const auto snap = gf::flow_at(sys, 1.3);
  const MatrixXd fs = oracle::expm_taylor(1.3 * oracle::J(1) * sys.system().hessian());
  const MatrixXd fe = oracle::expm_taylor(1.3 * oracle::J(1) * sys.environment().hessian());
  EXPECT_LT((snap.coupling - fs.transpose() * sys.coupling(0) * fe).cwiseAbs().maxCoeff(), 1e-12);
}
