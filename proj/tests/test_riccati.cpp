#include <cmath>

#include <gtest/gtest.h>

#include "ofulq/errors.hpp"
#include "ofulq/riccati.hpp"
#include "test_support.hpp"

using namespace ofulq;

namespace {

constexpr double kScalarK = 1.48389990267865;  // tests/oracles/reference_values.py
constexpr double kScalarL = -0.5376665585318331;
constexpr double kScalarD = 0.3623334414681669;
constexpr double kScalarSigma2 = 5.735012630110341;

DynamicsParameter scalar_reference() {
  return DynamicsParameter(MatrixXd::Constant(1, 1, 0.9), MatrixXd::Ones(1, 1));
}

CostPair unit_cost(int p, int r) { return CostPair(MatrixXd::Identity(p, p), MatrixXd::Identity(r, r)); }

double dare_residual(const DynamicsParameter& th, const CostPair& cost, const MatrixXd& K) {
  const MatrixXd& A = th.A();
  const MatrixXd& B = th.B();
  const MatrixXd G = B.transpose() * K * B + cost.R();
  const MatrixXd rhs =
      cost.Q() + A.transpose() * K * A - A.transpose() * K * B * G.ldlt().solve(B.transpose() * K * A);
  return operator_norm(rhs - K) / (1.0 + operator_norm(K));
}

}  // namespace

TEST(SolveDare, ZeroDynamics) {
  const DynamicsParameter th(MatrixXd::Zero(2, 2), MatrixXd::Identity(2, 2));
  const auto sol = solve_dare(th, unit_cost(2, 2));
  EXPECT_TRUE(sol.K.isApprox(MatrixXd::Identity(2, 2), 1e-14));
  EXPECT_LE(sol.L.norm(), 1e-14);
  EXPECT_LE(sol.closed_loop.norm(), 1e-14);
}

TEST(SolveDare, ScalarOracle) {
  const auto sol = solve_dare(scalar_reference(), unit_cost(1, 1));
  EXPECT_NEAR(sol.K(0, 0), kScalarK, 1e-10);
  EXPECT_NEAR(sol.L(0, 0), kScalarL, 1e-10);
  EXPECT_NEAR(sol.closed_loop(0, 0), kScalarD, 1e-10);
}

TEST(SolveDare, NotStabilizable) {
  const DynamicsParameter th(MatrixXd::Constant(1, 1, 2.0), MatrixXd::Zero(1, 1));
  EXPECT_THROW(solve_dare(th, unit_cost(1, 1)), NotStabilizableError);
  EXPECT_THROW(solve_dare(th, CostPair(MatrixXd::Constant(1, 1, 3.0), MatrixXd::Constant(1, 1, 0.2))),
               NotStabilizableError);
}

TEST(SolveDare, RandomSuiteResidualBellmanUniqueness) {
  Rng rng(2024);
  for (int k = 0; k < 200; ++k) {
    const int p = 1 + k % 4;
    const int r = 1 + (k / 4) % 3;
    const auto th = fixtures::random_stabilizable(p, r, rng);
    const CostPair cost(fixtures::random_pd(p, rng), fixtures::random_pd(r, rng));
    const auto sol = solve_dare(th, cost);
    EXPECT_LE(dare_residual(th, cost, sol.K), 1e-9) << "system " << k;
    const MatrixXd D = sol.closed_loop;
    const MatrixXd bellman = sol.K - D.transpose() * sol.K * D - cost.Q() - sol.L.transpose() * cost.R() * sol.L;
    EXPECT_LE(operator_norm(bellman), 1e-8 * (1.0 + operator_norm(sol.K))) << "system " << k;
    DareOptions from_ten;
    from_ten.initial = 10.0 * cost.Q();
    const auto other = solve_dare(th, cost, from_ten);
    EXPECT_LE(operator_norm(other.K - sol.K), 1e-8 * operator_norm(sol.K)) << "system " << k;
  }
}

TEST(SolveDare, OptimalAmongStabilizingGains) {
  Rng rng(99);
  for (int k = 0; k < 10; ++k) {
    const int p = 1 + k % 3;
    const int r = 1 + k % 2;
    const auto th = fixtures::random_stabilizable(p, r, rng);
    const CostPair cost(fixtures::random_pd(p, rng), fixtures::random_pd(r, rng));
    const MatrixXd C = fixtures::random_pd(p, rng);
    const auto sol = solve_dare(th, cost);
    const double J = sol.average_cost(C);
    int tried = 0;
    while (tried < 20) {
      const MatrixXd L = sol.L + 0.3 * fixtures::random_matrix(r, p, rng);
      if (!is_stabilizer(th, L, 1e-3)) {
        continue;
      }
      ++tried;
      EXPECT_GE(policy_average_cost(th, cost, C, L), J - 1e-8);
    }
  }
}

TEST(AverageCost, Examples) {
  const DynamicsParameter zero(MatrixXd::Zero(2, 2), MatrixXd::Identity(2, 2));
  EXPECT_NEAR(average_cost(zero, unit_cost(2, 2), MatrixXd::Identity(2, 2)), 2.0, 1e-14);
  EXPECT_NEAR(average_cost(scalar_reference(), unit_cost(1, 1), MatrixXd::Ones(1, 1)), kScalarK, 1e-10);
  EXPECT_EQ(average_cost(scalar_reference(), unit_cost(1, 1), MatrixXd::Zero(1, 1)), 0.0);
}

TEST(LyapunovSeries, ScalarClosedForm) {
  const MatrixXd S = lyapunov_series(MatrixXd::Constant(1, 1, kScalarD), MatrixXd::Ones(1, 1));
  EXPECT_NEAR(S(0, 0), 1.151126205735918, 1e-12);
}

TEST(LyapunovSeries, SolvesLyapunovEquation) {
  Rng rng(3);
  const MatrixXd D = fixtures::random_stable(3, 0.9, rng);
  const MatrixXd C = fixtures::random_pd(3, rng);
  const MatrixXd S = lyapunov_series(D, C);
  EXPECT_LE((S - D * S * D.transpose() - C).norm(), 1e-10 * S.norm());
}

TEST(CltVariance, ZeroDynamicsGaussian) {
  const DynamicsParameter th(MatrixXd::Zero(1, 1), MatrixXd::Ones(1, 1));
  const auto v = clt_variance(th, unit_cost(1, 1), NoiseModel::gaussian(MatrixXd::Ones(1, 1)));
  EXPECT_NEAR(v.series_term, 0.0, 1e-15);
  EXPECT_NEAR(v.sigma2, 2.0, 1e-12);
  const DynamicsParameter th2(MatrixXd::Zero(2, 2), MatrixXd::Identity(2, 2));
  const auto v2 = clt_variance(th2, unit_cost(2, 2), NoiseModel::gaussian(3.0 * MatrixXd::Identity(2, 2)));
  EXPECT_NEAR(v2.series_term, 0.0, 1e-15);
}

TEST(CltVariance, ScalarReferenceOracle) {
  const auto v = clt_variance(scalar_reference(), unit_cost(1, 1), NoiseModel::gaussian(MatrixXd::Ones(1, 1)));
  EXPECT_NEAR(v.sigma2, kScalarSigma2, 1e-9);
  // Independent Monte Carlo oracle (tests/oracles/clt_variance_oracle.py):
  // T^{-1} Var R(T) at T = 1e5 over 2000 replications.
  const double mc = 5.502845;
  const double mc_se = 0.164663;
  EXPECT_LE(std::abs(v.sigma2 - mc), 3.0 * mc_se);
}

TEST(CltVariance, MonteCarloQuarticMatchesClosedForm) {
  Rng rng(8);
  MatrixXd C(2, 2);
  C << 1.0, 0.3, 0.3, 0.5;
  const DynamicsParameter th(MatrixXd::Zero(2, 2), MatrixXd::Identity(2, 2));
  for (const auto& noise :
       {NoiseModel::gaussian(C), NoiseModel::weibull_symmetric(C, 1.5), NoiseModel::uniform_bounded(C)}) {
    const auto exact = clt_variance(th, unit_cost(2, 2), noise, FourthMomentMode::closed_form);
    const auto mc = clt_variance(th, unit_cost(2, 2), noise, FourthMomentMode::monte_carlo, &rng, 400000);
    EXPECT_GT(mc.quartic_standard_error, 0.0);
    EXPECT_LE(std::abs(mc.quartic_term - exact.quartic_term), 4.0 * mc.quartic_standard_error) << noise.kind_name();
  }
}

TEST(CltVariance, MonteCarloNeedsRng) {
  EXPECT_THROW(clt_variance(scalar_reference(), unit_cost(1, 1), NoiseModel::gaussian(MatrixXd::Ones(1, 1)),
                            FourthMomentMode::monte_carlo, nullptr),
               ArgumentError);
}

TEST(LipschitzProbe, SmoothPointAndErrors) {
  Rng rng(4);
  const DynamicsParameter th(MatrixXd::Zero(1, 1), MatrixXd::Ones(1, 1));
  const auto probe = lipschitz_probe(th, unit_cost(1, 1), 1e-6, 20, rng);
  EXPECT_TRUE(std::isfinite(probe.estimate));
  EXPECT_LT(probe.estimate, 10.0);
  EXPECT_THROW(lipschitz_probe(th, unit_cost(1, 1), 1e-6, 0, rng), ArgumentError);
}

TEST(OptimalGain, MatchedClosedLoopsShareTheGain) {
  Rng rng(77);
  for (int k = 0; k < 100; ++k) {
    const int p = 2 + k % 3;
    const int r = 1 + k % 2;
    const auto pair = fixtures::matched_pair(p, r, rng);
    const MatrixXd ext = extended_feedback(pair.L1);
    ASSERT_GT((pair.theta1.stacked() - pair.theta0.stacked()).norm(), 0.01);
    ASSERT_LE((pair.theta1.stacked() * ext - pair.theta0.stacked() * ext).norm(), 1e-12);
    const auto s1 = solve_dare(pair.theta1, pair.cost);
    const auto s0 = solve_dare(pair.theta0, pair.cost);
    const MatrixXd C = MatrixXd::Identity(p, p);
    ASSERT_LE(s1.average_cost(C), s0.average_cost(C) + 1e-9);
    EXPECT_LE(operator_norm(s1.L - s0.L), 1e-6) << "instance " << k;
  }
}
