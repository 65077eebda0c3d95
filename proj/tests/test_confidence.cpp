#include <cmath>

#include <gtest/gtest.h>

#include "ofulq/confidence.hpp"
#include "ofulq/errors.hpp"
#include "test_support.hpp"

using namespace ofulq;

namespace {

MatrixXd scalar(double x) { return MatrixXd::Constant(1, 1, x); }

MatrixXd stack_ab(double a, double b) {
  MatrixXd th(1, 2);
  th << a, b;
  return th;
}

MatrixXd ext(double L) {
  MatrixXd e(2, 1);
  e << 1.0, L;
  return e;
}

// Independent evaluation of ||W^{1/2} (theta Ltilde - D_hat)'||_2^2 through
// the largest eigenvalue of (theta Ltilde - D_hat) W (theta Ltilde - D_hat)'.
double deviation_oracle(const ConfidenceEllipsoid& e, const MatrixXd& theta) {
  const MatrixXd diff = theta * e.feedback_ext() - e.center();
  const MatrixXd G = diff * e.weight() * diff.transpose();
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(G).eigenvalues().maxCoeff();
}

ParameterRegion random_region(Rng& rng, int p, int r, int ellipsoids) {
  const DynamicsParameter center(fixtures::random_stable(p, 0.5, rng), fixtures::random_matrix(p, r, rng));
  ParameterRegion region(center, 0.5);
  for (int k = 0; k < ellipsoids; ++k) {
    MatrixXd L_ext(p + r, p);
    L_ext << MatrixXd::Identity(p, p), fixtures::random_matrix(r, p, rng);
    const MatrixXd D_hat = center.stacked() * L_ext + 0.05 * fixtures::random_matrix(p, p, rng);
    region.add(ConfidenceEllipsoid(D_hat, fixtures::random_pd(p, rng), L_ext, 0.3, k + 1));
  }
  return region;
}

}  // namespace

TEST(ConfidenceEllipsoid, BoundaryIsIncluded) {
  const ConfidenceEllipsoid e(scalar(0.9), scalar(4.0), ext(0.0), 0.01, 1);
  EXPECT_NEAR(e.deviation(stack_ab(0.95, 3.0)), 0.01, 1e-15);
  EXPECT_TRUE(e.contains(stack_ab(0.95, 3.0)));
  EXPECT_FALSE(e.contains(stack_ab(0.96, 3.0)));
}

TEST(ConfidenceEllipsoid, RejectsMalformedInputs) {
  EXPECT_THROW(ConfidenceEllipsoid(scalar(0.9), scalar(-1.0), ext(0.0), 0.01, 1), DomainError);
  MatrixXd bad(2, 1);
  bad << 2.0, 0.0;
  EXPECT_THROW(ConfidenceEllipsoid(scalar(0.9), scalar(1.0), bad, 0.01, 1), DomainError);
  EXPECT_THROW(ConfidenceEllipsoid(scalar(0.9), scalar(1.0), ext(0.0), -1.0, 1), DomainError);
  EXPECT_THROW(ConfidenceEllipsoid(scalar(0.9), MatrixXd::Identity(2, 2), ext(0.0), 1.0, 1), DimensionError);
}

TEST(ParameterRegion, BallOnly) {
  const DynamicsParameter center(scalar(0.5), scalar(1.0));
  const ParameterRegion region(center, 0.2);
  EXPECT_TRUE(region.contains(center));
  EXPECT_FALSE(region.contains(stack_ab(0.9, 1.0)));
  Rng rng(3);
  const auto sample = sample_feasible(region, 100, rng, 1000);
  EXPECT_EQ(sample.points.size(), 100u);
  EXPECT_EQ(sample.acceptance_rate, 1.0);
  for (const auto& th : sample.points) {
    EXPECT_LE(operator_norm(th.stacked() - center.stacked()), 0.2 + 1e-12);
  }
}

TEST(ParameterRegion, AddingEllipsoidsShrinks) {
  Rng rng(5);
  ParameterRegion region = random_region(rng, 2, 1, 0);
  ParameterRegion tighter = region;
  MatrixXd L_ext(3, 2);
  L_ext << MatrixXd::Identity(2, 2), fixtures::random_matrix(1, 2, rng);
  tighter.add(ConfidenceEllipsoid(region.ball_center().stacked() * L_ext, MatrixXd::Identity(2, 2), L_ext, 0.01, 1));
  for (int k = 0; k < 2000; ++k) {
    const MatrixXd th = sample_ball(region, rng);
    if (tighter.contains(th)) {
      EXPECT_TRUE(region.contains(th));
    }
  }
}

TEST(ParameterRegion, EmptyRegionThrows) {
  const DynamicsParameter center(scalar(0.5), scalar(1.0));
  ParameterRegion region(center, 0.1);
  region.add(ConfidenceEllipsoid(scalar(5.0), scalar(1.0), ext(0.0), 0.01, 1));
  Rng rng(1);
  EXPECT_THROW(sample_feasible(region, 10, rng, 500), EmptyRegionError);
}

TEST(SampleFeasible, AcceptedPointsSatisfyEveryConstraint) {
  Rng rng(8);
  const ParameterRegion region = random_region(rng, 2, 2, 3);
  const auto sample = sample_feasible(region, 200, rng, 200000);
  ASSERT_FALSE(sample.points.empty());
  for (const auto& th : sample.points) {
    EXPECT_LE(operator_norm(th.stacked() - region.ball_center().stacked()), region.ball_radius() + 1e-12);
    for (const auto& e : region.ellipsoids()) {
      EXPECT_LE(deviation_oracle(e, th.stacked()), e.radius() * (1.0 + 1e-10));
    }
  }
}

TEST(SampleBall, FillsTheBall) {
  const DynamicsParameter center(MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 1));
  const ParameterRegion region(center, 1.0);
  Rng rng(6);
  double largest = 0.0;
  for (int k = 0; k < 5000; ++k) {
    const double norm = operator_norm(sample_ball(region, rng));
    ASSERT_LE(norm, 1.0 + 1e-12);
    largest = std::max(largest, norm);
  }
  EXPECT_GT(largest, 0.9);
}

TEST(HitAndRun, StaysInside) {
  Rng rng(9);
  const ParameterRegion region = random_region(rng, 2, 1, 2);
  const auto start = sample_feasible(region, 1, rng, 1000000).points.front().stacked();
  const auto walk = hit_and_run(region, start, 300, rng);
  ASSERT_EQ(walk.size(), 300u);
  int moved = 0;
  for (const auto& th : walk) {
    EXPECT_TRUE(region.contains(th));
    moved += (th.stacked() - start).norm() > 1e-9;
  }
  EXPECT_GT(moved, 250);
  EXPECT_THROW(hit_and_run(region, region.ball_center().stacked() + MatrixXd::Constant(2, 3, 5.0), 1, rng),
               DomainError);
}
