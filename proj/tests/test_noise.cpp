#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "ofulq/errors.hpp"
#include "ofulq/noise.hpp"

using namespace ofulq;

namespace {

MatrixXd diag2(double a, double b) {
  MatrixXd C = MatrixXd::Zero(2, 2);
  C(0, 0) = a;
  C(1, 1) = b;
  return C;
}

}  // namespace

TEST(NoiseModel, DeterministicPerSeed) {
  const auto noise = NoiseModel::gaussian(MatrixXd::Identity(3, 3));
  Rng a(42);
  Rng b(42);
  for (int k = 0; k < 100; ++k) {
    EXPECT_EQ(noise.sample(a), noise.sample(b));
  }
}

TEST(NoiseModel, SampleCovarianceMatchesC) {
  const MatrixXd C = diag2(4.0, 1.0);
  for (const auto& noise :
       {NoiseModel::gaussian(C), NoiseModel::weibull_symmetric(C, 1.0), NoiseModel::uniform_bounded(C)}) {
    Rng rng(1);
    MatrixXd S = MatrixXd::Zero(2, 2);
    const int n = 1000000;
    for (int k = 0; k < n; ++k) {
      const VectorXd w = noise.sample(rng);
      S += w * w.transpose();
    }
    S /= n;
    EXPECT_NEAR(S(0, 0), 4.0, 0.02 * 4.0) << noise.kind_name();
    EXPECT_NEAR(S(1, 1), 1.0, 0.02) << noise.kind_name();
    EXPECT_NEAR(S(0, 1), 0.0, 0.02 * 2.0) << noise.kind_name();
  }
}

TEST(NoiseModel, UniformSupportAfterUnmixing) {
  MatrixXd C(2, 2);
  C << 2.0, 0.5, 0.5, 1.0;
  const auto noise = NoiseModel::uniform_bounded(C);
  const MatrixXd Minv = noise.mixer().inverse();
  Rng rng(3);
  for (int k = 0; k < 10000; ++k) {
    const VectorXd z = Minv * noise.sample(rng);
    EXPECT_LE(z.cwiseAbs().maxCoeff(), std::sqrt(3.0) + 1e-12);
  }
}

TEST(NoiseModel, TailTriples) {
  const auto g = NoiseModel::gaussian(MatrixXd::Identity(2, 2)).tail();
  EXPECT_EQ(g.alpha, 2.0);
  EXPECT_FALSE(g.bounded);
  const auto w = NoiseModel::weibull_symmetric(MatrixXd::Identity(1, 1), 0.5).tail();
  EXPECT_EQ(w.alpha, 0.5);
  EXPECT_NEAR(w.b2, 0.4518010018049224, 1e-12);  // tests/oracles/reference_values.py
  const auto u = NoiseModel::uniform_bounded(MatrixXd::Identity(2, 2)).tail();
  EXPECT_TRUE(u.bounded);
  EXPECT_NEAR(u.support, std::sqrt(3.0), 1e-15);
}

TEST(NoiseModel, TailOverride) {
  auto noise = NoiseModel::gaussian(MatrixXd::Identity(1, 1));
  noise.set_tail_override({3.0, 4.0, 1.0, false, 0.0});
  EXPECT_EQ(noise.tail().b1, 3.0);
  EXPECT_EQ(noise.tail().alpha, 1.0);
}

TEST(NoiseModel, Kurtosis) {
  EXPECT_EQ(NoiseModel::gaussian(MatrixXd::Identity(1, 1)).base_kurtosis(), 3.0);
  EXPECT_NEAR(NoiseModel::weibull_symmetric(MatrixXd::Identity(1, 1), 0.5).base_kurtosis(), 70.0, 1e-10);
  EXPECT_NEAR(NoiseModel::uniform_bounded(MatrixXd::Identity(1, 1)).base_kurtosis(), 1.8, 1e-15);
}

TEST(NoiseModel, RejectsBadCovariance) {
  EXPECT_THROW(NoiseModel::gaussian(MatrixXd::Zero(2, 3)), DimensionError);
  MatrixXd asym(2, 2);
  asym << 1, 0.5, 0, 1;
  EXPECT_THROW(NoiseModel::gaussian(asym), DomainError);
  EXPECT_THROW(NoiseModel::gaussian(diag2(1.0, -1.0)), DomainError);
  EXPECT_THROW(NoiseModel::weibull_symmetric(MatrixXd::Identity(1, 1), 0.0), ArgumentError);
}

TEST(NoiseModel, ZeroMode) {
  const auto noise = NoiseModel::zero(3);
  Rng rng(1);
  EXPECT_EQ(noise.sample(rng), VectorXd::Zero(3));
  EXPECT_THROW(noise.lambda_min_C(), DomainError);
}

TEST(NoiseModel, EmpiricalTailsUnderCertificate) {
  for (const auto& noise : {NoiseModel::gaussian(MatrixXd::Identity(1, 1)),
                            NoiseModel::weibull_symmetric(MatrixXd::Identity(1, 1), 0.5),
                            NoiseModel::weibull_symmetric(MatrixXd::Identity(1, 1), 1.5)}) {
    Rng rng(17);
    const int n = 1000000;
    std::vector<double> a(n);
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
      const double x = noise.sample(rng)(0);
      sum += x;
      a[k] = std::abs(x);
    }
    EXPECT_LE(std::abs(sum / n), 4.0 / std::sqrt(static_cast<double>(n))) << noise.kind_name();
    std::sort(a.begin(), a.end());
    const double top = a[static_cast<std::size_t>(n - n / 100000)];
    const auto tail = noise.tail();
    for (int g = 1; g <= 50; ++g) {
      const double y = top * g / 50.0;
      const double freq =
          static_cast<double>(a.end() - std::upper_bound(a.begin(), a.end(), y)) / static_cast<double>(n);
      const double bound = std::min(1.0, tail.b1 * std::exp(-std::pow(y, tail.alpha) / tail.b2));
      const double se = std::sqrt(bound * (1.0 - bound) / n);
      EXPECT_LE(freq, 1.05 * bound + 3.0 * se) << noise.kind_name() << " y=" << y;
    }
  }
}

TEST(QuadraticFormVariance, GaussianClosedForm) {
  const auto noise = NoiseModel::gaussian(MatrixXd::Identity(1, 1));
  const auto v = quadratic_form_variance(noise, MatrixXd::Identity(1, 1), FourthMomentMode::closed_form, nullptr);
  EXPECT_NEAR(v.value, 2.0, 1e-15);
}
