#include "ofulq/noise.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "ofulq/errors.hpp"
#include "ofulq/lqmodel.hpp"

namespace ofulq {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

MatrixXd checked_covariance(const MatrixXd& C) {
  if (C.rows() == 0 || C.rows() != C.cols()) {
    throw DimensionError("noise covariance must be square and non-empty");
  }
  require_finite(C, "C");
  MatrixXd sym = 0.5 * (C + C.transpose());
  if ((sym - C).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, C.cwiseAbs().maxCoeff())) {
    throw DomainError("noise covariance must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues()(0) <= 0.0) {
    throw DomainError("noise covariance must be positive definite");
  }
  return sym;
}

}  // namespace

NoiseModel::NoiseModel(NoiseKind kind, MatrixXd C, double shape)
    : kind_(kind), C_(std::move(C)), shape_(shape) {
  if (kind_ == NoiseKind::zero) {
    mixer_ = MatrixXd::Zero(C_.rows(), C_.cols());
  } else {
    Eigen::LLT<MatrixXd> llt(C_);
    if (llt.info() != Eigen::Success) {
      throw DomainError("noise covariance has no Cholesky factor");
    }
    mixer_ = llt.matrixL();
  }
  if (kind_ == NoiseKind::weibull_symmetric) {
    weibull_scale_ = 1.0 / std::sqrt(std::tgamma(1.0 + 2.0 / shape_));
  }
  fourth_moment_mode_ =
      kind_ == NoiseKind::gaussian ? FourthMomentMode::closed_form : FourthMomentMode::monte_carlo;
}

NoiseModel NoiseModel::gaussian(const MatrixXd& C) {
  return {NoiseKind::gaussian, checked_covariance(C), 2.0};
}

NoiseModel NoiseModel::weibull_symmetric(const MatrixXd& C, double shape) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw ArgumentError("Weibull shape must be positive");
  }
  return {NoiseKind::weibull_symmetric, checked_covariance(C), shape};
}

NoiseModel NoiseModel::uniform_bounded(const MatrixXd& C) {
  return {NoiseKind::uniform_bounded, checked_covariance(C), 0.0};
}

NoiseModel NoiseModel::zero(int p) {
  if (p <= 0) {
    throw DimensionError("noise dimension must be positive");
  }
  return {NoiseKind::zero, MatrixXd::Zero(p, p), 0.0};
}

std::string NoiseModel::kind_name() const {
  switch (kind_) {
    case NoiseKind::gaussian:
      return "gaussian";
    case NoiseKind::weibull_symmetric:
      return "weibull_symmetric";
    case NoiseKind::uniform_bounded:
      return "uniform_bounded";
    case NoiseKind::zero:
      return "zero";
  }
  return "unknown";
}

double NoiseModel::lambda_min_C() const {
  if (kind_ == NoiseKind::zero) {
    throw DomainError("zero-noise mode has a singular covariance");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(C_, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

double NoiseModel::lambda_max_C() const {
  if (kind_ == NoiseKind::zero) {
    return 0.0;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(C_, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(eig.eigenvalues().size() - 1);
}

TailTriple NoiseModel::tail() const {
  if (tail_override_) {
    return *tail_override_;
  }
  TailTriple t;
  const VectorXd row_l1 = mixer_.cwiseAbs().rowwise().sum();
  const double m = row_l1.maxCoeff();
  int nnz = 0;
  for (Eigen::Index i = 0; i < mixer_.rows(); ++i) {
    nnz = std::max(nnz, static_cast<int>((mixer_.row(i).array() != 0.0).count()));
  }
  switch (kind_) {
    case NoiseKind::gaussian:
      // P(|N(0, s^2)| > y) <= 2 exp(-y^2 / (2 s^2)).
      t.b1 = 2.0;
      t.b2 = 2.0 * C_.diagonal().maxCoeff();
      t.alpha = 2.0;
      break;
    case NoiseKind::weibull_symmetric:
      t.alpha = shape_;
      t.b1 = static_cast<double>(nnz);
      t.b2 = std::pow(weibull_scale_ * m, shape_);
      break;
    case NoiseKind::uniform_bounded:
    case NoiseKind::zero:
      t.bounded = true;
      t.alpha = std::numeric_limits<double>::infinity();
      t.support = kSqrt3 * m;
      break;
  }
  return t;
}

double NoiseModel::base_kurtosis() const {
  switch (kind_) {
    case NoiseKind::gaussian:
      return 3.0;
    case NoiseKind::weibull_symmetric: {
      const double g2 = std::tgamma(1.0 + 2.0 / shape_);
      return std::tgamma(1.0 + 4.0 / shape_) / (g2 * g2);
    }
    case NoiseKind::uniform_bounded:
      return 9.0 / 5.0;
    case NoiseKind::zero:
      return 0.0;
  }
  return 0.0;
}

double NoiseModel::base_draw(Rng& rng) const {
  switch (kind_) {
    case NoiseKind::gaussian:
      return rng.normal();
    case NoiseKind::weibull_symmetric: {
      const double s = rng.sign();
      return s * weibull_scale_ * std::pow(-std::log(rng.uniform_open()), 1.0 / shape_);
    }
    case NoiseKind::uniform_bounded:
      return kSqrt3 * (2.0 * rng.uniform() - 1.0);
    case NoiseKind::zero:
      return 0.0;
  }
  return 0.0;
}

VectorXd NoiseModel::sample(Rng& rng) const {
  VectorXd out(dim());
  VectorXd scratch(dim());
  sample_into(rng, out, scratch);
  return out;
}

void NoiseModel::sample_into(Rng& rng, VectorXd& out, VectorXd& scratch) const {
  const int p = dim();
  if (kind_ == NoiseKind::zero) {
    out.setZero(p);
    return;
  }
  scratch.resize(p);
  for (int i = 0; i < p; ++i) {
    scratch(i) = base_draw(rng);
  }
  out.noalias() = mixer_.triangularView<Eigen::Lower>() * scratch;
}

QuadraticVariance quadratic_form_variance(const NoiseModel& noise, const MatrixXd& K,
                                          FourthMomentMode mode, Rng* rng, long draws) {
  if (K.rows() != noise.dim() || K.cols() != noise.dim()) {
    throw DimensionError("K must match the noise dimension");
  }
  QuadraticVariance result;
  result.mode = mode;
  if (mode == FourthMomentMode::closed_form) {
    const MatrixXd G = noise.mixer().transpose() * K * noise.mixer();
    const MatrixXd Gs = 0.5 * (G + G.transpose());
    result.value = 2.0 * Gs.squaredNorm() + (noise.base_kurtosis() - 3.0) * Gs.diagonal().squaredNorm();
    return result;
  }
  if (rng == nullptr) {
    throw ArgumentError("Monte Carlo fourth moment needs a generator");
  }
  if (draws < 2) {
    throw ArgumentError("Monte Carlo fourth moment needs at least two draws");
  }
  // Two passes: values first, then central moments, to keep the estimate stable.
  std::vector<double> values(static_cast<std::size_t>(draws));
  VectorXd w(noise.dim());
  VectorXd z(noise.dim());
  double mean = 0.0;
  for (long k = 0; k < draws; ++k) {
    noise.sample_into(*rng, w, z);
    values[static_cast<std::size_t>(k)] = w.dot(K * w);
    mean += values[static_cast<std::size_t>(k)];
  }
  mean /= static_cast<double>(draws);
  double m2 = 0.0;
  double m4 = 0.0;
  for (double v : values) {
    const double d = (v - mean) * (v - mean);
    m2 += d;
    m4 += d * d;
  }
  const double n = static_cast<double>(draws);
  result.value = m2 / (n - 1.0);
  const double central2 = m2 / n;
  result.standard_error = std::sqrt(std::max(0.0, m4 / n - central2 * central2) / n);
  return result;
}

}  // namespace ofulq
