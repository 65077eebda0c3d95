#include "ofulq/confidence.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "ofulq/errors.hpp"

namespace ofulq {

namespace {

constexpr double kNegativeEigenvalueFloor = -1e-12;

MatrixXd psd_sqrt(const MatrixXd& W) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (W + W.transpose()));
  if (eig.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition of the ellipsoid weight failed");
  }
  VectorXd values = eig.eigenvalues();
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < kNegativeEigenvalueFloor * scale) {
      throw DomainError("ellipsoid weight is not positive semidefinite");
    }
    values(i) = std::sqrt(std::max(values(i), 0.0));
  }
  return eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
}

MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  MatrixXd E(rows, cols);
  for (Eigen::Index i = 0; i < E.size(); ++i) {
    E.data()[i] = rng.normal();
  }
  return E;
}

}  // namespace

ConfidenceEllipsoid::ConfidenceEllipsoid(MatrixXd center, MatrixXd weight, MatrixXd feedback_ext, double radius,
                                         int episode)
    : center_(std::move(center)),
      weight_(std::move(weight)),
      feedback_ext_(std::move(feedback_ext)),
      radius_(radius),
      episode_(episode) {
  const auto p = center_.rows();
  if (center_.cols() != p || weight_.rows() != p || weight_.cols() != p || feedback_ext_.cols() != p ||
      feedback_ext_.rows() <= p) {
    throw DimensionError("ellipsoid blocks have inconsistent shapes");
  }
  if (!feedback_ext_.topRows(p).isIdentity(1e-12)) {
    throw DomainError("extended feedback must start with the identity block");
  }
  if (!(radius_ >= 0.0) || !std::isfinite(radius_)) {
    throw DomainError("ellipsoid radius must be finite and nonnegative");
  }
  weight_sqrt_ = psd_sqrt(weight_);
}

double ConfidenceEllipsoid::deviation(const MatrixXd& stacked_theta) const {
  if (stacked_theta.rows() != center_.rows() || stacked_theta.cols() != feedback_ext_.rows()) {
    throw DimensionError("parameter shape does not match the ellipsoid");
  }
  const MatrixXd diff = stacked_theta * feedback_ext_ - center_;
  const MatrixXd M = weight_sqrt_ * diff.transpose();
  return std::pow(operator_norm(M), 2);
}

ParameterRegion::ParameterRegion(DynamicsParameter ball_center, double ball_radius)
    : ball_center_(std::move(ball_center)), center_stacked_(ball_center_.stacked()), ball_radius_(ball_radius) {
  if (!(ball_radius_ >= 0.0) || !std::isfinite(ball_radius_)) {
    throw DomainError("ball radius must be finite and nonnegative");
  }
}

void ParameterRegion::add(ConfidenceEllipsoid ellipsoid) {
  if (ellipsoid.center().rows() != p() || ellipsoid.feedback_ext().rows() != q()) {
    throw DimensionError("ellipsoid does not match the region dimensions");
  }
  ellipsoids_.push_back(std::move(ellipsoid));
}

bool ParameterRegion::in_ball(const MatrixXd& stacked_theta) const {
  if (stacked_theta.rows() != p() || stacked_theta.cols() != q()) {
    throw DimensionError("parameter shape does not match the region");
  }
  return operator_norm(stacked_theta - center_stacked_) <= ball_radius_;
}

bool ParameterRegion::contains(const MatrixXd& stacked_theta) const {
  if (!in_ball(stacked_theta)) {
    return false;
  }
  return std::all_of(ellipsoids_.begin(), ellipsoids_.end(),
                     [&](const ConfidenceEllipsoid& e) { return e.contains(stacked_theta); });
}

MatrixXd sample_ball(const ParameterRegion& region, Rng& rng) {
  const MatrixXd center = region.ball_center().stacked();
  const double radius = region.ball_radius();
  if (radius == 0.0) {
    return center;
  }
  const auto dim = static_cast<double>(center.size());
  const double frobenius_radius = radius * std::sqrt(static_cast<double>(std::min(region.p(), region.q())));
  while (true) {
    MatrixXd E = gaussian_matrix(center.rows(), center.cols(), rng);
    E *= frobenius_radius * std::pow(rng.uniform(), 1.0 / dim) / E.norm();
    if (operator_norm(E) <= radius) {
      return center + E;
    }
  }
}

FeasibleSample sample_feasible(const ParameterRegion& region, int count, Rng& rng, long max_rejections) {
  if (count < 1) {
    throw ArgumentError("sample_feasible needs count >= 1");
  }
  FeasibleSample out;
  while (static_cast<int>(out.points.size()) < count && out.rejections <= max_rejections) {
    const MatrixXd theta = sample_ball(region, rng);
    ++out.draws;
    if (region.contains(theta)) {
      out.points.push_back(DynamicsParameter::from_stacked(theta, region.p()));
    } else {
      ++out.rejections;
    }
  }
  out.acceptance_rate = out.draws > 0 ? static_cast<double>(out.points.size()) / out.draws : 0.0;
  if (out.points.empty()) {
    throw EmptyRegionError("no feasible parameter found in " + std::to_string(out.draws) + " draws");
  }
  return out;
}

std::vector<DynamicsParameter> hit_and_run(const ParameterRegion& region, const MatrixXd& start, int count,
                                           Rng& rng, int thin) {
  if (!region.contains(start)) {
    throw DomainError("hit-and-run must start inside the region");
  }
  if (count < 0 || thin < 1) {
    throw ArgumentError("hit_and_run needs count >= 0 and thin >= 1");
  }
  std::vector<DynamicsParameter> out;
  if (region.ball_radius() == 0.0) {
    for (int k = 0; k < count; ++k) {
      out.push_back(DynamicsParameter::from_stacked(start, region.p()));
    }
    return out;
  }
  MatrixXd current = start;
  // Any chord lies within the ball, whose diameter is 2 * radius in operator norm.
  const double reach = 2.0 * region.ball_radius();
  auto boundary = [&](const MatrixXd& direction, double sign) {
    double inside = 0.0;
    double outside = reach / operator_norm(direction);
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (inside + outside);
      if (region.contains(current + sign * mid * direction)) {
        inside = mid;
      } else {
        outside = mid;
      }
    }
    return inside;
  };
  while (static_cast<int>(out.size()) < count) {
    for (int m = 0; m < thin; ++m) {
      const MatrixXd direction = gaussian_matrix(current.rows(), current.cols(), rng);
      const double forward = boundary(direction, 1.0);
      const double backward = boundary(direction, -1.0);
      const double s = -backward + (forward + backward) * rng.uniform();
      const MatrixXd proposal = current + s * direction;
      if (region.contains(proposal)) {
        current = proposal;
      }
    }
    out.push_back(DynamicsParameter::from_stacked(current, region.p()));
  }
  return out;
}

}  // namespace ofulq
