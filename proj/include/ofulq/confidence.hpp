#pragma once

#include <vector>

#include "ofulq/lqmodel.hpp"
#include "ofulq/rng.hpp"

namespace ofulq {

/// { theta : ||W^{1/2} (theta Ltilde - D_hat)'||_2^2 <= radius }.
class ConfidenceEllipsoid {
 public:
  /// `weight` must be symmetric PSD up to -1e-12 in its eigenvalues and
  /// `feedback_ext` must have the form [I_p; L].
  ConfidenceEllipsoid(MatrixXd center, MatrixXd weight, MatrixXd feedback_ext, double radius, int episode);

  const MatrixXd& center() const { return center_; }
  const MatrixXd& weight() const { return weight_; }
  const MatrixXd& weight_sqrt() const { return weight_sqrt_; }
  const MatrixXd& feedback_ext() const { return feedback_ext_; }
  double radius() const { return radius_; }
  int episode() const { return episode_; }

  /// ||W^{1/2} (theta Ltilde - D_hat)'||_2^2.
  double deviation(const MatrixXd& stacked_theta) const;
  bool contains(const MatrixXd& stacked_theta) const { return deviation(stacked_theta) <= radius_; }

 private:
  MatrixXd center_;
  MatrixXd weight_;
  MatrixXd weight_sqrt_;
  MatrixXd feedback_ext_;
  double radius_;
  int episode_;
};

/// Operator-norm ball around a center intersected with confidence ellipsoids.
class ParameterRegion {
 public:
  ParameterRegion(DynamicsParameter ball_center, double ball_radius);

  const DynamicsParameter& ball_center() const { return ball_center_; }
  double ball_radius() const { return ball_radius_; }
  const std::vector<ConfidenceEllipsoid>& ellipsoids() const { return ellipsoids_; }
  int p() const { return ball_center_.p(); }
  int q() const { return ball_center_.q(); }

  void add(ConfidenceEllipsoid ellipsoid);

  bool in_ball(const MatrixXd& stacked_theta) const;
  bool contains(const MatrixXd& stacked_theta) const;
  bool contains(const DynamicsParameter& theta) const { return contains(theta.stacked()); }

 private:
  DynamicsParameter ball_center_;
  MatrixXd center_stacked_;
  double ball_radius_;
  std::vector<ConfidenceEllipsoid> ellipsoids_;
};

/// Uniform draw from the operator-norm ball: uniform in the Frobenius ball of
/// radius ball_radius * sqrt(min(p, q)) (which contains it), rejected until
/// inside. Returned as a stacked p x q matrix.
MatrixXd sample_ball(const ParameterRegion& region, Rng& rng);

struct FeasibleSample {
  std::vector<DynamicsParameter> points;
  long draws = 0;
  long rejections = 0;
  double acceptance_rate = 0.0;
};

/// Rejection sampling of up to `count` members from the ball. Throws
/// EmptyRegionError if more than `max_rejections` draws are rejected before
/// the first acceptance.
FeasibleSample sample_feasible(const ParameterRegion& region, int count, Rng& rng, long max_rejections);

/// Hit-and-run walk inside the (convex) region from a feasible start; one
/// point is kept every `thin` moves.
std::vector<DynamicsParameter> hit_and_run(const ParameterRegion& region, const MatrixXd& start, int count,
                                           Rng& rng, int thin = 5);

}  // namespace ofulq
