#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

#include "ofulq/rng.hpp"

namespace ofulq {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class NoiseKind { gaussian, weibull_symmetric, uniform_bounded, zero };

enum class FourthMomentMode { closed_form, monte_carlo };

/// Coordinate tail certificate P(|w_i| > y) <= b1 exp(-y^alpha / b2).
/// Bounded laws set `bounded` and report the coordinate support radius instead.
struct TailTriple {
  double b1 = 1.0;
  double b2 = 1.0;
  double alpha = 2.0;
  bool bounded = false;
  double support = 0.0;
};

/// Noise w = M z with M the lower Cholesky factor of C and z i.i.d. with
/// mean zero and unit variance.
///
/// Tail triples for correlated coordinates come from a union bound over the
/// mixing weights: if |sum_j M_ij z_j| > y then |z_j| > y / m_i for some j
/// with M_ij != 0, where m_i = sum_j |M_ij|. Hence a base law with
/// P(|z| > y) <= c exp(-y^a / d) gives b1 = c * nnz_i and b2 = d * m_i^a.
/// Gaussian coordinates use the exact variance C_ii instead.
class NoiseModel {
 public:
  static NoiseModel gaussian(const MatrixXd& C);
  /// sign * s * Weibull(shape), with s chosen for unit variance.
  static NoiseModel weibull_symmetric(const MatrixXd& C, double shape);
  /// Uniform on [-sqrt(3), sqrt(3)] per base coordinate.
  static NoiseModel uniform_bounded(const MatrixXd& C);
  /// All-zero noise of dimension p, for deterministic tests only.
  static NoiseModel zero(int p);

  NoiseKind kind() const { return kind_; }
  std::string kind_name() const;
  int dim() const { return static_cast<int>(C_.rows()); }
  const MatrixXd& C() const { return C_; }
  const MatrixXd& mixer() const { return mixer_; }
  double shape() const { return shape_; }

  /// Smallest eigenvalue of C. Throws DomainError for the zero model.
  double lambda_min_C() const;
  double lambda_max_C() const;

  TailTriple tail() const;
  void set_tail_override(const TailTriple& tail) { tail_override_ = tail; }

  /// E[z^4] of the base law.
  double base_kurtosis() const;
  FourthMomentMode fourth_moment_mode() const { return fourth_moment_mode_; }
  void set_fourth_moment_mode(FourthMomentMode mode) { fourth_moment_mode_ = mode; }

  double base_draw(Rng& rng) const;
  VectorXd sample(Rng& rng) const;
  /// Writes one draw into `out`, reusing `scratch` for z.
  void sample_into(Rng& rng, VectorXd& out, VectorXd& scratch) const;

 private:
  NoiseModel(NoiseKind kind, MatrixXd C, double shape);

  NoiseKind kind_;
  MatrixXd C_;
  MatrixXd mixer_;
  double shape_ = 0.0;
  double weibull_scale_ = 1.0;
  std::optional<TailTriple> tail_override_;
  FourthMomentMode fourth_moment_mode_ = FourthMomentMode::closed_form;
};

/// Var[w'Kw] for a single noise draw.
struct QuadraticVariance {
  double value = 0.0;
  double standard_error = 0.0;  // zero for the closed form
  FourthMomentMode mode = FourthMomentMode::closed_form;
};

/// Closed form 2||G||_F^2 + (kappa - 3) sum_i G_ii^2 with G = M'KM, or a Monte
/// Carlo estimate over `draws` samples when mode is monte_carlo.
QuadraticVariance quadratic_form_variance(const NoiseModel& noise, const MatrixXd& K,
                                          FourthMomentMode mode, Rng* rng = nullptr,
                                          long draws = 1'000'000);

}  // namespace ofulq
