#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ofulq/noise.hpp"

namespace ofulq {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Least-squares estimate of the closed-loop matrix from x(t+1) = D x(t) + w.
struct LeastSquaresFit {
  MatrixXd D_hat;
  MatrixXd V;      // sum_t x(t) x(t)'
  MatrixXd cross;  // sum_t x(t+1) x(t)'
  long n = 0;
  double lambda_min_V = 0.0;
};

/// Running sums for fit_closed_loop. Terms are added in call order, so an
/// incremental fit matches a batch fit over the same pairs exactly.
class GramAccumulator {
 public:
  explicit GramAccumulator(int p);

  void add(const VectorXd& x, const VectorXd& x_next);
  void clear();

  long count() const { return n_; }
  const MatrixXd& V() const { return V_; }
  const MatrixXd& cross() const { return cross_; }

  /// D_hat = cross (V + ridge I)^{-1}. With ridge = 0 a singular V raises
  /// RankDeficiencyError.
  LeastSquaresFit fit(double ridge = 0.0) const;

 private:
  MatrixXd V_;
  MatrixXd cross_;
  long n_ = 0;
};

/// Fit over consecutive pairs (states[t], states[t+1]).
LeastSquaresFit fit_closed_loop(const std::vector<VectorXd>& states, double ridge = 0.0);

struct NoiseBound {
  double value = 0.0;
  bool degenerate = false;  // b1 n p / delta <= 1, value forced to 0
};

/// b_n(delta) = (b2 log(b1 n p / delta))^{1/alpha}; the support radius for
/// bounded noise.
NoiseBound noise_bound(const TailTriple& tail, long n, int p, double delta);
NoiseBound noise_bound(const NoiseModel& noise, long n, int p, double delta);

/// beta = zeta (||x(0)||_inf + b_n).
double state_bound(double zeta, double x0_inf, double b_n);

/// r(n, delta) = 16 n p / ((n - 1) lambda_min(C)) * beta^2 * b_n^2 * log(2p / delta).
double prediction_radius(long n, int p, double lambda_min_C, double beta, double b_n, double delta);

struct SampleSizeInputs {
  double epsilon = 0.0;
  double delta = 0.0;
  TailTriple tail;
  double lambda_max_C = 0.0;
  double zeta = 1.0;
  double D_norm = 0.0;
  double x0_inf = 0.0;
  int p = 1;
  double scale = 1.0;  // multiplies every right-hand side
};

SampleSizeInputs sample_size_inputs(double epsilon, double delta, const NoiseModel& noise, double zeta,
                                    double D_norm, double x0_inf, int p, double scale = 1.0);

/// Index (1, 2 or 3) of the first of the three excitation inequalities that
/// fails at n, or 0 when all hold.
int sample_size_violation(const SampleSizeInputs& in, long n);

/// Smallest N such that the three inequalities hold for every n >= N.
/// Throws SampleSizeOverflow when no N <= 1e12 works.
long sample_size(const SampleSizeInputs& in);

}  // namespace ofulq
