#pragma once

#include <optional>

#include "ofulq/lqmodel.hpp"
#include "ofulq/noise.hpp"
#include "ofulq/rng.hpp"

namespace ofulq {

struct DareOptions {
  /// Starting point of the value iteration; Q when empty.
  std::optional<MatrixXd> initial;
  double tolerance = 1e-12;
  long max_iterations = 100000;
  double divergence = 1e12;
};

struct RiccatiSolution {
  MatrixXd K;            // stabilizing DARE solution
  MatrixXd L;            // optimal gain, u = L x
  MatrixXd closed_loop;  // A + B L
  double residual = 0.0;
  long iterations = 0;

  /// J* = tr(K C).
  double average_cost(const MatrixXd& C) const;
};

/// Value iteration K <- Q + A'KA - A'KB(B'KB + R)^{-1}B'KA.
/// Throws NotStabilizableError on divergence, on hitting the iteration cap,
/// or when the resulting closed loop is not stable.
RiccatiSolution solve_dare(const DynamicsParameter& theta, const CostPair& cost,
                           const DareOptions& options = {});

/// tr(K(theta) C).
double average_cost(const DynamicsParameter& theta, const CostPair& cost, const MatrixXd& C);

/// sum_{n >= 0} D^n C D'^n for stable D, by squaring.
MatrixXd lyapunov_series(const MatrixXd& D, const MatrixXd& C);

/// Long-run average cost of the fixed feedback u = L x:
/// tr((Q + L'RL) sum_n D^n C D'^n) with D = A + B L.
double policy_average_cost(const DynamicsParameter& theta, const CostPair& cost,
                           const MatrixXd& C, const MatrixXd& L);

struct CltVariance {
  double sigma2 = 0.0;
  double series_term = 0.0;   // 4 tr(K C K sum_{n>=1} D^n C D'^n)
  double quartic_term = 0.0;  // Var[w'Kw]
  double quartic_standard_error = 0.0;
  FourthMomentMode mode = FourthMomentMode::closed_form;
};

/// Asymptotic variance of T^{-1/2} R(T) under the optimal policy.
/// The quartic term uses `mode` if given, else the noise model's default.
/// The Monte Carlo route needs `rng`.
CltVariance clt_variance(const DynamicsParameter& theta, const CostPair& cost, const NoiseModel& noise,
                         std::optional<FourthMomentMode> mode = std::nullopt, Rng* rng = nullptr,
                         long draws = 1'000'000);

struct LipschitzProbe {
  double estimate = 0.0;
  int evaluated = 0;
  int skipped = 0;  // perturbations that were not stabilizable
};

/// max ||K(theta) - K(theta')||_2 / ||theta - theta'||_2 over perturbations
/// drawn uniformly in direction and scaled to operator norm `radius`.
LipschitzProbe lipschitz_probe(const DynamicsParameter& theta, const CostPair& cost, double radius,
                               int samples, Rng& rng);

}  // namespace ofulq
