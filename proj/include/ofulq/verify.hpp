#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ofulq/confidence.hpp"
#include "ofulq/noise.hpp"
#include "ofulq/ofu.hpp"
#include "ofulq/riccati.hpp"

namespace ofulq {

enum class Claim { noise_bound_L4, covariance_floor_T1, prediction_C1, clt_L2, regret_scaling_T2 };

std::string claim_name(Claim claim);

struct BoundCheck {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

/// Outcome of one Monte Carlo verification.
///
/// For frequency claims the verdict requires failures / trials <= nominal +
/// 3 SE, with SE = sqrt(nominal (1 - nominal) / trials). Claims checked by
/// summary statistics (CLT, regret scaling) report their checks in `checks`;
/// the verdict also requires every check to pass.
struct BoundReport {
  Claim claim = Claim::noise_bound_L4;
  long trials = 0;
  long failures = 0;
  double nominal_failure_mass = 0.0;
  double empirical_rate = 0.0;
  double standard_error = 0.0;
  bool verdict = false;
  std::vector<BoundCheck> checks;
  std::map<std::string, double> metadata;
  std::map<std::string, std::string> labels;
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  int threads = 1;
  /// Multiplies the certified bound (noise bound, prediction radius, sigma^2,
  /// slope window) and divides the covariance floor. Values far below 1 are a
  /// deliberate violation used to check that the harness can fail.
  double bound_factor = 1.0;
};

/// Failure: some coordinate of n draws exceeds b_n(delta). Nominal mass delta.
BoundReport verify_noise_bound(const NoiseModel& noise, long n, int p, double delta, long trials,
                               const VerifyOptions& options = {});

/// max_t ||x(t)||_2 <= zeta(D) (||x(0)||_inf + c) for x(t+1) = D x(t) + w with
/// ||w||_inf <= c. Each of `runs` runs draws w uniformly from the sup-norm ball
/// of radius c. Deterministic guarantee, so nominal mass 0.
BoundReport verify_state_norm(const MatrixXd& D, double c, const VectorXd& x0, long steps, long runs,
                              const VerifyOptions& options = {});

struct CovarianceFloorOptions {
  /// Sample size; computed from the excitation inequalities at scale 1 when 0.
  long n = 0;
  VectorXd x0;  // zero when empty
  /// Horizon of the limit check n^{-1} V_n -> sum D^i C D'^i; 0 disables it.
  long limit_n = 100000;
  double limit_tolerance = 0.05;
};

/// Failure: lambda_min(V_{n+1}) < n (lambda_min(C) - epsilon). Nominal mass 2 delta.
BoundReport verify_covariance_floor(const DynamicsParameter& theta0, const MatrixXd& L, const NoiseModel& noise,
                                    double epsilon, double delta, long trials, const VerifyOptions& options = {},
                                    const CovarianceFloorOptions& floor = {});

struct PredictionOptions {
  long n = 0;  // N(lambda_min(C)/2, delta) + 1 when 0
  VectorXd x0;
  double radius_factor = 1.0;  // values below 1 are a deliberate violation
};

/// Failure: ||V_n^{1/2}(D_hat - D)'||_2^2 > r(n, delta). Nominal mass 3 delta.
BoundReport verify_prediction(const DynamicsParameter& theta0, const MatrixXd& L, const NoiseModel& noise,
                              double delta, long trials, const VerifyOptions& options = {},
                              const PredictionOptions& prediction = {});

/// Distribution of T^{-1/2} R(T) under the optimal policy versus N(0, sigma^2).
BoundReport verify_clt(const DynamicsParameter& theta0, const CostPair& cost, const NoiseModel& noise, long T,
                       long replications, const VerifyOptions& options = {});

struct RegretScalingConfig {
  DynamicsParameter theta0;
  CostPair cost;
  NoiseModel noise;
  ParameterRegion theta0_set;
  AlgorithmConfig algorithm;
  std::vector<long> T_grid;
  int seeds = 50;
  VectorXd x0;
  bool optimal_policy = false;  // diagnostic anchor: run the optimal policy instead
  double slope_low = 0.35;
  double slope_high = 0.70;
  double ratio_slack = 0.20;
};

/// Slope of log median |R(T)| against log T, and the normalized ratio
/// median |R(T)| / (sqrt(T) (1 + log T)^2) over the top half of the grid.
/// Each seed is run once to max(T_grid) and read at the grid points.
BoundReport verify_regret_scaling(const RegretScalingConfig& config, const VerifyOptions& options = {});

/// With the true parameter injected: optimism J*(theta_tilde_i) <= J*(theta0)
/// at every episode whose region contained theta0, and stabilization of theta0
/// by every gain after the first covered episode. Rate of runs meeting both.
struct OptimismSummary {
  long runs = 0;
  long good_runs = 0;
  long covered_episodes = 0;
  long optimism_violations = 0;
  long stabilization_violations = 0;
};

OptimismSummary check_optimism(const DynamicsParameter& theta0, const CostPair& cost, const NoiseModel& noise,
                               const ParameterRegion& theta0_set, AlgorithmConfig config, long T, long runs,
                               const VerifyOptions& options = {});

/// Finalizes rate, standard error and verdict from trials, failures, nominal
/// mass and checks.
void finalize_report(BoundReport& report);

}  // namespace ofulq
