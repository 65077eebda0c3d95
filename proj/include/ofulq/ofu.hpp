#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ofulq/confidence.hpp"
#include "ofulq/noise.hpp"
#include "ofulq/riccati.hpp"
#include "ofulq/simulate.hpp"

namespace ofulq {

/// Episode end times tau_i = tau_{i-1} + gamma^{i/q} (N_i + 1), tau_0 = 0.
struct EpisodeSchedule {
  double gamma = 2.0;
  int q = 1;
  std::vector<double> taus;       // tau_1, tau_2, ...
  std::vector<long> boundaries;   // ceil(tau_i)
  std::vector<long> sample_sizes; // N_i after the running maximum
};

/// Next episode end time. N is first raised to the previous N (running
/// maximum) so that tau_i - tau_{i-1} >= gamma^{(i-1)/q} tau_1 holds.
double next_tau(double previous_tau, double gamma, int i, int q, long N);

/// Generates episodes until tau_i >= T. N_of_i receives the episode index
/// (starting at 1).
EpisodeSchedule schedule(double gamma, int q, const std::function<long(int)>& N_of_i, long T);

/// (q / log gamma) log(T (gamma^{1/q} - 1) / tau_1 + 1): an upper bound on the
/// number of episodes with tau_i <= T.
double episode_count_bound(double gamma, int q, double tau1, long T);

struct SelectOptions {
  /// Rejection budget for sampling from the region; 50 * samples when 0.
  long max_rejections = 0;
  /// Hit-and-run thinning used to top up when rejection sampling falls short.
  int thin = 3;
  /// Diagnostic mode: the true parameter, evaluated as a candidate if it
  /// lies in the region.
  std::optional<DynamicsParameter> injected;
  /// Additional known members tried as hit-and-run starting points.
  std::vector<MatrixXd> starts;
};

struct Selection {
  DynamicsParameter theta;
  RiccatiSolution solution;
  double J = 0.0;
  int evaluated = 0;        // stabilizable candidates
  int skipped = 0;          // non-stabilizable candidates
  double acceptance_rate = 0.0;
  bool incumbent_kept = false;
  bool injected_evaluated = false;
  bool injected_selected = false;
  std::vector<DynamicsParameter> members;  // every feasible candidate, in evaluation order
  std::vector<double> member_costs;        // J*, NaN where not stabilizable
};

/// Approximate arg min of J*(theta) = tr(K(theta) C) over the region.
///
/// Candidates are the incumbent (if still feasible), the injected parameter
/// (if any and feasible) and `samples` draws from the region. A candidate
/// replaces the current best only if its cost is lower by more than
/// `tolerance`, so ties go to the earliest candidate. Throws SelectionFailure
/// when no feasible stabilizable candidate exists.
Selection ofu_select(const ParameterRegion& region, const CostPair& cost, const MatrixXd& C, int samples,
                     double tolerance, const std::optional<DynamicsParameter>& incumbent, Rng& rng,
                     const SelectOptions& options = {});

struct AlgorithmConfig {
  double delta = 0.05;
  double gamma = 2.0;
  double scale = 1.0;  // multiplies sample sizes
  /// Multiplies confidence radii; equal to `scale` when unset.
  std::optional<double> radius_scale;
  int samples = 50;
  double tolerance = 0.0;
  bool inject_true_theta = false;
  long max_rejections = 0;
  RunOptions run;
};

struct EpisodeRecord {
  int index = 0;
  long start = 0;  // first step of the episode
  long end = 0;    // ceil(tau_i), exclusive
  double tau = 0.0;
  MatrixXd theta_tilde;  // stacked [A, B]
  MatrixXd gain;
  double J_tilde = 0.0;
  long N = 0;
  long n = 0;  // transitions used in the fit
  double zeta = 0.0;
  double D_norm = 0.0;
  double radius = 0.0;
  double lambda_min_V = 0.0;
  double acceptance_rate = 0.0;
  int candidates = 0;
  bool selection_failed = false;
  bool sample_size_overflow = false;
  bool rank_deficient = false;
  bool ellipsoid_added = false;
  // Diagnostics that use the true parameter; never fed back to the algorithm.
  bool theta0_in_region = false;  // theta0 in Theta_{i-1} at selection time
  bool theta0_covered = false;    // theta0 in Gamma_i
  double J_theta0 = 0.0;
  double true_closed_loop_radius = 0.0;  // spectral radius of theta0 [I; L(theta_tilde)]
};

struct OfuRun {
  RunRecord record;
  std::vector<EpisodeRecord> episodes;
  std::vector<ConfidenceEllipsoid> ellipsoids;
};

/// Episodic optimism-based regulation. Noise is drawn from
/// Rng::stream(seed, 0), the same stream run_policy uses, and parameter
/// sampling from Rng::stream(seed, 1).
OfuRun run_algorithm1(const DynamicsParameter& theta0, const CostPair& cost, const NoiseModel& noise,
                      const ParameterRegion& theta0_set, const AlgorithmConfig& config, long T,
                      const VectorXd& x0, std::uint64_t seed);

}  // namespace ofulq
