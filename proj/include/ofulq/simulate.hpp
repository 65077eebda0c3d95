#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ofulq/lqmodel.hpp"
#include "ofulq/noise.hpp"
#include "ofulq/rng.hpp"

namespace ofulq {

/// One closed-loop trajectory.
///
/// costs[k], regret[k] and episodes[k] refer to time t = k + 1, so that
/// regret[k] = sum_{s <= k} costs[s] - (k + 1) J*.
struct RunRecord {
  std::vector<VectorXd> states;  // x(0..T), empty if not kept
  std::vector<VectorXd> inputs;  // u(0..T-1), empty if not kept
  std::vector<double> costs;
  std::vector<double> regret;
  std::vector<int> episodes;
  double J_star = 0.0;
  std::uint64_t seed = 0;

  long horizon() const { return static_cast<long>(costs.size()); }
};

struct RunOptions {
  bool keep_states = true;
  bool keep_inputs = true;
  double blowup_factor = 1e9;
};

/// Feedback policy driving the trajectory engine.
class Controller {
 public:
  virtual ~Controller() = default;
  /// Input at time t given x(t).
  virtual void act(long t, const VectorXd& x, VectorXd& u) = 0;
  /// Called once x(t+1) is known.
  virtual void observe(long /*t*/, const VectorXd& /*x*/, const VectorXd& /*u*/, const VectorXd& /*x_next*/) {}
  /// Episode label recorded for the cost at time t.
  virtual int episode(long /*t*/) const { return 0; }
};

/// x(t+1) = A x + B u + w.
VectorXd step(const DynamicsParameter& theta0, const VectorXd& x, const VectorXd& u, const VectorXd& w);

/// Runs the engine for T steps with noise drawn from `noise_rng`.
/// Costs are c_t = x(t)'Qx(t) + u(t)'Ru(t) for t = 1..T. Throws
/// SimulationAbort when ||x(t)||_2 > blowup_factor (1 + ||x(0)||_2).
RunRecord simulate(const DynamicsParameter& theta0, const CostPair& cost, const NoiseModel& noise,
                   Controller& controller, long T, const VectorXd& x0, Rng& noise_rng, double J_star,
                   const RunOptions& options = {});

struct FixedFeedback {
  MatrixXd L;
};

/// u = L(theta0) x.
struct OptimalPolicy {};

/// Certainty-equivalence baseline: u = L(theta_hat) x with theta_hat the
/// ridge-regularized least-squares estimate of [A, B] from (x, u) regressors.
struct CertaintyEquivalence {
  MatrixXd initial_gain;  // used before the first estimate and as fallback
  long warmup = 0;        // steps before the first estimate
  long update_period = 1;
  double ridge = 1e-6;
};

using Policy = std::variant<FixedFeedback, OptimalPolicy, CertaintyEquivalence>;

std::string policy_name(const Policy& policy);

/// Noise is drawn from Rng::stream(seed, 0).
RunRecord run_policy(const DynamicsParameter& theta0, const CostPair& cost, const NoiseModel& noise,
                     const Policy& policy, long T, const VectorXd& x0, std::uint64_t seed,
                     const RunOptions& options = {});

/// Regularized least-squares estimate of [A, B] from recorded transitions:
/// (sum x(t+1) z(t)') (sum z(t) z(t)' + ridge I)^{-1} with z = [x; u].
DynamicsParameter certainty_equivalence_estimate(const std::vector<VectorXd>& states,
                                                 const std::vector<VectorXd>& inputs,
                                                 const std::vector<VectorXd>& next_states, double ridge = 1e-6);

/// Controller state for the certainty-equivalence baseline.
class CertaintyEquivalenceController : public Controller {
 public:
  CertaintyEquivalenceController(const CostPair& cost, CertaintyEquivalence options, int p, int r);

  void act(long t, const VectorXd& x, VectorXd& u) override;
  void observe(long t, const VectorXd& x, const VectorXd& u, const VectorXd& x_next) override;

  const MatrixXd& gain() const { return gain_; }
  std::optional<DynamicsParameter> estimate() const;
  int updates() const { return updates_; }

 private:
  const CostPair& cost_;
  CertaintyEquivalence options_;
  int p_;
  MatrixXd gain_;
  MatrixXd gram_;   // sum z z'
  MatrixXd cross_;  // sum x(t+1) z'
  VectorXd z_;
  long observed_ = 0;
  int updates_ = 0;
};

/// u = L x with a constant gain.
class FixedGainController : public Controller {
 public:
  explicit FixedGainController(MatrixXd L) : L_(std::move(L)) {}
  void act(long, const VectorXd& x, VectorXd& u) override { u.noalias() = L_ * x; }

 private:
  MatrixXd L_;
};

}  // namespace ofulq
