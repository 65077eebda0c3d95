#include "ofulq/simulate.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "ofulq/errors.hpp"
#include "ofulq/riccati.hpp"

namespace ofulq {

VectorXd step(const DynamicsParameter& theta0, const VectorXd& x, const VectorXd& u, const VectorXd& w) {
  if (x.size() != theta0.p() || w.size() != theta0.p() || u.size() != theta0.r()) {
    throw DimensionError("step: state, input or noise has the wrong size");
  }
  return theta0.A() * x + theta0.B() * u + w;
}

RunRecord simulate(const DynamicsParameter& theta0, const CostPair& cost, const NoiseModel& noise,
                   Controller& controller, long T, const VectorXd& x0, Rng& noise_rng, double J_star,
                   const RunOptions& options) {
  const int p = theta0.p();
  const int r = theta0.r();
  if (x0.size() != p || noise.dim() != p) {
    throw DimensionError("initial state and noise must have dimension p");
  }
  if (T < 0) {
    throw ArgumentError("horizon must be nonnegative");
  }
  RunRecord rec;
  rec.J_star = J_star;
  rec.costs.reserve(static_cast<std::size_t>(T));
  rec.regret.reserve(static_cast<std::size_t>(T));
  rec.episodes.reserve(static_cast<std::size_t>(T));
  if (options.keep_states) {
    rec.states.reserve(static_cast<std::size_t>(T + 1));
    rec.states.push_back(x0);
  }
  if (options.keep_inputs) {
    rec.inputs.reserve(static_cast<std::size_t>(T));
  }

  const double limit = options.blowup_factor * (1.0 + x0.norm());
  const MatrixXd& A = theta0.A();
  const MatrixXd& B = theta0.B();
  const MatrixXd& Q = cost.Q();
  const MatrixXd& R = cost.R();
  VectorXd x = x0;
  VectorXd x_next(p);
  VectorXd u(r);
  VectorXd w(p);
  VectorXd scratch(p);
  double cumulative = 0.0;
  for (long t = 0; t <= T; ++t) {
    controller.act(t, x, u);
    if (u.size() != r) {
      throw DimensionError("controller returned an input of the wrong size");
    }
    if (t >= 1) {
      const double c = x.dot(Q * x) + u.dot(R * u);
      cumulative += c;
      rec.costs.push_back(c);
      rec.regret.push_back(cumulative - static_cast<double>(t) * J_star);
      rec.episodes.push_back(controller.episode(t));
    }
    if (t == T) {
      break;
    }
    noise.sample_into(noise_rng, w, scratch);
    x_next.noalias() = A * x;
    x_next.noalias() += B * u;
    x_next += w;
    controller.observe(t, x, u, x_next);
    if (options.keep_inputs) {
      rec.inputs.push_back(u);
    }
    x.swap(x_next);
    const double norm = x.norm();
    if (!(norm <= limit)) {
      throw SimulationAbort("state norm " + std::to_string(norm) + " exceeded the blow-up guard at step " +
                                std::to_string(t + 1),
                            static_cast<std::size_t>(t + 1), norm);
    }
    if (options.keep_states) {
      rec.states.push_back(x);
    }
  }
  return rec;
}

std::string policy_name(const Policy& policy) {
  struct Visitor {
    std::string operator()(const FixedFeedback&) const { return "fixed"; }
    std::string operator()(const OptimalPolicy&) const { return "optimal"; }
    std::string operator()(const CertaintyEquivalence&) const { return "ce"; }
  };
  return std::visit(Visitor{}, policy);
}

RunRecord run_policy(const DynamicsParameter& theta0, const CostPair& cost, const NoiseModel& noise,
                     const Policy& policy, long T, const VectorXd& x0, std::uint64_t seed,
                     const RunOptions& options) {
  double J_star = std::numeric_limits<double>::quiet_NaN();
  std::optional<RiccatiSolution> optimal;
  try {
    optimal = solve_dare(theta0, cost);
    J_star = optimal->average_cost(noise.C());
  } catch (const NotStabilizableError&) {
    if (std::holds_alternative<OptimalPolicy>(policy)) {
      throw;
    }
  }

  Rng noise_rng = Rng::stream(seed, 0);
  RunRecord rec;
  if (const auto* fixed = std::get_if<FixedFeedback>(&policy)) {
    if (fixed->L.rows() != theta0.r() || fixed->L.cols() != theta0.p()) {
      throw DimensionError("fixed feedback gain must be r x p");
    }
    FixedGainController controller(fixed->L);
    rec = simulate(theta0, cost, noise, controller, T, x0, noise_rng, J_star, options);
  } else if (std::holds_alternative<OptimalPolicy>(policy)) {
    FixedGainController controller(optimal->L);
    rec = simulate(theta0, cost, noise, controller, T, x0, noise_rng, J_star, options);
  } else {
    const auto& ce = std::get<CertaintyEquivalence>(policy);
    CertaintyEquivalenceController controller(cost, ce, theta0.p(), theta0.r());
    rec = simulate(theta0, cost, noise, controller, T, x0, noise_rng, J_star, options);
  }
  rec.seed = seed;
  return rec;
}

namespace {

DynamicsParameter solve_estimate(const MatrixXd& gram, const MatrixXd& cross, double ridge, int p) {
  const auto q = gram.rows();
  const MatrixXd regularized = gram + ridge * MatrixXd::Identity(q, q);
  Eigen::LDLT<MatrixXd> ldlt(regularized);
  if (ldlt.info() != Eigen::Success) {
    throw NumericalError("regressor Gram matrix could not be factorized");
  }
  const MatrixXd theta = ldlt.solve(cross.transpose()).transpose();
  return DynamicsParameter::from_stacked(theta, p);
}

}  // namespace

DynamicsParameter certainty_equivalence_estimate(const std::vector<VectorXd>& states,
                                                 const std::vector<VectorXd>& inputs,
                                                 const std::vector<VectorXd>& next_states, double ridge) {
  if (states.empty() || states.size() != inputs.size() || states.size() != next_states.size()) {
    throw ArgumentError("certainty_equivalence_estimate needs matching non-empty histories");
  }
  const auto p = states.front().size();
  const auto q = p + inputs.front().size();
  MatrixXd gram = MatrixXd::Zero(q, q);
  MatrixXd cross = MatrixXd::Zero(p, q);
  VectorXd z(q);
  for (std::size_t t = 0; t < states.size(); ++t) {
    z << states[t], inputs[t];
    gram.noalias() += z * z.transpose();
    cross.noalias() += next_states[t] * z.transpose();
  }
  return solve_estimate(gram, cross, ridge, static_cast<int>(p));
}

CertaintyEquivalenceController::CertaintyEquivalenceController(const CostPair& cost, CertaintyEquivalence options,
                                                               int p, int r)
    : cost_(cost),
      options_(std::move(options)),
      p_(p),
      gain_(options_.initial_gain),
      gram_(MatrixXd::Zero(p + r, p + r)),
      cross_(MatrixXd::Zero(p, p + r)),
      z_(p + r) {
  if (gain_.rows() != r || gain_.cols() != p) {
    throw DimensionError("initial stabilizer must be r x p");
  }
  if (options_.update_period < 1 || options_.warmup < 0 || !(options_.ridge >= 0.0)) {
    throw ArgumentError("certainty equivalence needs update_period >= 1, warmup >= 0, ridge >= 0");
  }
}

std::optional<DynamicsParameter> CertaintyEquivalenceController::estimate() const {
  if (observed_ == 0) {
    return std::nullopt;
  }
  return solve_estimate(gram_, cross_, options_.ridge, p_);
}

void CertaintyEquivalenceController::act(long t, const VectorXd& x, VectorXd& u) {
  if (t >= options_.warmup && observed_ > 0 && (t - options_.warmup) % options_.update_period == 0) {
    try {
      const DynamicsParameter theta_hat = solve_estimate(gram_, cross_, options_.ridge, p_);
      gain_ = solve_dare(theta_hat, cost_).L;
      ++updates_;
    } catch (const Error&) {
      // estimate not stabilizable or ill-posed: keep the previous gain
    }
  }
  u.noalias() = gain_ * x;
}

void CertaintyEquivalenceController::observe(long, const VectorXd& x, const VectorXd& u, const VectorXd& x_next) {
  z_ << x, u;
  gram_.noalias() += z_ * z_.transpose();
  cross_.noalias() += x_next * z_.transpose();
  ++observed_;
}

}  // namespace ofulq
