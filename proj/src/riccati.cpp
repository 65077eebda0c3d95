#include "ofulq/riccati.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "ofulq/errors.hpp"

namespace ofulq {

namespace {

struct RiccatiStep {
  MatrixXd next;
  MatrixXd gain;
};

RiccatiStep riccati_step(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R,
                         const MatrixXd& K) {
  const MatrixXd KB = K * B;
  const MatrixXd S = B.transpose() * KB + R;
  Eigen::LDLT<MatrixXd> ldlt(S);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw NumericalError("B'KB + R is not positive definite");
  }
  const MatrixXd gain = -ldlt.solve(KB.transpose() * A);
  RiccatiStep step;
  // A'KA + A'KB L = A'KA - A'KB S^{-1} B'KA
  step.next = Q + A.transpose() * K * A + A.transpose() * KB * gain;
  step.next = 0.5 * (step.next + step.next.transpose()).eval();
  step.gain = gain;
  return step;
}

}  // namespace

double RiccatiSolution::average_cost(const MatrixXd& C) const {
  if (C.rows() != K.rows() || C.cols() != K.cols()) {
    throw DimensionError("covariance must be p x p");
  }
  return (K * C).trace();
}

RiccatiSolution solve_dare(const DynamicsParameter& theta, const CostPair& cost, const DareOptions& options) {
  const MatrixXd& A = theta.A();
  const MatrixXd& B = theta.B();
  const MatrixXd& Q = cost.Q();
  const MatrixXd& R = cost.R();
  if (Q.rows() != theta.p() || R.rows() != theta.r()) {
    throw DimensionError("cost blocks do not match the system dimensions");
  }
  MatrixXd K = options.initial ? *options.initial : Q;
  if (K.rows() != theta.p() || K.cols() != theta.p()) {
    throw DimensionError("initial Riccati iterate must be p x p");
  }

  long k = 0;
  bool converged = false;
  for (; k < options.max_iterations; ++k) {
    RiccatiStep step = riccati_step(A, B, Q, R, K);
    const double k_norm = operator_norm(K);
    const double change = operator_norm(step.next - K);
    K = std::move(step.next);
    if (!K.allFinite() || operator_norm(K) > options.divergence) {
      throw NotStabilizableError("Riccati iteration diverged after " + std::to_string(k + 1) + " steps");
    }
    if (change <= options.tolerance * (1.0 + k_norm)) {
      converged = true;
      ++k;
      break;
    }
  }
  if (!converged) {
    throw NotStabilizableError("Riccati iteration hit the cap of " + std::to_string(options.max_iterations) +
                               " steps");
  }

  RiccatiStep final_step = riccati_step(A, B, Q, R, K);
  RiccatiSolution sol;
  sol.K = K;
  sol.L = final_step.gain;
  sol.closed_loop = A + B * sol.L;
  sol.residual = operator_norm(K - final_step.next);
  sol.iterations = k;
  const double rho = spectral_radius(sol.closed_loop);
  if (!(rho < 1.0)) {
    throw NotStabilizableError("Riccati closed loop has spectral radius " + std::to_string(rho));
  }
  return sol;
}

double average_cost(const DynamicsParameter& theta, const CostPair& cost, const MatrixXd& C) {
  return solve_dare(theta, cost).average_cost(C);
}

MatrixXd lyapunov_series(const MatrixXd& D, const MatrixXd& C) {
  if (D.rows() != D.cols() || C.rows() != D.rows() || C.cols() != D.cols()) {
    throw DimensionError("lyapunov_series needs square matrices of equal size");
  }
  const double rho = spectral_radius(D);
  if (!(rho < 1.0)) {
    throw InstabilityError("lyapunov_series needs a stable matrix (spectral radius " + std::to_string(rho) +
                           ")");
  }
  // After k rounds S = sum_{n < 2^k} D^n C D'^n and P = D^{2^k}.
  MatrixXd S = C;
  MatrixXd P = D;
  for (int round = 0; round < 64; ++round) {
    const MatrixXd increment = P * S * P.transpose();
    S += increment;
    if (increment.norm() < 1e-14 * std::max(S.norm(), 1e-300) || increment.norm() == 0.0) {
      return 0.5 * (S + S.transpose());
    }
    P = (P * P).eval();
  }
  throw NumericalError("Lyapunov series did not converge");
}

double policy_average_cost(const DynamicsParameter& theta, const CostPair& cost, const MatrixXd& C,
                           const MatrixXd& L) {
  const MatrixXd D = theta.closed_loop(L);
  const MatrixXd stage = cost.Q() + L.transpose() * cost.R() * L;
  return (stage * lyapunov_series(D, C)).trace();
}

CltVariance clt_variance(const DynamicsParameter& theta, const CostPair& cost, const NoiseModel& noise,
                         std::optional<FourthMomentMode> mode, Rng* rng, long draws) {
  if (noise.dim() != theta.p()) {
    throw DimensionError("noise dimension must equal p");
  }
  const RiccatiSolution sol = solve_dare(theta, cost);
  const MatrixXd& C = noise.C();
  const MatrixXd& D = sol.closed_loop;
  const MatrixXd tail = D * lyapunov_series(D, C) * D.transpose();  // sum_{n >= 1}
  CltVariance out;
  out.series_term = 4.0 * (sol.K * C * sol.K * tail).trace();
  const FourthMomentMode chosen = mode.value_or(noise.fourth_moment_mode());
  if (noise.kind() == NoiseKind::zero && chosen == FourthMomentMode::monte_carlo) {
    throw DomainError("zero-noise mode has no fourth moments to sample");
  }
  const QuadraticVariance quartic = quadratic_form_variance(noise, sol.K, chosen, rng, draws);
  out.quartic_term = quartic.value;
  out.quartic_standard_error = quartic.standard_error;
  out.mode = chosen;
  out.sigma2 = out.series_term + out.quartic_term;
  return out;
}

LipschitzProbe lipschitz_probe(const DynamicsParameter& theta, const CostPair& cost, double radius, int samples,
                               Rng& rng) {
  if (samples <= 0) {
    throw ArgumentError("lipschitz_probe needs at least one sample");
  }
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw ArgumentError("lipschitz_probe radius must be positive");
  }
  const RiccatiSolution base = solve_dare(theta, cost);
  const MatrixXd stacked = theta.stacked();
  LipschitzProbe probe;
  for (int s = 0; s < samples; ++s) {
    MatrixXd E(stacked.rows(), stacked.cols());
    for (Eigen::Index i = 0; i < E.size(); ++i) {
      E.data()[i] = rng.normal();
    }
    E *= radius / operator_norm(E);
    const auto perturbed = DynamicsParameter::from_stacked(stacked + E, theta.p());
    try {
      const RiccatiSolution other = solve_dare(perturbed, cost, {.initial = base.K});
      probe.estimate = std::max(probe.estimate, operator_norm(other.K - base.K) / radius);
      ++probe.evaluated;
    } catch (const NotStabilizableError&) {
      ++probe.skipped;
    }
  }
  if (probe.evaluated == 0) {
    throw DomainError("every perturbed parameter was non-stabilizable");
  }
  return probe;
}

}  // namespace ofulq
