#include "ofulq/identify.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "ofulq/errors.hpp"

namespace ofulq {

namespace {

constexpr long kMaxSampleSize = 1'000'000'000'000L;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw ArgumentError("delta must lie in (0, 1)");
  }
}

}  // namespace

GramAccumulator::GramAccumulator(int p) : V_(MatrixXd::Zero(p, p)), cross_(MatrixXd::Zero(p, p)) {}

void GramAccumulator::add(const VectorXd& x, const VectorXd& x_next) {
  if (x.size() != V_.rows() || x_next.size() != V_.rows()) {
    throw DimensionError("state dimension does not match the accumulator");
  }
  V_.noalias() += x * x.transpose();
  cross_.noalias() += x_next * x.transpose();
  ++n_;
}

void GramAccumulator::clear() {
  V_.setZero();
  cross_.setZero();
  n_ = 0;
}

LeastSquaresFit GramAccumulator::fit(double ridge) const {
  if (!(ridge >= 0.0)) {
    throw ArgumentError("ridge must be nonnegative");
  }
  const int p = static_cast<int>(V_.rows());
  LeastSquaresFit out;
  out.V = V_;
  out.cross = cross_;
  out.n = n_;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(V_, Eigen::EigenvaluesOnly);
  out.lambda_min_V = eig.eigenvalues()(0);
  const double lambda_max = eig.eigenvalues()(p - 1);
  if (ridge == 0.0 && (n_ == 0 || out.lambda_min_V <= 1e-13 * std::max(lambda_max, 1e-300))) {
    throw RankDeficiencyError("empirical covariance is singular (lambda_min = " +
                                  std::to_string(out.lambda_min_V) + ")",
                              out.lambda_min_V);
  }
  const MatrixXd regularized = V_ + ridge * MatrixXd::Identity(p, p);
  Eigen::LDLT<MatrixXd> ldlt(regularized);
  out.D_hat = ldlt.solve(cross_.transpose()).transpose();
  return out;
}

LeastSquaresFit fit_closed_loop(const std::vector<VectorXd>& states, double ridge) {
  if (states.size() < 2) {
    throw ArgumentError("fit_closed_loop needs at least two states");
  }
  GramAccumulator acc(static_cast<int>(states.front().size()));
  for (std::size_t t = 0; t + 1 < states.size(); ++t) {
    acc.add(states[t], states[t + 1]);
  }
  return acc.fit(ridge);
}

NoiseBound noise_bound(const TailTriple& tail, long n, int p, double delta) {
  check_delta(delta);
  if (n < 1 || p < 1) {
    throw ArgumentError("noise_bound needs n >= 1 and p >= 1");
  }
  if (tail.bounded) {
    return {tail.support, false};
  }
  const double log_term = std::log(tail.b1 * static_cast<double>(n) * p / delta);
  if (log_term <= 0.0) {
    return {0.0, true};
  }
  return {std::pow(tail.b2 * log_term, 1.0 / tail.alpha), false};
}

NoiseBound noise_bound(const NoiseModel& noise, long n, int p, double delta) {
  return noise_bound(noise.tail(), n, p, delta);
}

double state_bound(double zeta, double x0_inf, double b_n) { return zeta * (x0_inf + b_n); }

double prediction_radius(long n, int p, double lambda_min_C, double beta, double b_n, double delta) {
  if (n < 2) {
    throw ArgumentError("prediction_radius needs n >= 2");
  }
  check_delta(delta);
  if (!(lambda_min_C > 0.0)) {
    throw DomainError("prediction_radius needs lambda_min(C) > 0");
  }
  const double nd = static_cast<double>(n);
  return 16.0 * nd * p / ((nd - 1.0) * lambda_min_C) * beta * beta * b_n * b_n * std::log(2.0 * p / delta);
}

SampleSizeInputs sample_size_inputs(double epsilon, double delta, const NoiseModel& noise, double zeta,
                                    double D_norm, double x0_inf, int p, double scale) {
  SampleSizeInputs in;
  in.epsilon = epsilon;
  in.delta = delta;
  in.tail = noise.tail();
  in.lambda_max_C = noise.lambda_max_C();
  in.zeta = zeta;
  in.D_norm = D_norm;
  in.x0_inf = x0_inf;
  in.p = p;
  in.scale = scale;
  return in;
}

namespace {

struct Inequalities {
  std::array<double, 3> rhs{};
  const SampleSizeInputs* in = nullptr;

  explicit Inequalities(const SampleSizeInputs& inputs) : in(&inputs) {
    const double eps = inputs.epsilon;
    const double log4 = std::log(4.0 * inputs.p / inputs.delta);
    const double d2 = inputs.D_norm * inputs.D_norm;
    rhs[0] = inputs.scale * (18.0 * inputs.lambda_max_C + 2.0 * eps) / (eps * eps) * inputs.p * log4;
    rhs[1] = inputs.scale * 288.0 / (eps * eps) * inputs.p * d2 * log4;
    rhs[2] = inputs.scale * 6.0 / eps * (d2 + 1.0);
  }

  // Denominators h_k(n) of the left-hand sides n / h_k(n); each is
  // nondecreasing in n.
  std::array<double, 3> denominators(long n) const {
    const double b = noise_bound(in->tail, n, in->p, in->delta).value;
    const double beta = state_bound(in->zeta, in->x0_inf, b);
    return {b * b, beta * beta * b * b, beta * beta};
  }

  static double ratio(double n, double h) { return h > 0.0 ? n / h : kInf; }

  int violation(long n) const {
    const auto h = denominators(n);
    for (int k = 0; k < 3; ++k) {
      if (ratio(static_cast<double>(n), h[k]) < rhs[k]) {
        return k + 1;
      }
    }
    return 0;
  }

  // Largest failing n in [a, b], using n/h(n) in [a/h(b), b/h(a)] to prune.
  std::optional<long> last_failure(long a, long b) const {
    if (b - a < 64) {
      for (long n = b; n >= a; --n) {
        if (violation(n) != 0) {
          return n;
        }
      }
      return std::nullopt;
    }
    const auto hb = denominators(b);
    bool all_hold = true;
    for (int k = 0; k < 3; ++k) {
      if (ratio(static_cast<double>(a), hb[k]) < rhs[k]) {
        all_hold = false;
      }
    }
    if (all_hold) {
      return std::nullopt;
    }
    if (violation(b) != 0) {
      return b;
    }
    const long mid = a + (b - a) / 2;
    if (auto right = last_failure(mid + 1, b)) {
      return right;
    }
    return last_failure(a, mid);
  }
};

}  // namespace

int sample_size_violation(const SampleSizeInputs& in, long n) { return Inequalities(in).violation(n); }

long sample_size(const SampleSizeInputs& in) {
  check_delta(in.delta);
  if (!(in.epsilon > 0.0) || !(in.scale > 0.0) || in.p < 1 || !(in.zeta > 0.0) || in.D_norm < 0.0 ||
      in.x0_inf < 0.0) {
    throw ArgumentError("sample_size needs epsilon > 0, scale > 0, p >= 1, zeta > 0 and nonnegative norms");
  }
  const Inequalities ineq(in);

  // Past n0 every left-hand side is nondecreasing: the elasticity of
  // beta^2 b^2 is at most 4 / (alpha log(b1 n p / delta)).
  long n0 = 1;
  if (!in.tail.bounded) {
    const double target = std::exp(4.0 / in.tail.alpha) * in.delta / (in.tail.b1 * in.p);
    n0 = static_cast<long>(std::min(std::ceil(std::max(target, 1.0)), static_cast<double>(kMaxSampleSize)));
  }

  long hi = n0;
  int binding = ineq.violation(hi);
  while (binding != 0) {
    if (hi >= kMaxSampleSize) {
      static const char* names[] = {"", "n / b^2", "n / (beta^2 b^2)", "n / beta^2"};
      throw SampleSizeOverflow(std::string("no sample size up to 1e12 satisfies inequality ") + names[binding],
                               names[binding]);
    }
    hi = std::min(hi * 2, kMaxSampleSize);
    binding = ineq.violation(hi);
  }
  if (hi == 1) {
    return 1;
  }
  const auto last = ineq.last_failure(1, hi - 1);
  return last ? *last + 1 : 1;
}

}  // namespace ofulq
