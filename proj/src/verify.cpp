#include "ofulq/verify.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "ofulq/errors.hpp"
#include "ofulq/identify.hpp"
#include "ofulq/simulate.hpp"
#include "ofulq/stats.hpp"

namespace ofulq {

namespace {

void require_trials(long trials) {
  if (trials < 1) {
    throw ArgumentError("verification needs at least one trial");
  }
}

double lambda_min(const MatrixXd& V) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(V, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

VectorXd initial_state(const VectorXd& x0, int p) {
  if (x0.size() == 0) {
    return VectorXd::Zero(p);
  }
  if (x0.size() != p) {
    throw DimensionError("initial state must have dimension p");
  }
  return x0;
}

MatrixXd stable_closed_loop(const DynamicsParameter& theta0, const MatrixXd& L) {
  const MatrixXd D = theta0.closed_loop(L);
  const double rho = spectral_radius(D);
  if (!(rho < 1.0)) {
    throw InstabilityError("closed loop A + B L is not stable (spectral radius " + std::to_string(rho) + ")");
  }
  return D;
}

// Seed of the k-th independent run derived from a base seed.
std::uint64_t run_seed(std::uint64_t base, long k) { return Rng::stream(base, static_cast<std::uint64_t>(k)).next(); }

// x(0..n) of x(t+1) = D x(t) + w(t+1); returns the Gram sums.
struct Trajectory {
  MatrixXd V;      // sum_{t=0}^{n-1} x(t) x(t)'
  MatrixXd cross;  // sum_{t=0}^{n-1} x(t+1) x(t)'
  VectorXd last;   // x(n)
};

Trajectory run_closed_loop(const MatrixXd& D, const NoiseModel& noise, const VectorXd& x0, long n, Rng& rng) {
  const auto p = D.rows();
  Trajectory tr{MatrixXd::Zero(p, p), MatrixXd::Zero(p, p), x0};
  VectorXd x = x0;
  VectorXd next(p);
  VectorXd w(p);
  VectorXd z(p);
  for (long t = 0; t < n; ++t) {
    noise.sample_into(rng, w, z);
    next.noalias() = D * x;
    next += w;
    tr.V.noalias() += x * x.transpose();
    tr.cross.noalias() += next * x.transpose();
    x.swap(next);
  }
  tr.last = x;
  return tr;
}

}  // namespace

std::string claim_name(Claim claim) {
  switch (claim) {
    case Claim::noise_bound_L4:
      return "noise_bound_L4";
    case Claim::covariance_floor_T1:
      return "covariance_floor_T1";
    case Claim::prediction_C1:
      return "prediction_C1";
    case Claim::clt_L2:
      return "clt_L2";
    case Claim::regret_scaling_T2:
      return "regret_scaling_T2";
  }
  return "unknown";
}

void finalize_report(BoundReport& report) {
  report.empirical_rate = report.trials > 0 ? static_cast<double>(report.failures) / report.trials : 0.0;
  const double m = report.nominal_failure_mass;
  report.standard_error = report.trials > 0 ? std::sqrt(m * (1.0 - m) / report.trials) : 0.0;
  bool ok = report.empirical_rate <= m + 3.0 * report.standard_error;
  for (const auto& c : report.checks) {
    ok = ok && c.passed;
  }
  report.verdict = ok;
}

BoundReport verify_noise_bound(const NoiseModel& noise, long n, int p, double delta, long trials,
                               const VerifyOptions& options) {
  require_trials(trials);
  if (p != noise.dim()) {
    throw DimensionError("p must equal the noise dimension");
  }
  const double bound = options.bound_factor * noise_bound(noise, n, p, delta).value;
  std::vector<char> failed(static_cast<std::size_t>(trials), 0);
  parallel_for(trials, options.threads, [&](long k) {
    Rng rng = Rng::stream(options.seed, static_cast<std::uint64_t>(k));
    VectorXd w(p);
    VectorXd z(p);
    for (long t = 0; t < n; ++t) {
      noise.sample_into(rng, w, z);
      if (w.cwiseAbs().maxCoeff() > bound) {
        failed[static_cast<std::size_t>(k)] = 1;
        return;
      }
    }
  });
  BoundReport report;
  report.claim = Claim::noise_bound_L4;
  report.trials = trials;
  report.failures = std::count(failed.begin(), failed.end(), 1);
  report.nominal_failure_mass = delta;
  report.metadata = {{"n", static_cast<double>(n)}, {"p", p}, {"delta", delta}, {"b_n", bound},
                     {"seed", static_cast<double>(options.seed)}};
  report.labels = {{"noise", noise.kind_name()}};
  finalize_report(report);
  return report;
}

BoundReport verify_state_norm(const MatrixXd& D, double c, const VectorXd& x0, long steps, long runs,
                              const VerifyOptions& options) {
  require_trials(runs);
  const auto p = D.rows();
  if (x0.size() != p) {
    throw DimensionError("initial state must have dimension p");
  }
  const double zeta = jordan_constant(D).zeta;
  const double bound = zeta * (x0.cwiseAbs().maxCoeff() + c);
  std::vector<double> worst(static_cast<std::size_t>(runs), 0.0);
  parallel_for(runs, options.threads, [&](long k) {
    Rng rng = Rng::stream(options.seed, static_cast<std::uint64_t>(k));
    VectorXd x = x0;
    double m = x.norm();
    for (long t = 0; t < steps; ++t) {
      VectorXd w(p);
      for (Eigen::Index i = 0; i < p; ++i) {
        // Half of the coordinates sit on the boundary of the sup-norm ball.
        w(i) = rng.uniform() < 0.5 ? c * rng.sign() : c * (2.0 * rng.uniform() - 1.0);
      }
      x = D * x + w;
      m = std::max(m, x.norm());
    }
    worst[static_cast<std::size_t>(k)] = m;
  });
  BoundReport report;
  report.claim = Claim::noise_bound_L4;
  report.trials = runs;
  report.failures = std::count_if(worst.begin(), worst.end(), [&](double m) { return m > bound; });
  report.nominal_failure_mass = 0.0;
  const double max_norm = *std::max_element(worst.begin(), worst.end());
  report.checks.push_back({"max state norm <= zeta (||x0||_inf + c)", max_norm, bound, max_norm <= bound});
  report.metadata = {{"zeta", zeta}, {"c", c}, {"steps", static_cast<double>(steps)}};
  report.labels = {{"check", "state_norm"}};
  finalize_report(report);
  return report;
}

BoundReport verify_covariance_floor(const DynamicsParameter& theta0, const MatrixXd& L, const NoiseModel& noise,
                                    double epsilon, double delta, long trials, const VerifyOptions& options,
                                    const CovarianceFloorOptions& floor) {
  require_trials(trials);
  const int p = theta0.p();
  const MatrixXd D = stable_closed_loop(theta0, L);
  const VectorXd x0 = initial_state(floor.x0, p);
  const double lambda_C = noise.lambda_min_C();
  const double zeta = jordan_constant(D).zeta;
  long n = floor.n;
  if (n == 0) {
    n = sample_size(sample_size_inputs(epsilon, delta, noise, zeta, operator_norm(D), x0.cwiseAbs().maxCoeff(), p,
                                       1.0));
  }
  const double threshold = static_cast<double>(n) * (lambda_C - epsilon) / options.bound_factor;
  std::vector<char> failed(static_cast<std::size_t>(trials), 0);
  parallel_for(trials, options.threads, [&](long k) {
    Rng rng = Rng::stream(options.seed, static_cast<std::uint64_t>(k));
    const Trajectory tr = run_closed_loop(D, noise, x0, n, rng);
    const MatrixXd V = tr.V + tr.last * tr.last.transpose();  // V_{n+1} includes x(n)
    failed[static_cast<std::size_t>(k)] = lambda_min(V) < threshold ? 1 : 0;
  });
  BoundReport report;
  report.claim = Claim::covariance_floor_T1;
  report.trials = trials;
  report.failures = std::count(failed.begin(), failed.end(), 1);
  report.nominal_failure_mass = 2.0 * delta;
  if (floor.limit_n > 0) {
    Rng rng = Rng::stream(splitmix64(options.seed), 0);
    const Trajectory tr = run_closed_loop(D, noise, x0, floor.limit_n, rng);
    const MatrixXd limit = lyapunov_series(D, noise.C());
    const double rel = operator_norm(tr.V / static_cast<double>(floor.limit_n) - limit) / operator_norm(limit);
    report.checks.push_back({"relative error of V_n / n against sum D^i C D'^i", rel, floor.limit_tolerance,
                             rel < floor.limit_tolerance});
    report.metadata["limit_n"] = static_cast<double>(floor.limit_n);
  }
  report.metadata.insert({{"n", static_cast<double>(n)},
                          {"epsilon", epsilon},
                          {"delta", delta},
                          {"zeta", zeta},
                          {"floor", threshold},
                          {"seed", static_cast<double>(options.seed)}});
  report.labels = {{"noise", noise.kind_name()}};
  finalize_report(report);
  return report;
}

BoundReport verify_prediction(const DynamicsParameter& theta0, const MatrixXd& L, const NoiseModel& noise,
                              double delta, long trials, const VerifyOptions& options,
                              const PredictionOptions& prediction) {
  require_trials(trials);
  const int p = theta0.p();
  const double lambda_C = noise.lambda_min_C();  // rejects the zero-noise mode
  const MatrixXd D = stable_closed_loop(theta0, L);
  const VectorXd x0 = initial_state(prediction.x0, p);
  const double x0_inf = x0.cwiseAbs().maxCoeff();
  const double zeta = jordan_constant(D).zeta;
  long n = prediction.n;
  if (n == 0) {
    n = sample_size(sample_size_inputs(lambda_C / 2.0, delta, noise, zeta, operator_norm(D), x0_inf, p, 1.0)) + 1;
  }
  const double b = noise_bound(noise, n, p, delta).value;
  const double beta = state_bound(zeta, x0_inf, b);
  const double radius = options.bound_factor * prediction.radius_factor * prediction_radius(n, p, lambda_C, beta, b, delta);
  std::vector<double> deviation(static_cast<std::size_t>(trials), 0.0);
  parallel_for(trials, options.threads, [&](long k) {
    Rng rng = Rng::stream(options.seed, static_cast<std::uint64_t>(k));
    const Trajectory tr = run_closed_loop(D, noise, x0, n, rng);
    Eigen::LDLT<MatrixXd> ldlt(tr.V);
    const MatrixXd D_hat = ldlt.solve(tr.cross.transpose()).transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(tr.V);
    const MatrixXd root =
        eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
    deviation[static_cast<std::size_t>(k)] = std::pow(operator_norm(root * (D_hat - D).transpose()), 2);
  });
  BoundReport report;
  report.claim = Claim::prediction_C1;
  report.trials = trials;
  report.failures = std::count_if(deviation.begin(), deviation.end(), [&](double d) { return d > radius; });
  report.nominal_failure_mass = 3.0 * delta;
  report.metadata = {{"n", static_cast<double>(n)},
                     {"delta", delta},
                     {"radius", radius},
                     {"radius_factor", prediction.radius_factor},
                     {"max_deviation", *std::max_element(deviation.begin(), deviation.end())},
                     {"zeta", zeta},
                     {"seed", static_cast<double>(options.seed)}};
  report.labels = {{"noise", noise.kind_name()}};
  finalize_report(report);
  return report;
}

BoundReport verify_clt(const DynamicsParameter& theta0, const CostPair& cost, const NoiseModel& noise, long T,
                       long replications, const VerifyOptions& options) {
  if (replications < 30) {
    throw ArgumentError("verify_clt needs at least 30 replications");
  }
  if (T < 1) {
    throw ArgumentError("verify_clt needs T >= 1");
  }
  Rng moment_rng = Rng::stream(splitmix64(options.seed), 1);
  const CltVariance target = clt_variance(theta0, cost, noise, std::nullopt, &moment_rng);
  std::vector<double> z(static_cast<std::size_t>(replications), 0.0);
  const double root_T = std::sqrt(static_cast<double>(T));
  const VectorXd x0 = VectorXd::Zero(theta0.p());
  RunOptions run;
  run.keep_states = false;
  run.keep_inputs = false;
  parallel_for(replications, options.threads, [&](long k) {
    const RunRecord rec = run_policy(theta0, cost, noise, OptimalPolicy{}, T, x0, run_seed(options.seed, k), run);
    z[static_cast<std::size_t>(k)] = rec.regret.back() / root_T;
  });
  const double reps = static_cast<double>(replications);
  const double m = mean(z);
  const double s2 = sample_variance(z);
  const double se_mean = std::sqrt(s2 / reps);
  const double se_var = s2 * std::sqrt(2.0 / (reps - 1.0));
  const double combined = std::hypot(se_var, target.quartic_standard_error);
  const KsResult ks = ks_test_normal(z, 0.0, std::sqrt(s2));

  BoundReport report;
  report.claim = Claim::clt_L2;
  report.trials = replications;
  report.failures = 0;
  report.nominal_failure_mass = 0.0;
  report.checks.push_back({"|mean of T^{-1/2} R(T)| <= 3 SE", std::abs(m), 3.0 * se_mean, std::abs(m) <= 3.0 * se_mean});
  const double sigma2 = options.bound_factor * target.sigma2;
  const double var_gap = std::abs(s2 - sigma2);
  const double var_allow = 0.15 * sigma2 + 3.0 * combined;
  report.checks.push_back({"|sample variance - sigma^2| <= 15% + 3 SE", var_gap, var_allow, var_gap <= var_allow});
  report.checks.push_back({"KS p-value > 0.01", ks.p_value, 0.01, ks.p_value > 0.01});
  report.metadata = {{"T", static_cast<double>(T)},
                     {"mean", m},
                     {"sample_variance", s2},
                     {"sigma2", target.sigma2},
                     {"sigma2_series", target.series_term},
                     {"sigma2_quartic", target.quartic_term},
                     {"ks_statistic", ks.statistic},
                     {"seed", static_cast<double>(options.seed)}};
  report.labels = {{"noise", noise.kind_name()},
                   {"fourth_moment", target.mode == FourthMomentMode::closed_form ? "closed_form" : "monte_carlo"}};
  finalize_report(report);
  return report;
}

BoundReport verify_regret_scaling(const RegretScalingConfig& config, const VerifyOptions& options) {
  const auto& grid = config.T_grid;
  if (grid.size() < 3) {
    throw ArgumentError("regret scaling needs a grid of at least 3 horizons");
  }
  if (!std::is_sorted(grid.begin(), grid.end()) || grid.front() < 1 ||
      std::adjacent_find(grid.begin(), grid.end()) != grid.end()) {
    throw ArgumentError("T_grid must be strictly increasing and positive");
  }
  if (config.seeds < 1) {
    throw ArgumentError("regret scaling needs at least one seed");
  }
  const long T_max = grid.back();
  const int p = config.theta0.p();
  const VectorXd x0 = initial_state(config.x0, p);
  const std::size_t G = grid.size();
  std::vector<std::vector<double>> values(static_cast<std::size_t>(config.seeds));
  std::vector<char> aborted(static_cast<std::size_t>(config.seeds), 0);
  parallel_for(config.seeds, options.threads, [&](long k) {
    const std::uint64_t seed = run_seed(options.seed, k);
    RunRecord rec;
    try {
      if (config.optimal_policy) {
        RunOptions run;
        run.keep_states = false;
        run.keep_inputs = false;
        rec = run_policy(config.theta0, config.cost, config.noise, OptimalPolicy{}, T_max, x0, seed, run);
      } else {
        AlgorithmConfig algo = config.algorithm;
        algo.run.keep_states = false;
        algo.run.keep_inputs = false;
        rec = run_algorithm1(config.theta0, config.cost, config.noise, config.theta0_set, algo, T_max, x0, seed)
                  .record;
      }
    } catch (const SimulationAbort&) {
      aborted[static_cast<std::size_t>(k)] = 1;
      return;
    }
    auto& row = values[static_cast<std::size_t>(k)];
    for (long T : grid) {
      row.push_back(std::abs(rec.regret[static_cast<std::size_t>(T - 1)]));
    }
  });

  std::vector<double> log_T;
  std::vector<double> log_median;
  std::vector<double> ratio;
  BoundReport report;
  report.claim = Claim::regret_scaling_T2;
  for (std::size_t g = 0; g < G; ++g) {
    std::vector<double> column;
    for (const auto& row : values) {
      if (!row.empty()) {
        column.push_back(row[g]);
      }
    }
    if (column.empty()) {
      throw SimulationAbort("every regret-scaling run aborted", 0, 0.0);
    }
    const double med = median(column);
    const double T = static_cast<double>(grid[g]);
    log_T.push_back(std::log(T));
    log_median.push_back(std::log(med));
    ratio.push_back(med / (std::sqrt(T) * std::pow(1.0 + std::log(T), 2)));
    report.metadata["median_R_" + std::to_string(grid[g])] = med;
  }
  const LineFit fit = least_squares_line(log_T, log_median);
  const double low = options.bound_factor * config.slope_low;
  const double high = options.bound_factor * config.slope_high;
  report.checks.push_back({"slope >= lower bound", fit.slope, low, fit.slope >= low});
  report.checks.push_back({"slope <= upper bound", fit.slope, high, fit.slope <= high});
  for (std::size_t g = G / 2; g + 1 < G; ++g) {
    const double rel = ratio[g + 1] / ratio[g];
    report.checks.push_back({"normalized regret ratio T=" + std::to_string(grid[g + 1]) + " vs " +
                                 std::to_string(grid[g]),
                             rel, 1.0 + config.ratio_slack, rel <= 1.0 + config.ratio_slack});
  }
  report.trials = config.seeds;
  report.failures = std::count(aborted.begin(), aborted.end(), 1);
  report.nominal_failure_mass = 0.0;
  report.metadata["slope"] = fit.slope;
  report.metadata["intercept"] = fit.intercept;
  report.metadata["seed"] = static_cast<double>(options.seed);
  report.metadata["scale"] = config.algorithm.scale;
  report.metadata["radius_scale"] = config.algorithm.radius_scale.value_or(config.algorithm.scale);
  report.labels = {{"policy", config.optimal_policy ? "optimal" : "ofu"}, {"noise", config.noise.kind_name()}};
  finalize_report(report);
  return report;
}

OptimismSummary check_optimism(const DynamicsParameter& theta0, const CostPair& cost, const NoiseModel& noise,
                               const ParameterRegion& theta0_set, AlgorithmConfig config, long T, long runs,
                               const VerifyOptions& options) {
  require_trials(runs);
  config.inject_true_theta = true;
  config.run.keep_states = false;
  config.run.keep_inputs = false;
  const VectorXd x0 = VectorXd::Zero(theta0.p());
  struct Outcome {
    long covered = 0;
    long optimism = 0;
    long stabilization = 0;
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(runs));
  parallel_for(runs, options.threads, [&](long k) {
    const OfuRun run = run_algorithm1(theta0, cost, noise, theta0_set, config, T, x0, run_seed(options.seed, k));
    Outcome& o = outcomes[static_cast<std::size_t>(k)];
    bool seen_cover = false;
    for (const auto& ep : run.episodes) {
      if (ep.theta0_in_region) {
        ++o.covered;
        if (!(ep.J_tilde <= ep.J_theta0)) {
          ++o.optimism;
        }
      }
      if (seen_cover && !(ep.true_closed_loop_radius < 1.0)) {
        ++o.stabilization;
      }
      seen_cover = seen_cover || ep.theta0_covered;
    }
  });
  OptimismSummary summary;
  summary.runs = runs;
  for (const auto& o : outcomes) {
    summary.covered_episodes += o.covered;
    summary.optimism_violations += o.optimism;
    summary.stabilization_violations += o.stabilization;
    if (o.optimism == 0 && o.stabilization == 0) {
      ++summary.good_runs;
    }
  }
  return summary;
}

}  // namespace ofulq
