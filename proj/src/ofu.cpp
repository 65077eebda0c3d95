#include "ofulq/ofu.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ofulq/errors.hpp"
#include "ofulq/identify.hpp"

namespace ofulq {

namespace {

constexpr long kNoBoundary = std::numeric_limits<long>::max() / 4;
constexpr long kSampleSizeCap = 1'000'000'000'000L;

void check_gamma(double gamma, int q) {
  if (!(gamma > 1.0) || !std::isfinite(gamma)) {
    throw ArgumentError("gamma must be > 1");
  }
  if (q < 1) {
    throw ArgumentError("q must be positive");
  }
}

long ceil_boundary(double tau) {
  if (!(tau < static_cast<double>(kNoBoundary))) {
    return kNoBoundary;
  }
  return static_cast<long>(std::ceil(tau));
}

}  // namespace

double next_tau(double previous_tau, double gamma, int i, int q, long N) {
  check_gamma(gamma, q);
  if (i < 1 || N < 0) {
    throw ArgumentError("episode index must be >= 1 and N >= 0");
  }
  return previous_tau + std::pow(gamma, static_cast<double>(i) / q) * (static_cast<double>(N) + 1.0);
}

EpisodeSchedule schedule(double gamma, int q, const std::function<long(int)>& N_of_i, long T) {
  check_gamma(gamma, q);
  EpisodeSchedule s;
  s.gamma = gamma;
  s.q = q;
  double tau = 0.0;
  long running = 0;
  for (int i = 1; tau < static_cast<double>(T); ++i) {
    running = std::max(running, N_of_i(i));
    tau = next_tau(tau, gamma, i, q, running);
    s.taus.push_back(tau);
    s.boundaries.push_back(ceil_boundary(tau));
    s.sample_sizes.push_back(running);
  }
  return s;
}

double episode_count_bound(double gamma, int q, double tau1, long T) {
  check_gamma(gamma, q);
  const double step = std::pow(gamma, 1.0 / q) - 1.0;
  return q / std::log(gamma) * std::log(static_cast<double>(T) * step / tau1 + 1.0);
}

Selection ofu_select(const ParameterRegion& region, const CostPair& cost, const MatrixXd& C, int samples,
                     double tolerance, const std::optional<DynamicsParameter>& incumbent, Rng& rng,
                     const SelectOptions& options) {
  if (samples < 1) {
    throw ArgumentError("ofu_select needs samples >= 1");
  }
  std::vector<DynamicsParameter> candidates;
  bool incumbent_feasible = false;
  if (incumbent && region.contains(*incumbent)) {
    candidates.push_back(*incumbent);
    incumbent_feasible = true;
  }
  std::size_t injected_index = std::numeric_limits<std::size_t>::max();
  if (options.injected && region.contains(*options.injected)) {
    injected_index = candidates.size();
    candidates.push_back(*options.injected);
  }

  const long budget = options.max_rejections > 0 ? options.max_rejections : 50L * samples;
  std::vector<DynamicsParameter> drawn;
  double acceptance = 0.0;
  try {
    FeasibleSample sample = sample_feasible(region, samples, rng, budget);
    drawn = std::move(sample.points);
    acceptance = sample.acceptance_rate;
  } catch (const EmptyRegionError&) {
  }
  if (static_cast<int>(drawn.size()) < samples) {
    // Top up by a random walk from any known member.
    std::optional<MatrixXd> start;
    if (!drawn.empty()) {
      start = drawn.front().stacked();
    } else if (incumbent_feasible) {
      start = incumbent->stacked();
    } else {
      for (const auto& s : options.starts) {
        if (region.contains(s)) {
          start = s;
          break;
        }
      }
    }
    if (start) {
      auto walk = hit_and_run(region, *start, samples - static_cast<int>(drawn.size()), rng, options.thin);
      for (auto& w : walk) {
        drawn.push_back(std::move(w));
      }
    }
  }
  for (auto& d : drawn) {
    candidates.push_back(std::move(d));
  }

  std::optional<Selection> best;
  std::vector<double> costs;
  int evaluated = 0;
  int skipped = 0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    try {
      RiccatiSolution sol = solve_dare(candidates[k], cost);
      const double J = sol.average_cost(C);
      costs.push_back(J);
      ++evaluated;
      if (!best || J < best->J - tolerance) {
        best.emplace(Selection{
            .theta = candidates[k], .solution = std::move(sol), .J = J, .members = {}, .member_costs = {}});
        best->incumbent_kept = incumbent_feasible && k == 0;
        best->injected_selected = k == injected_index;
      }
    } catch (const NotStabilizableError&) {
      costs.push_back(std::numeric_limits<double>::quiet_NaN());
      ++skipped;
    }
  }
  if (!best) {
    throw SelectionFailure("no feasible stabilizable candidate among " + std::to_string(candidates.size()));
  }
  best->evaluated = evaluated;
  best->skipped = skipped;
  best->acceptance_rate = acceptance;
  best->injected_evaluated = injected_index < candidates.size();
  best->members = std::move(candidates);
  best->member_costs = std::move(costs);
  return std::move(*best);
}

namespace {

class OfuController : public Controller {
 public:
  OfuController(const DynamicsParameter& theta0, const CostPair& cost, const NoiseModel& noise,
                const ParameterRegion& theta0_set, const AlgorithmConfig& config, std::uint64_t seed, long T)
      : theta0_(theta0),
        cost_(cost),
        noise_(noise),
        region_(theta0_set),
        config_(config),
        rng_(Rng::stream(seed, 1)),
        horizon_(T),
        acc_(theta0.p()),
        lambda_min_C_(noise.lambda_min_C()),
        J_theta0_(solve_dare(theta0, cost).average_cost(noise.C())) {
    check_gamma(config_.gamma, theta0.q());
    if (!(config_.delta > 0.0 && config_.delta < 1.0)) {
      throw ArgumentError("delta must lie in (0, 1)");
    }
    if (!(config_.scale > 0.0) || !(config_.radius_scale.value_or(1.0) > 0.0)) {
      throw ArgumentError("scale and radius_scale must be positive");
    }
    if (theta0_set.p() != theta0.p() || theta0_set.q() != theta0.q()) {
      throw DimensionError("stabilizing set does not match the system dimensions");
    }
  }

  void act(long t, const VectorXd& x, VectorXd& u) override {
    if (episodes_.empty()) {
      open_episode(t, x);
    } else if (t >= boundary_ && t < horizon_) {
      close_episode();
      open_episode(t, x);
    }
    u.noalias() = gain_ * x;
  }

  void observe(long, const VectorXd& x, const VectorXd&, const VectorXd& x_next) override { acc_.add(x, x_next); }

  int episode(long) const override { return static_cast<int>(episodes_.size()); }

  void finish() {
    if (!episodes_.empty()) {
      // The last episode is cut by the horizon; its data are not turned into an ellipsoid.
      episodes_.back().n = acc_.count();
    }
  }

  std::vector<EpisodeRecord>& episodes() { return episodes_; }
  const ParameterRegion& region() const { return region_; }

 private:
  void open_episode(long t, const VectorXd& x) {
    const int i = static_cast<int>(episodes_.size()) + 1;
    EpisodeRecord ep;
    ep.index = i;
    ep.start = t;
    ep.J_theta0 = J_theta0_;
    ep.theta0_in_region = region_.contains(theta0_);

    SelectOptions opts;
    opts.max_rejections = config_.max_rejections;
    if (config_.inject_true_theta) {
      opts.injected = theta0_;
    }
    opts.starts = known_members_;
    if (incumbent_ && !region_.ellipsoids().empty()) {
      // Incumbent moved onto the newest ellipsoid's center line.
      const auto& last = region_.ellipsoids().back();
      const MatrixXd& Lt = last.feedback_ext();
      const MatrixXd theta = incumbent_->stacked();
      const MatrixXd correction =
          (last.center() - theta * Lt) * (Lt.transpose() * Lt).ldlt().solve(Lt.transpose());
      opts.starts.insert(opts.starts.begin(), theta + correction);
    }
    try {
      Selection sel =
          ofu_select(region_, cost_, noise_.C(), config_.samples, config_.tolerance, incumbent_, rng_, opts);
      incumbent_ = sel.theta;
      solution_ = sel.solution;
      ep.acceptance_rate = sel.acceptance_rate;
      ep.candidates = sel.evaluated;
      known_members_.clear();
      for (std::size_t k = 0; k < sel.members.size() && known_members_.size() < 16; ++k) {
        known_members_.push_back(sel.members[k].stacked());
      }
      compute_surrogates(sel);
    } catch (const SelectionFailure&) {
      ep.selection_failed = true;
      if (!incumbent_) {
        incumbent_ = region_.ball_center();
        solution_ = solve_dare(*incumbent_, cost_);
        surrogate_zeta_ = jordan_constant(solution_->closed_loop).zeta;
        surrogate_D_norm_ = operator_norm(solution_->closed_loop);
      }
    }
    gain_ = solution_->L;
    ep.theta_tilde = incumbent_->stacked();
    ep.gain = gain_;
    ep.J_tilde = solution_->average_cost(noise_.C());
    ep.zeta = surrogate_zeta_;
    ep.D_norm = surrogate_D_norm_;
    ep.true_closed_loop_radius = spectral_radius(theta0_.closed_loop(gain_));

    const double delta_i = config_.delta / (static_cast<double>(i) * i);
    const double x0_inf = x.cwiseAbs().maxCoeff();
    long N = kSampleSizeCap;
    try {
      N = sample_size(sample_size_inputs(lambda_min_C_ / 2.0, delta_i, noise_, surrogate_zeta_, surrogate_D_norm_,
                                         x0_inf, theta0_.p(), config_.scale));
    } catch (const SampleSizeOverflow&) {
      ep.sample_size_overflow = true;
    }
    running_N_ = std::max(running_N_, N);
    ep.N = running_N_;
    tau_ = next_tau(tau_, config_.gamma, i, theta0_.q(), running_N_);
    ep.tau = tau_;
    boundary_ = ceil_boundary(tau_);
    ep.end = boundary_;
    episode_start_inf_ = x0_inf;
    acc_.clear();
    episodes_.push_back(std::move(ep));
  }

  void close_episode() {
    EpisodeRecord& ep = episodes_.back();
    const int i = ep.index;
    ep.n = acc_.count();
    ep.theta0_covered = false;
    if (ep.n < 2) {
      ep.rank_deficient = true;
      return;
    }
    LeastSquaresFit fit;
    try {
      fit = acc_.fit(0.0);
    } catch (const RankDeficiencyError& e) {
      ep.rank_deficient = true;
      ep.lambda_min_V = e.lambda_min();
      return;
    }
    ep.lambda_min_V = fit.lambda_min_V;
    const double delta_i = config_.delta / (static_cast<double>(i) * i);
    const int p = theta0_.p();
    const double b = noise_bound(noise_, ep.n, p, delta_i).value;
    const double beta = state_bound(ep.zeta, episode_start_inf_, b);
    ep.radius = config_.radius_scale.value_or(config_.scale) * prediction_radius(ep.n, p, lambda_min_C_, beta, b, delta_i);
    ConfidenceEllipsoid gamma_i(fit.D_hat, fit.V, extended_feedback(gain_), ep.radius, i);
    ep.theta0_covered = gamma_i.contains(theta0_.stacked());
    region_.add(std::move(gamma_i));
    ep.ellipsoid_added = true;
  }

  // zeta and ||D||_2 of the unknown true closed loop, replaced by worst cases
  // over the sampled members of the current set.
  void compute_surrogates(const Selection& sel) {
    const MatrixXd Lt = extended_feedback(sel.solution.L);
    double D_norm = operator_norm(sel.solution.closed_loop);
    double worst_radius = -1.0;
    MatrixXd worst;
    for (const auto& m : sel.members) {
      const MatrixXd D = m.stacked() * Lt;
      D_norm = std::max(D_norm, operator_norm(D));
      const double rho = spectral_radius(D);
      if (rho < 1.0 && rho > worst_radius) {
        worst_radius = rho;
        worst = D;
      }
    }
    double zeta = jordan_constant(sel.solution.closed_loop).zeta;
    if (worst_radius >= 0.0) {
      zeta = std::max(zeta, jordan_constant(worst).zeta);
    }
    surrogate_zeta_ = zeta;
    surrogate_D_norm_ = D_norm;
  }

  const DynamicsParameter& theta0_;
  const CostPair& cost_;
  const NoiseModel& noise_;
  ParameterRegion region_;
  AlgorithmConfig config_;
  Rng rng_;
  long horizon_;
  GramAccumulator acc_;
  double lambda_min_C_;
  double J_theta0_;

  std::vector<EpisodeRecord> episodes_;
  std::optional<DynamicsParameter> incumbent_;
  std::optional<RiccatiSolution> solution_;
  std::vector<MatrixXd> known_members_;
  MatrixXd gain_;
  double surrogate_zeta_ = 1.0;
  double surrogate_D_norm_ = 0.0;
  double tau_ = 0.0;
  long boundary_ = 0;
  long running_N_ = 0;
  double episode_start_inf_ = 0.0;
};

}  // namespace

OfuRun run_algorithm1(const DynamicsParameter& theta0, const CostPair& cost, const NoiseModel& noise,
                      const ParameterRegion& theta0_set, const AlgorithmConfig& config, long T,
                      const VectorXd& x0, std::uint64_t seed) {
  OfuController controller(theta0, cost, noise, theta0_set, config, seed, T);
  Rng noise_rng = Rng::stream(seed, 0);
  const double J_star = solve_dare(theta0, cost).average_cost(noise.C());
  OfuRun run;
  run.record = simulate(theta0, cost, noise, controller, T, x0, noise_rng, J_star, config.run);
  run.record.seed = seed;
  controller.finish();
  run.episodes = std::move(controller.episodes());
  run.ellipsoids = controller.region().ellipsoids();
  return run;
}

}  // namespace ofulq
