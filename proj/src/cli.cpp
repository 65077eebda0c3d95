#include "ofulq/cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "ofulq/errors.hpp"
#include "ofulq/riccati.hpp"
#include "ofulq/scenario.hpp"

namespace ofulq {

using nlohmann::json;

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string run_csv(const RunRecord& record, const std::vector<std::pair<std::string, std::string>>& comments) {
  std::string out;
  for (const auto& [key, value] : comments) {
    out += "# " + key + "=" + value + "\n";
  }
  out += "t,episode,cost,cum_cost,regret\n";
  double cum = 0.0;
  for (long k = 0; k < record.horizon(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    cum += record.costs[i];
    out += std::to_string(k + 1);
    out += ',';
    out += std::to_string(record.episodes.empty() ? 0 : record.episodes[i]);
    out += ',';
    out += format_double(record.costs[i]);
    out += ',';
    out += format_double(cum);
    out += ',';
    out += format_double(record.regret[i]);
    out += '\n';
  }
  return out;
}

namespace {

json flat(const MatrixXd& M) {
  json out = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index k = 0; k < M.cols(); ++k) {
      out.push_back(M(i, k));
    }
  }
  return out;
}

}  // namespace

json episodes_json(const OfuRun& run) {
  json list = json::array();
  for (const auto& e : run.episodes) {
    list.push_back({{"index", e.index},
                    {"start", e.start},
                    {"end", e.end},
                    {"tau", e.tau},
                    {"theta_tilde", flat(e.theta_tilde)},
                    {"gain", flat(e.gain)},
                    {"J_tilde", e.J_tilde},
                    {"N", e.N},
                    {"n", e.n},
                    {"zeta", e.zeta},
                    {"D_norm", e.D_norm},
                    {"radius", e.radius},
                    {"lambda_min_V", e.lambda_min_V},
                    {"acceptance_rate", e.acceptance_rate},
                    {"candidates", e.candidates},
                    {"selection_failed", e.selection_failed},
                    {"sample_size_overflow", e.sample_size_overflow},
                    {"rank_deficient", e.rank_deficient},
                    {"ellipsoid_added", e.ellipsoid_added},
                    {"theta0_in_region", e.theta0_in_region},
                    {"theta0_covered", e.theta0_covered},
                    {"J_theta0", e.J_theta0},
                    {"true_closed_loop_radius", e.true_closed_loop_radius}});
  }
  return list;
}

json report_json(const BoundReport& report) {
  json checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"passed", c.passed}});
  }
  return {{"claim", claim_name(report.claim)},
          {"trials", report.trials},
          {"failures", report.failures},
          {"nominal_failure_mass", report.nominal_failure_mass},
          {"empirical_rate", report.empirical_rate},
          {"standard_error", report.standard_error},
          {"verdict", report.verdict ? "pass" : "fail"},
          {"checks", checks},
          {"metadata", report.metadata},
          {"labels", report.labels}};
}

namespace {

struct CommonOptions {
  std::string scenario_path;
  std::string preset_name;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

struct Loaded {
  Scenario scenario;
  std::string hash;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
};

Loaded load(const CommonOptions& o) {
  if (o.scenario_path.empty() == o.preset_name.empty()) {
    throw ArgumentError("exactly one of --scenario and --preset is required");
  }
  Loaded l;
  l.scenario = o.scenario_path.empty() ? preset(o.preset_name) : load_scenario(o.scenario_path);
  l.hash = config_hash(l.scenario);
  l.seed = o.seed.value_or(l.scenario.seed);
  l.out_dir = o.out_dir.empty() ? std::filesystem::path(l.scenario.output_directory)
                                  : std::filesystem::path(o.out_dir);
  return l;
}

bool wants(const Scenario& s, const std::string& format) {
  return std::find(s.formats.begin(), s.formats.end(), format) != s.formats.end();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    throw ArgumentError("cannot write " + path.string());
  }
  f << text;
  if (!f) {
    throw ArgumentError("failed writing " + path.string());
  }
}

std::string matrix_text(const MatrixXd& M) {
  std::string out;
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    out += "  [";
    for (Eigen::Index k = 0; k < M.cols(); ++k) {
      out += (k ? ", " : "") + format_double(M(i, k));
    }
    out += "]\n";
  }
  return out;
}

int cmd_dare(const CommonOptions& o, std::ostream& out) {
  const Loaded l = load(o);
  const auto theta = scenario_theta(l.scenario);
  const auto cost = scenario_cost(l.scenario);
  const auto noise = scenario_noise(l.scenario);
  const RiccatiSolution sol = solve_dare(theta, cost);
  out << "config_hash " << l.hash << "\n";
  out << "K\n" << matrix_text(sol.K);
  out << "L\n" << matrix_text(sol.L);
  out << "J* " << format_double(sol.average_cost(noise.C())) << "\n";
  out << "closed-loop spectrum\n";
  const Eigen::VectorXcd ev = Eigen::EigenSolver<MatrixXd>(sol.closed_loop, false).eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    out << "  " << format_double(ev(i).real()) << (ev(i).imag() < 0 ? " - " : " + ")
        << format_double(std::abs(ev(i).imag())) << "i  |" << format_double(std::abs(ev(i))) << "|\n";
  }
  out << "spectral radius " << format_double(spectral_radius(sol.closed_loop)) << "\n";
  out << "residual " << format_double(sol.residual) << "\n";
  return exit_success;
}

std::vector<std::pair<std::string, std::string>> csv_comments(const Loaded& l, double J_star,
                                                              const std::string& policy) {
  return {{"J_star", format_double(J_star)},
          {"seed", std::to_string(l.seed)},
          {"config_hash", l.hash},
          {"policy", policy},
          {"scale", format_double(policy == "ofu" ? l.scenario.scale : 1.0)}};
}

json episode_document(const Loaded& l, const OfuRun& run) {
  return {{"config_hash", l.hash},
          {"seed", l.seed},
          {"scale", l.scenario.scale},
          {"radius_scale", l.scenario.radius_scale.value_or(l.scenario.scale)},
          {"J_star", run.record.J_star},
          {"episodes", episodes_json(run)}};
}

int write_ofu(const Loaded& l, const std::string& stem, std::ostream& out) {
  const Scenario& s = l.scenario;
  const OfuRun run = run_algorithm1(scenario_theta(s), scenario_cost(s), scenario_noise(s), scenario_region(s),
                                    scenario_algorithm(s), s.T, s.x0, l.seed);
  if (wants(s, "csv")) {
    write_file(l.out_dir / (stem + ".csv"), run_csv(run.record, csv_comments(l, run.record.J_star, "ofu")));
  }
  if (wants(s, "json")) {
    write_file(l.out_dir / "episodes.json", episode_document(l, run).dump(2) + "\n");
  }
  out << "episodes " << run.episodes.size() << "\n";
  out << "J* " << format_double(run.record.J_star) << "\n";
  out << "regret(T) " << format_double(run.record.regret.empty() ? 0.0 : run.record.regret.back()) << "\n";
  return exit_success;
}

int cmd_simulate(const CommonOptions& o, const std::string& policy_flag, std::ostream& out) {
  const Loaded l = load(o);
  const Scenario& s = l.scenario;
  if (policy_flag == "ofu") {
    return write_ofu(l, "simulate", out);
  }
  Policy policy = OptimalPolicy{};
  if (policy_flag == "fixed") {
    if (!s.fixed_gain) {
      throw ArgumentError("--policy fixed needs policy.fixed_gain in the scenario");
    }
    policy = FixedFeedback{*s.fixed_gain};
  } else if (policy_flag == "ce") {
    CertaintyEquivalence ce;
    ce.initial_gain = s.fixed_gain ? *s.fixed_gain : solve_dare(scenario_region(s).ball_center(), scenario_cost(s)).L;
    ce.warmup = s.ce_warmup;
    ce.update_period = s.ce_update_period;
    policy = ce;
  }
  RunOptions run_options;
  run_options.keep_states = false;
  run_options.keep_inputs = false;
  const RunRecord rec =
      run_policy(scenario_theta(s), scenario_cost(s), scenario_noise(s), policy, s.T, s.x0, l.seed, run_options);
  if (wants(s, "csv")) {
    write_file(l.out_dir / "simulate.csv", run_csv(rec, csv_comments(l, rec.J_star, policy_name(policy))));
  }
  out << "J* " << format_double(rec.J_star) << "\n";
  out << "regret(T) " << format_double(rec.regret.empty() ? 0.0 : rec.regret.back()) << "\n";
  return exit_success;
}

int cmd_verify(const CommonOptions& o, const std::string& claim, const std::string& policy_flag, bool self_test,
               std::ostream& out) {
  const Loaded l = load(o);
  const Scenario& s = l.scenario;
  const auto theta = scenario_theta(s);
  const auto cost = scenario_cost(s);
  const auto noise = scenario_noise(s);
  VerifyOptions options;
  options.seed = l.seed;
  options.threads = o.threads;
  options.bound_factor = self_test ? 1e-6 : 1.0;

  auto feedback = [&] { return s.verify_L ? *s.verify_L : solve_dare(theta, cost).L; };
  BoundReport report;
  double scale = 1.0;
  if (claim == "L4") {
    report = verify_noise_bound(noise, s.verify_n, s.p, s.delta, s.trials, options);
  } else if (claim == "T1") {
    const double eps = s.epsilon.value_or(noise.lambda_min_C() / 2.0);
    CovarianceFloorOptions floor;
    floor.x0 = s.x0;
    floor.limit_n = s.limit_n;
    report = verify_covariance_floor(theta, feedback(), noise, eps, s.delta, s.trials, options, floor);
  } else if (claim == "C1") {
    PredictionOptions prediction;
    prediction.x0 = s.x0;
    report = verify_prediction(theta, feedback(), noise, s.delta, s.trials, options, prediction);
  } else if (claim == "L2") {
    report = verify_clt(theta, cost, noise, s.T, s.replications, options);
  } else if (claim == "T2") {
    RegretScalingConfig config{.theta0 = theta,
                               .cost = cost,
                               .noise = noise,
                               .theta0_set = scenario_region(s),
                               .algorithm = scenario_algorithm(s),
                               .T_grid = s.T_grid,
                               .seeds = s.seeds,
                               .x0 = s.x0,
                               .optimal_policy = policy_flag == "optimal"};
    report = verify_regret_scaling(config, options);
    scale = s.scale;
  } else {
    throw ArgumentError("unknown claim " + claim);
  }
  json doc = report_json(report);
  doc["config_hash"] = l.hash;
  doc["seed"] = l.seed;
  doc["scale"] = scale;
  doc["self_test"] = self_test;
  doc["bound_factor"] = options.bound_factor;
  write_file(l.out_dir / ("verify_" + claim + ".json"), doc.dump(2) + "\n");
  out << claim << " " << (report.verdict ? "pass" : "fail") << " rate " << format_double(report.empirical_rate)
      << " nominal " << format_double(report.nominal_failure_mass) << "\n";
  for (const auto& c : report.checks) {
    out << "  " << c.name << ": " << format_double(c.value) << " vs " << format_double(c.threshold)
        << (c.passed ? " ok" : " FAIL") << "\n";
  }
  return report.verdict ? exit_success : exit_verdict;
}

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--scenario", o.scenario_path, "Scenario JSON file");
  sub->add_option("--preset", o.preset_name, "Built-in scenario name");
  sub->add_option("--out", o.out_dir, "Output directory (default: output.directory of the scenario)");
  sub->add_option("--seed", o.seed, "Base seed (default: run.seed of the scenario)");
  sub->add_option("--threads", o.threads, "Worker threads")->check(CLI::Range(1, 1024));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimism-based adaptive LQ regulation: simulation and verification"};
  app.require_subcommand(1);
  std::string preset_list;
  for (const auto& n : preset_names()) {
    preset_list += (preset_list.empty() ? "" : ", ") + n;
  }
  app.footer("Presets: " + preset_list);

  CommonOptions dare_o, sim_o, ofu_o, ver_o;
  std::string sim_policy = "optimal";
  std::string ver_policy = "ofu";
  std::string claim;
  bool self_test = false;

  auto* dare = app.add_subcommand("dare", "Solve the Riccati equation of the true system");
  add_common(dare, dare_o);
  auto* sim = app.add_subcommand("simulate", "Simulate one policy and write simulate.csv");
  add_common(sim, sim_o);
  sim->add_option("--policy", sim_policy, "optimal, ce, fixed or ofu")
      ->check(CLI::IsMember({"optimal", "ce", "fixed", "ofu"}));
  auto* ofu = app.add_subcommand("ofu", "Run the optimistic algorithm and write ofu.csv and episodes.json");
  add_common(ofu, ofu_o);
  auto* ver = app.add_subcommand("verify", "Monte Carlo check of one claim; writes verify_<claim>.json");
  add_common(ver, ver_o);
  ver->add_option("--claim", claim, "L4, T1, C1, L2 or T2")
      ->required()
      ->check(CLI::IsMember({"L4", "T1", "C1", "L2", "T2"}));
  ver->add_option("--policy", ver_policy, "T2 only: ofu, or optimal for the diagnostic anchor")
      ->check(CLI::IsMember({"ofu", "optimal"}));
  ver->add_flag("--self-test", self_test, "Shrink the certified bound so the verdict must fail");

  std::vector<std::string> rev(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_success;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  }

  try {
    if (dare->parsed()) {
      return cmd_dare(dare_o, out);
    }
    if (sim->parsed()) {
      return cmd_simulate(sim_o, sim_policy, out);
    }
    if (ofu->parsed()) {
      const Loaded l = load(ofu_o);
      return write_ofu(l, "ofu", out);
    }
    return cmd_verify(ver_o, claim, ver_policy, self_test, out);
  } catch (const NotStabilizableError& e) {
    err << "error: not stabilizable: " << e.what() << "\n";
    return exit_model;
  } catch (const SimulationAbort& e) {
    err << "error: instability abort at step " << e.step() << " (|x| = " << format_double(e.state_norm())
        << "): " << e.what() << "\n";
    return exit_runtime;
  } catch (const InstabilityError& e) {
    err << "error: instability: " << e.what() << "\n";
    return exit_runtime;
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_runtime;
  }
}

}  // namespace ofulq
