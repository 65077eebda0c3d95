// Acceptance run: one PASS/FAIL line per criterion. argv[1] is the ofulq tool.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "ofulq/errors.hpp"
#include "ofulq/riccati.hpp"
#include "ofulq/scenario.hpp"
#include "ofulq/verify.hpp"
#include "test_support.hpp"

using namespace ofulq;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

std::string report_line(const BoundReport& r) {
  std::string out = "rate " + fmt(r.empirical_rate) + " vs " + fmt(r.nominal_failure_mass) + "+3SE(" +
                    fmt(r.standard_error) + ")";
  for (const auto& c : r.checks) {
    out += "; " + c.name + " " + fmt(c.value) + " vs " + fmt(c.threshold) + (c.passed ? "" : " [fail]");
  }
  return out;
}

double dare_residual(const DynamicsParameter& th, const CostPair& cost, const MatrixXd& K) {
  const MatrixXd& A = th.A();
  const MatrixXd& B = th.B();
  const MatrixXd G = B.transpose() * K * B + cost.R();
  const MatrixXd rhs =
      cost.Q() + A.transpose() * K * A - A.transpose() * K * B * G.ldlt().solve(B.transpose() * K * A);
  return operator_norm(rhs - K) / (1.0 + operator_norm(K));
}

Outcome criterion1() {
  Rng rng(2024);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const int p = 1 + k % 4;
    const int r = 1 + (k / 4) % 3;
    const auto th = fixtures::random_stabilizable(p, r, rng);
    const CostPair cost(fixtures::random_pd(p, rng), fixtures::random_pd(r, rng));
    worst = std::max(worst, dare_residual(th, cost, solve_dare(th, cost).K));
  }
  const DynamicsParameter scalar(MatrixXd::Constant(1, 1, 0.9), MatrixXd::Ones(1, 1));
  const double K = solve_dare(scalar, CostPair(MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1))).K(0, 0);
  const double oracle = (0.81 + std::sqrt(0.81 * 0.81 + 4.0)) / 2.0;  // positive root of K^2 - 0.81 K - 1
  const double gap = std::abs(K - oracle);
  return {worst <= 1e-9 && gap <= 1e-5,
          "max relative residual " + fmt(worst) + " (<= 1e-9), |K - oracle| " + fmt(gap) + " (<= 1e-5)"};
}

Outcome criterion2() {
  Rng rng(77);
  double worst = 0.0;
  bool constructed = true;
  for (int k = 0; k < 100; ++k) {
    const int p = 2 + k % 3;
    const int r = 1 + k % 2;
    const auto pair = fixtures::matched_pair(p, r, rng);
    const MatrixXd ext = extended_feedback(pair.L1);
    const auto s1 = solve_dare(pair.theta1, pair.cost);
    const auto s0 = solve_dare(pair.theta0, pair.cost);
    const MatrixXd C = MatrixXd::Identity(p, p);
    constructed = constructed && (pair.theta1.stacked() - pair.theta0.stacked()).norm() > 0.01 &&
                  (pair.theta1.stacked() * ext - pair.theta0.stacked() * ext).norm() <= 1e-12 &&
                  s1.average_cost(C) <= s0.average_cost(C) + 1e-9;
    worst = std::max(worst, operator_norm(s1.L - s0.L));
  }
  return {constructed && worst <= 1e-6, "max ||L1 - L0|| " + fmt(worst) + " (<= 1e-6) over 100 pairs"};
}

Outcome criterion3() {
  const MatrixXd I2 = MatrixXd::Identity(2, 2);
  const auto g = verify_noise_bound(NoiseModel::gaussian(I2), 100, 2, 0.1, 2000);
  const auto w = verify_noise_bound(NoiseModel::weibull_symmetric(I2, 0.5), 100, 2, 0.1, 2000);
  Rng rng(5);
  bool state_ok = true;
  long runs = 0;
  for (int k = 0; k < 10; ++k) {
    const int p = 1 + k % 3;
    const MatrixXd D = fixtures::random_stable(p, 0.3 + 0.6 * rng.uniform(), rng);
    VerifyOptions opts;
    opts.seed = static_cast<std::uint64_t>(k);
    const auto s = verify_state_norm(D, std::sqrt(3.0), VectorXd::Ones(p), 1000, 10, opts);
    state_ok = state_ok && s.verdict && s.failures == 0;
    runs += s.trials;
  }
  return {g.verdict && w.verdict && state_ok,
          "gaussian " + report_line(g) + " | weibull(0.5) " + report_line(w) + " | state-norm bound held on " +
              std::to_string(runs) + " runs: " + (state_ok ? "yes" : "no")};
}

Outcome criterion4() {
  const Scenario s = preset("t1-verifiable");
  CovarianceFloorOptions floor;
  floor.limit_n = 100000;
  floor.limit_tolerance = 0.05;
  const auto r = verify_covariance_floor(scenario_theta(s), *s.verify_L, scenario_noise(s), *s.epsilon, 0.1, 1000,
                                         {}, floor);
  return {r.verdict, "n " + fmt(r.metadata.at("n")) + ", " + report_line(r)};
}

Outcome criterion5() {
  const Scenario s = preset("t1-verifiable");
  const auto r = verify_prediction(scenario_theta(s), *s.verify_L, scenario_noise(s), 0.1, 1000);
  VerifyOptions self_test;
  self_test.bound_factor = 1e-6;
  const auto bad = verify_prediction(scenario_theta(s), *s.verify_L, scenario_noise(s), 0.1, 1000, self_test);
  return {r.verdict && !bad.verdict,
          report_line(r) + " | self-test verdict " + (bad.verdict ? "pass (should fail)" : "fail (expected)")};
}

Outcome criterion6() {
  const Scenario s = preset("scalar-reference");
  const auto r = verify_clt(scenario_theta(s), scenario_cost(s), scenario_noise(s), 10000, 1000);
  return {r.verdict, "sigma2 " + fmt(r.metadata.at("sigma2")) + ", sample variance " +
                         fmt(r.metadata.at("sample_variance")) + "; " + report_line(r)};
}

BoundReport regret_report(const Scenario& s, bool optimal) {
  RegretScalingConfig config{.theta0 = scenario_theta(s),
                             .cost = scenario_cost(s),
                             .noise = scenario_noise(s),
                             .theta0_set = scenario_region(s),
                             .algorithm = scenario_algorithm(s),
                             .T_grid = s.T_grid,
                             .seeds = s.seeds,
                             .x0 = s.x0,
                             .optimal_policy = optimal};
  VerifyOptions opts;
  opts.seed = s.seed;
  return verify_regret_scaling(config, opts);
}

Outcome criterion7() {
  bool pass = true;
  std::string detail;
  for (const std::string name : {"scalar-reference", "two-by-one"}) {
    const Scenario s = preset(name);
    const auto ofu = regret_report(s, false);
    const auto anchor = regret_report(s, true);
    pass = pass && ofu.verdict;
    detail += name + " (scale " + fmt(s.scale) + ", " + std::to_string(s.seeds) + " seeds): slope " +
              fmt(ofu.metadata.at("slope")) + "; " + report_line(ofu) + "; optimal-policy anchor slope " +
              fmt(anchor.metadata.at("slope")) + " | ";
  }
  return {pass, detail};
}

Outcome criterion8() {
  const Scenario s = preset("scalar-reference");
  const auto summary = check_optimism(scenario_theta(s), scenario_cost(s), scenario_noise(s), scenario_region(s),
                                      scenario_algorithm(s), 10000, 100);
  const double rate = static_cast<double>(summary.good_runs) / summary.runs;
  return {rate >= 0.95, "good runs " + std::to_string(summary.good_runs) + "/" + std::to_string(summary.runs) +
                            " (>= 95%), covered episodes " + std::to_string(summary.covered_episodes) +
                            ", optimism violations " + std::to_string(summary.optimism_violations) +
                            ", stabilization violations " + std::to_string(summary.stabilization_violations)};
}

int run_tool(const std::string& tool, const std::string& args) {
  const int status = std::system((tool + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

Outcome criterion9(const std::string& tool) {
  const fs::path dir = fs::temp_directory_path() / "ofulq_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::string problems;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) {
      problems += what + "; ";
    }
  };

  Scenario s = preset("scalar-reference");
  s.T = 5000;
  const fs::path scenario = dir / "scenario.json";
  std::ofstream(scenario) << to_json(s).dump(2);
  for (const std::string run : {"a", "b"}) {
    const std::string common = "--scenario " + scenario.string() + " --seed 11 --out " + (dir / run).string();
    expect(run_tool(tool, "ofu " + common) == 0, "ofu exit");
    expect(run_tool(tool, "simulate --policy optimal " + common) == 0, "simulate exit");
    expect(run_tool(tool, "verify --claim L4 " + common) == 0, "verify exit");
  }
  for (const std::string file : {"ofu.csv", "episodes.json", "simulate.csv", "verify_L4.json"}) {
    const std::string a = slurp(dir / "a" / file);
    expect(!a.empty() && a == slurp(dir / "b" / file), file + " not byte-identical");
  }

  const std::string csv = slurp(dir / "a" / "ofu.csv");
  std::istringstream in(csv);
  std::string line;
  long rows = 0;
  bool header = false;
  bool comments_ok = true;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      comments_ok = comments_ok && line.find('=') != std::string::npos;
    } else if (!header) {
      header = line == "t,episode,cost,cum_cost,regret";
    } else {
      ++rows;
    }
  }
  expect(header && comments_ok && rows == s.T, "csv schema");
  try {
    const json ep = json::parse(slurp(dir / "a" / "episodes.json"));
    for (const char* key : {"config_hash", "seed", "scale", "J_star", "episodes"}) {
      expect(ep.contains(key), std::string("episodes.json lacks ") + key);
    }
    for (const auto& e : ep.at("episodes")) {
      for (const char* key : {"index", "start", "end", "tau", "theta_tilde", "gain", "N", "radius"}) {
        expect(e.contains(key), std::string("episode lacks ") + key);
      }
    }
    const json v = json::parse(slurp(dir / "a" / "verify_L4.json"));
    for (const char* key : {"claim", "trials", "failures", "nominal_failure_mass", "verdict", "config_hash"}) {
      expect(v.contains(key), std::string("verify json lacks ") + key);
    }
  } catch (const std::exception& e) {
    expect(false, std::string("json parse: ") + e.what());
  }

  Scenario unstable = s;
  unstable.A = MatrixXd::Constant(1, 1, 2.0);
  unstable.fixed_gain = MatrixXd::Zero(1, 1);
  const fs::path unstable_path = dir / "unstable.json";
  std::ofstream(unstable_path) << to_json(unstable).dump(2);
  const std::string out = " --out " + (dir / "codes").string();
  const int ok = run_tool(tool, "dare --preset scalar-reference" + out);
  const int usage = run_tool(tool, "verify --preset t1-verifiable --claim bogus" + out);
  const int model = run_tool(tool, "dare --preset non-stabilizable" + out);
  const int runtime = run_tool(tool, "simulate --policy fixed --scenario " + unstable_path.string() + out);
  const int verdict = run_tool(tool, "verify --preset t1-verifiable --claim C1 --self-test" + out);
  expect(ok == 0 && usage == 1 && model == 2 && runtime == 3 && verdict == 4,
         "exit codes " + std::to_string(ok) + "," + std::to_string(usage) + "," + std::to_string(model) + "," +
             std::to_string(runtime) + "," + std::to_string(verdict));
  return {problems.empty(), problems.empty() ? "byte-identical reruns, schemas valid, exit codes 0/1/2/3/4"
                                             : problems};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <path-to-ofulq>\n";
    return 2;
  }
  const std::string tool = argv[1];
  const std::vector<std::function<Outcome()>> criteria{
      criterion1, criterion2, criterion3, criterion4, criterion5,
      criterion6, criterion7, criterion8, [&] { return criterion9(tool); }};
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << k + 1 << ": " << (o.pass ? "PASS" : "FAIL") << " [" << fmt(secs) << " s] "
              << o.detail << std::endl;
    failed += o.pass ? 0 : 1;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
