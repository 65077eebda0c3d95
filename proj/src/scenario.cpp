#include "ofulq/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "ofulq/errors.hpp"

namespace ofulq {

using nlohmann::json;

namespace {

void reject_unknown(const json& section, const std::string& where, const std::set<std::string>& known) {
  if (!section.is_object()) {
    throw ArgumentError(where + " must be an object");
  }
  for (const auto& item : section.items()) {
    if (!known.count(item.key())) {
      throw ArgumentError("unknown field " + where + "." + item.key());
    }
  }
}

const json& field(const json& section, const std::string& where, const std::string& key) {
  if (!section.contains(key)) {
    throw ArgumentError("missing field " + where + "." + key);
  }
  return section.at(key);
}

double number(const json& v, const std::string& what) {
  if (!v.is_number()) {
    throw ArgumentError(what + " must be a number");
  }
  const double x = v.get<double>();
  if (!std::isfinite(x)) {
    throw ArgumentError(what + " must be finite");
  }
  return x;
}

long integer(const json& v, const std::string& what) {
  if (!v.is_number_integer()) {
    throw ArgumentError(what + " must be an integer");
  }
  return v.get<long>();
}

MatrixXd matrix(const json& v, int rows, int cols, const std::string& what) {
  if (!v.is_array()) {
    throw ArgumentError(what + " must be a flat row-major array");
  }
  if (v.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw ArgumentError(what + " must have " + std::to_string(rows * cols) + " entries for shape " +
                        std::to_string(rows) + "x" + std::to_string(cols));
  }
  MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int k = 0; k < cols; ++k) {
      M(i, k) = number(v[static_cast<std::size_t>(i * cols + k)], what);
    }
  }
  return M;
}

json flat(const MatrixXd& M) {
  json out = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index k = 0; k < M.cols(); ++k) {
      out.push_back(M(i, k));
    }
  }
  return out;
}

template <typename F>
auto as_config_error(F&& f) {
  try {
    return f();
  } catch (const ArgumentError&) {
    throw;
  } catch (const Error& e) {
    throw ArgumentError(std::string("invalid scenario: ") + e.what());
  }
}

void validate(const Scenario& s) {
  if (s.p < 1 || s.r < 1) {
    throw ArgumentError("system.p and system.r must be positive");
  }
  if (!(s.delta > 0.0 && s.delta <= 1.0 / 6.0)) {
    throw ArgumentError("algorithm.delta must lie in (0, 1/6]");
  }
  if (!(s.gamma > 1.0)) {
    throw ArgumentError("algorithm.gamma must exceed 1");
  }
  if (!(s.scale > 0.0) || !(s.radius_scale.value_or(1.0) > 0.0)) {
    throw ArgumentError("algorithm.scale and algorithm.radius_scale must be positive");
  }
  if (s.samples < 1) {
    throw ArgumentError("algorithm.samples must be positive");
  }
  if (s.tolerance < 0.0) {
    throw ArgumentError("algorithm.tolerance must be nonnegative");
  }
  if (s.T < 0) {
    throw ArgumentError("run.T must be nonnegative");
  }
  for (long t : s.T_grid) {
    if (t < 1) {
      throw ArgumentError("run.T_grid entries must be positive");
    }
  }
  if (s.seeds < 1) {
    throw ArgumentError("run.seeds must be positive");
  }
  if (s.set_radius < 0.0) {
    throw ArgumentError("theta0_set.radius must be nonnegative");
  }
  if (s.trials < 1 || s.replications < 1 || s.verify_n < 1 || s.limit_n < 0) {
    throw ArgumentError("verify counts must be positive");
  }
  if (s.epsilon && !(*s.epsilon > 0.0)) {
    throw ArgumentError("verify.epsilon must be positive");
  }
  if (s.ce_warmup < 0 || s.ce_update_period < 1) {
    throw ArgumentError("policy.ce_warmup must be nonnegative and policy.ce_update_period positive");
  }
  for (const auto& f : s.formats) {
    if (f != "csv" && f != "json") {
      throw ArgumentError("output.formats entries must be csv or json");
    }
  }
  as_config_error([&] { return scenario_cost(s); });
  as_config_error([&] { return scenario_noise(s); });
  as_config_error([&] { return scenario_region(s); });
}

}  // namespace

Scenario parse_scenario(const json& j) {
  reject_unknown(j, "scenario", {"name", "system", "noise", "theta0_set", "algorithm", "run", "verify", "policy",
                                 "output"});
  Scenario s;
  if (j.contains("name")) {
    if (!j.at("name").is_string()) {
      throw ArgumentError("name must be a string");
    }
    s.name = j.at("name").get<std::string>();
  }

  const json& sys = field(j, "scenario", "system");
  reject_unknown(sys, "system", {"p", "r", "A", "B", "Q", "R", "C"});
  const long p = integer(field(sys, "system", "p"), "system.p");
  const long r = integer(field(sys, "system", "r"), "system.r");
  if (p < 1 || r < 1 || p > 64 || r > 64) {
    throw ArgumentError("system.p and system.r must lie in [1, 64]");
  }
  s.p = static_cast<int>(p);
  s.r = static_cast<int>(r);
  s.A = matrix(field(sys, "system", "A"), s.p, s.p, "system.A");
  s.B = matrix(field(sys, "system", "B"), s.p, s.r, "system.B");
  s.Q = matrix(field(sys, "system", "Q"), s.p, s.p, "system.Q");
  s.R = matrix(field(sys, "system", "R"), s.r, s.r, "system.R");
  s.C = matrix(field(sys, "system", "C"), s.p, s.p, "system.C");

  if (j.contains("noise")) {
    const json& n = j.at("noise");
    reject_unknown(n, "noise", {"kind", "shape", "tail"});
    if (n.contains("kind")) {
      if (!n.at("kind").is_string()) {
        throw ArgumentError("noise.kind must be a string");
      }
      s.noise_kind = n.at("kind").get<std::string>();
    }
    if (n.contains("shape")) {
      s.noise_shape = number(n.at("shape"), "noise.shape");
    }
    if (n.contains("tail") && !n.at("tail").is_null()) {
      const json& t = n.at("tail");
      reject_unknown(t, "noise.tail", {"b1", "b2", "alpha", "bounded", "support"});
      TailTriple tail;
      tail.b1 = number(field(t, "noise.tail", "b1"), "noise.tail.b1");
      tail.b2 = number(field(t, "noise.tail", "b2"), "noise.tail.b2");
      tail.alpha = number(field(t, "noise.tail", "alpha"), "noise.tail.alpha");
      if (t.contains("bounded")) {
        if (!t.at("bounded").is_boolean()) {
          throw ArgumentError("noise.tail.bounded must be a boolean");
        }
        tail.bounded = t.at("bounded").get<bool>();
      }
      if (t.contains("support")) {
        tail.support = number(t.at("support"), "noise.tail.support");
      }
      if (!(tail.b1 > 0.0 && tail.b2 > 0.0 && tail.alpha > 0.0)) {
        throw ArgumentError("noise.tail entries must be positive");
      }
      s.tail_override = tail;
    }
  }

  s.set_A = s.A;
  s.set_B = s.B;
  if (j.contains("theta0_set")) {
    const json& t = j.at("theta0_set");
    reject_unknown(t, "theta0_set", {"center_A", "center_B", "radius"});
    if (t.contains("center_A")) {
      s.set_A = matrix(t.at("center_A"), s.p, s.p, "theta0_set.center_A");
    }
    if (t.contains("center_B")) {
      s.set_B = matrix(t.at("center_B"), s.p, s.r, "theta0_set.center_B");
    }
    if (t.contains("radius")) {
      s.set_radius = number(t.at("radius"), "theta0_set.radius");
    }
  }

  if (j.contains("algorithm")) {
    const json& a = j.at("algorithm");
    reject_unknown(a, "algorithm", {"delta", "gamma", "scale", "radius_scale", "samples", "tolerance",
                                       "inject_true_theta"});
    if (a.contains("delta")) s.delta = number(a.at("delta"), "algorithm.delta");
    if (a.contains("gamma")) s.gamma = number(a.at("gamma"), "algorithm.gamma");
    if (a.contains("scale")) s.scale = number(a.at("scale"), "algorithm.scale");
    if (a.contains("radius_scale") && !a.at("radius_scale").is_null()) {
      s.radius_scale = number(a.at("radius_scale"), "algorithm.radius_scale");
    }
    if (a.contains("samples")) {
      const long k = integer(a.at("samples"), "algorithm.samples");
      if (k < 1 || k > 1000000) {
        throw ArgumentError("algorithm.samples must lie in [1, 1e6]");
      }
      s.samples = static_cast<int>(k);
    }
    if (a.contains("tolerance")) s.tolerance = number(a.at("tolerance"), "algorithm.tolerance");
    if (a.contains("inject_true_theta")) {
      if (!a.at("inject_true_theta").is_boolean()) {
        throw ArgumentError("algorithm.inject_true_theta must be a boolean");
      }
      s.inject_true_theta = a.at("inject_true_theta").get<bool>();
    }
  }

  s.x0 = VectorXd::Zero(s.p);
  if (j.contains("run")) {
    const json& run = j.at("run");
    reject_unknown(run, "run", {"T", "T_grid", "seeds", "seed", "x0"});
    if (run.contains("T")) s.T = integer(run.at("T"), "run.T");
    if (run.contains("T_grid")) {
      if (!run.at("T_grid").is_array()) {
        throw ArgumentError("run.T_grid must be an array");
      }
      for (const auto& t : run.at("T_grid")) {
        s.T_grid.push_back(integer(t, "run.T_grid"));
      }
    }
    if (run.contains("seeds")) {
      const long k = integer(run.at("seeds"), "run.seeds");
      if (k < 1 || k > 1000000) {
        throw ArgumentError("run.seeds must lie in [1, 1e6]");
      }
      s.seeds = static_cast<int>(k);
    }
    if (run.contains("seed")) {
      if (!run.at("seed").is_number_unsigned()) {
        throw ArgumentError("run.seed must be a nonnegative integer");
      }
      s.seed = run.at("seed").get<std::uint64_t>();
    }
    if (run.contains("x0")) {
      s.x0 = matrix(run.at("x0"), s.p, 1, "run.x0");
    }
  }

  if (j.contains("verify")) {
    const json& v = j.at("verify");
    reject_unknown(v, "verify", {"trials", "replications", "n", "epsilon", "limit_n", "L"});
    if (v.contains("trials")) s.trials = integer(v.at("trials"), "verify.trials");
    if (v.contains("replications")) s.replications = integer(v.at("replications"), "verify.replications");
    if (v.contains("n")) s.verify_n = integer(v.at("n"), "verify.n");
    if (v.contains("epsilon") && !v.at("epsilon").is_null()) s.epsilon = number(v.at("epsilon"), "verify.epsilon");
    if (v.contains("limit_n")) s.limit_n = integer(v.at("limit_n"), "verify.limit_n");
    if (v.contains("L") && !v.at("L").is_null()) s.verify_L = matrix(v.at("L"), s.r, s.p, "verify.L");
  }

  if (j.contains("policy")) {
    const json& pol = j.at("policy");
    reject_unknown(pol, "policy", {"fixed_gain", "ce_warmup", "ce_update_period"});
    if (pol.contains("fixed_gain") && !pol.at("fixed_gain").is_null()) {
      s.fixed_gain = matrix(pol.at("fixed_gain"), s.r, s.p, "policy.fixed_gain");
    }
    if (pol.contains("ce_warmup")) s.ce_warmup = integer(pol.at("ce_warmup"), "policy.ce_warmup");
    if (pol.contains("ce_update_period")) {
      s.ce_update_period = integer(pol.at("ce_update_period"), "policy.ce_update_period");
    }
  }

  if (j.contains("output")) {
    const json& o = j.at("output");
    reject_unknown(o, "output", {"directory", "formats"});
    if (o.contains("directory")) {
      if (!o.at("directory").is_string()) {
        throw ArgumentError("output.directory must be a string");
      }
      s.output_directory = o.at("directory").get<std::string>();
    }
    if (o.contains("formats")) {
      if (!o.at("formats").is_array()) {
        throw ArgumentError("output.formats must be an array");
      }
      s.formats.clear();
      for (const auto& f : o.at("formats")) {
        if (!f.is_string()) {
          throw ArgumentError("output.formats entries must be strings");
        }
        s.formats.push_back(f.get<std::string>());
      }
    }
  }

  validate(s);
  return s;
}

json to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["system"] = {{"p", s.p}, {"r", s.r},         {"A", flat(s.A)}, {"B", flat(s.B)},
                 {"Q", flat(s.Q)}, {"R", flat(s.R)}, {"C", flat(s.C)}};
  json noise = {{"kind", s.noise_kind}, {"shape", s.noise_shape}, {"tail", nullptr}};
  if (s.tail_override) {
    const TailTriple& t = *s.tail_override;
    noise["tail"] = {{"b1", t.b1}, {"b2", t.b2}, {"alpha", t.alpha}, {"bounded", t.bounded}, {"support", t.support}};
  }
  j["noise"] = noise;
  j["theta0_set"] = {{"center_A", flat(s.set_A)}, {"center_B", flat(s.set_B)}, {"radius", s.set_radius}};
  j["algorithm"] = {{"delta", s.delta},
                    {"gamma", s.gamma},
                    {"scale", s.scale},
                    {"radius_scale", s.radius_scale ? json(*s.radius_scale) : json(nullptr)},
                    {"samples", s.samples},
                    {"tolerance", s.tolerance},
                    {"inject_true_theta", s.inject_true_theta}};
  j["run"] = {{"T", s.T}, {"T_grid", s.T_grid}, {"seeds", s.seeds}, {"seed", s.seed}, {"x0", flat(s.x0)}};
  j["verify"] = {{"trials", s.trials},
                 {"replications", s.replications},
                 {"n", s.verify_n},
                 {"epsilon", s.epsilon ? json(*s.epsilon) : json(nullptr)},
                 {"limit_n", s.limit_n},
                 {"L", s.verify_L ? flat(*s.verify_L) : json(nullptr)}};
  j["policy"] = {{"fixed_gain", s.fixed_gain ? flat(*s.fixed_gain) : json(nullptr)},
                 {"ce_warmup", s.ce_warmup},
                 {"ce_update_period", s.ce_update_period}};
  j["output"] = {{"directory", s.output_directory}, {"formats", s.formats}};
  return j;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ArgumentError("cannot open scenario file " + path);
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ArgumentError("scenario file " + path + " is not valid JSON: " + e.what());
  }
  return parse_scenario(j);
}

namespace {

MatrixXd mat(int rows, int cols, std::initializer_list<double> values) {
  MatrixXd M(rows, cols);
  auto it = values.begin();
  for (int i = 0; i < rows; ++i) {
    for (int k = 0; k < cols; ++k) {
      M(i, k) = *it++;
    }
  }
  return M;
}

Scenario scalar_reference() {
  Scenario s;
  s.name = "scalar-reference";
  s.p = 1;
  s.r = 1;
  s.A = mat(1, 1, {0.9});
  s.B = mat(1, 1, {1.0});
  s.Q = mat(1, 1, {1.0});
  s.R = mat(1, 1, {1.0});
  s.C = mat(1, 1, {1.0});
  s.set_A = mat(1, 1, {0.95});
  s.set_B = mat(1, 1, {1.05});
  s.set_radius = 0.3;
  s.delta = 0.05;
  s.scale = 1e-5;
  s.T = 10000;
  s.T_grid = {1000, 3162, 10000, 31623, 100000};
  s.seeds = 50;
  s.x0 = VectorXd::Zero(1);
  s.trials = 2000;
  s.replications = 1000;
  s.verify_n = 100;
  s.ce_warmup = 10;
  s.ce_update_period = 100;
  return s;
}

Scenario t1_verifiable() {
  Scenario s;
  s.name = "t1-verifiable";
  s.p = 1;
  s.r = 1;
  s.A = mat(1, 1, {0.0});
  s.B = mat(1, 1, {1.0});
  s.Q = mat(1, 1, {1.0});
  s.R = mat(1, 1, {1.0});
  s.C = mat(1, 1, {1.0});
  s.noise_kind = "uniform_bounded";
  s.set_A = mat(1, 1, {0.0});
  s.set_B = mat(1, 1, {1.0});
  s.set_radius = 0.2;
  s.delta = 0.1;
  s.T = 10000;
  s.x0 = VectorXd::Zero(1);
  s.trials = 1000;
  s.epsilon = 0.5;
  s.limit_n = 100000;
  s.verify_L = mat(1, 1, {0.0});
  return s;
}

Scenario two_by_one() {
  Scenario s;
  s.name = "two-by-one";
  s.p = 2;
  s.r = 1;
  s.A = mat(2, 2, {0.9, 0.2, 0.0, 0.7});
  s.B = mat(2, 1, {1.0, 0.5});
  s.Q = MatrixXd::Identity(2, 2);
  s.R = mat(1, 1, {1.0});
  s.C = MatrixXd::Identity(2, 2);
  s.set_A = mat(2, 2, {0.93, 0.2, 0.0, 0.72});
  s.set_B = mat(2, 1, {1.03, 0.5});
  s.set_radius = 0.15;
  s.delta = 0.05;
  s.scale = 1e-5;
  s.T = 10000;
  s.T_grid = {1000, 3162, 10000, 31623, 100000};
  s.seeds = 50;
  s.x0 = VectorXd::Zero(2);
  s.trials = 2000;
  s.replications = 1000;
  s.ce_warmup = 20;
  s.ce_update_period = 100;
  return s;
}

Scenario a_zero() {
  Scenario s;
  s.name = "a-zero";
  s.p = 2;
  s.r = 2;
  s.A = MatrixXd::Zero(2, 2);
  s.B = MatrixXd::Identity(2, 2);
  s.Q = MatrixXd::Identity(2, 2);
  s.R = MatrixXd::Identity(2, 2);
  s.C = MatrixXd::Identity(2, 2);
  s.set_A = s.A;
  s.set_B = s.B;
  s.set_radius = 0.0;
  s.T = 1000;
  s.x0 = VectorXd::Zero(2);
  return s;
}

Scenario non_stabilizable() {
  Scenario s;
  s.name = "non-stabilizable";
  s.p = 1;
  s.r = 1;
  s.A = mat(1, 1, {2.0});
  s.B = mat(1, 1, {0.0});
  s.Q = mat(1, 1, {1.0});
  s.R = mat(1, 1, {1.0});
  s.C = mat(1, 1, {1.0});
  s.set_A = s.A;
  s.set_B = s.B;
  s.set_radius = 0.0;
  s.T = 100;
  s.x0 = VectorXd::Zero(1);
  return s;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"scalar-reference", "t1-verifiable", "two-by-one", "a-zero", "non-stabilizable"};
}

Scenario preset(const std::string& name) {
  Scenario s;
  if (name == "scalar-reference") {
    s = scalar_reference();
  } else if (name == "t1-verifiable") {
    s = t1_verifiable();
  } else if (name == "two-by-one") {
    s = two_by_one();
  } else if (name == "a-zero") {
    s = a_zero();
  } else if (name == "non-stabilizable") {
    s = non_stabilizable();
  } else {
    throw ArgumentError("unknown preset " + name);
  }
  validate(s);
  return s;
}

std::string config_hash(const Scenario& s) {
  const std::string text = to_json(s).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

DynamicsParameter scenario_theta(const Scenario& s) { return DynamicsParameter(s.A, s.B); }

CostPair scenario_cost(const Scenario& s) { return CostPair(s.Q, s.R); }

NoiseModel scenario_noise(const Scenario& s) {
  NoiseModel noise = [&] {
    if (s.noise_kind == "gaussian") {
      return NoiseModel::gaussian(s.C);
    }
    if (s.noise_kind == "weibull_symmetric") {
      return NoiseModel::weibull_symmetric(s.C, s.noise_shape);
    }
    if (s.noise_kind == "uniform_bounded") {
      return NoiseModel::uniform_bounded(s.C);
    }
    if (s.noise_kind == "zero") {
      return NoiseModel::zero(s.p);
    }
    throw ArgumentError("noise.kind must be gaussian, weibull_symmetric, uniform_bounded or zero");
  }();
  if (s.tail_override) {
    noise.set_tail_override(*s.tail_override);
  }
  return noise;
}

ParameterRegion scenario_region(const Scenario& s) {
  return ParameterRegion(DynamicsParameter(s.set_A, s.set_B), s.set_radius);
}

AlgorithmConfig scenario_algorithm(const Scenario& s) {
  AlgorithmConfig config;
  config.delta = s.delta;
  config.gamma = s.gamma;
  config.scale = s.scale;
  config.radius_scale = s.radius_scale;
  config.samples = s.samples;
  config.tolerance = s.tolerance;
  config.inject_true_theta = s.inject_true_theta;
  return config;
}

}  // namespace ofulq
