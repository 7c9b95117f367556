#include "ivbandit/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ivbandit/errors.hpp"
#include "ivbandit/presets.hpp"

namespace ivb {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError(where + ": " + what);
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) fail(where, "unknown key '" + it.key() + "'");
  }
}

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) fail(where, std::string("missing '") + key + "'");
  return j.at(key);
}

Vector vec_of(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a nonempty number array");
  Vector v(int(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v[int(i)] = j[i].get<double>();
  return v;
}

std::string fmt_eps(double eps) {
  char b[32];
  std::snprintf(b, sizeof b, "%g", eps);
  return b;
}

LogBarMode parse_mode(const std::string& s, const std::string& where) {
  if (s == "theoretical") return LogBarMode::Theoretical;
  if (s == "practical") return LogBarMode::Practical;
  fail(where, "log_mode must be 'theoretical' or 'practical', got '" + s + "'");
}

std::vector<ProblemInstance> parse_instance(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  const std::string kind = require(j, "kind", where).get<std::string>();
  std::vector<ProblemInstance> out;
  if (kind == "preset") {
    check_keys(j, where, {"kind", "name", "eps"});
    const std::string name = require(j, "name", where).get<std::string>();
    if (!is_preset(name)) fail(where, "unknown preset '" + name + "'");
    if (j.contains("eps"))
      out.push_back(preset_instance(name, j.at("eps").get<double>()));
    else
      out = preset_config(name).instances;
  } else if (kind == "jump-around") {
    check_keys(j, where, {"kind", "d", "theta", "sigma_u_sq", "id"});
    auto inst = make_jump_around(require(j, "d", where).get<int>(),
                                 vec_of(require(j, "theta", where), where + ".theta"),
                                 std::sqrt(require(j, "sigma_u_sq", where).get<double>()));
    if (j.contains("id")) inst.id = j.at("id").get<std::string>();
    out.push_back(std::move(inst));
  } else if (kind == "interpolation") {
    check_keys(j, where, {"kind", "d", "theta", "eps", "noise_scale", "id"});
    const auto theta = vec_of(require(j, "theta", where), where + ".theta");
    const int d = require(j, "d", where).get<int>();
    const double ns = j.value("noise_scale", 0.4);
    std::vector<double> sweep;
    const json& eps = require(j, "eps", where);
    if (eps.is_array())
      for (const auto& e : eps) sweep.push_back(e.get<double>());
    else
      sweep.push_back(eps.get<double>());
    if (sweep.empty()) fail(where, "'eps' array is empty");
    for (double e : sweep) {
      auto inst = make_interpolation(d, theta, e, ns);
      // A custom id is a prefix; the level suffix keeps sweep rows distinct.
      if (j.contains("id")) inst.id = j.at("id").get<std::string>() + "-eps" + fmt_eps(e);
      out.push_back(std::move(inst));
    }
  } else if (kind == "compliance") {
    check_keys(j, where, {"kind", "gamma", "theta", "noise_scale", "id"});
    const json& g = require(j, "gamma", where);
    if (!g.is_array() || g.empty()) fail(where, "'gamma' must be an array of rows");
    const int d = int(g.size());
    Matrix gamma(d, d);  // gamma[i][j] = P(x = e_i | z = e_j), columns sum to 1
    for (int r = 0; r < d; ++r) {
      if (!g[r].is_array() || int(g[r].size()) != d) fail(where, "'gamma' must be square");
      for (int c = 0; c < d; ++c) gamma(r, c) = g[r][c].get<double>();
    }
    NoiseSpec spec;
    if (j.contains("noise_scale")) spec.noise_scale = j.at("noise_scale").get<double>();
    auto inst = make_compliance(gamma, vec_of(require(j, "theta", where), where + ".theta"), spec);
    if (j.contains("id")) inst.id = j.at("id").get<std::string>();
    out.push_back(std::move(inst));
  } else {
    fail(where, "unknown instance kind '" + kind + "'");
  }
  return out;
}

AlgorithmSpec parse_algorithm(const json& j, const std::string& where, LogBarMode default_mode) {
  if (!j.is_object()) fail(where, "expected an object");
  check_keys(j, where,
             {"name", "delta", "omega", "gamma_min", "g", "log_mode", "max_phases",
              "max_total_samples", "L_nu", "L_eta", "theta_norm_bound", "horizon",
              "offline_per_arm"});
  AlgorithmSpec s;
  s.name = require(j, "name", where).get<std::string>();
  bool known = false;
  for (const auto& n : known_algorithms()) known |= n == s.name;
  if (!known) fail(where, "unknown algorithm '" + s.name + "'");
  s.params.log_mode = default_mode;
  if (j.contains("delta")) s.params.delta = j.at("delta").get<double>();
  if (!(s.params.delta > 0.0 && s.params.delta < 1.0)) fail(where, "delta must lie in (0,1)");
  if (j.contains("omega")) s.params.omega = j.at("omega").get<double>();
  if (j.contains("gamma_min")) s.params.gamma_min = j.at("gamma_min").get<double>();
  if (j.contains("g")) s.params.g = j.at("g").get<double>();
  if (j.contains("log_mode"))
    s.params.log_mode = parse_mode(j.at("log_mode").get<std::string>(), where);
  if (j.contains("max_phases")) s.params.max_phases = j.at("max_phases").get<int>();
  if (j.contains("max_total_samples"))
    s.params.max_total_samples = j.at("max_total_samples").get<long long>();
  if (j.contains("L_nu")) s.params.bounds.L_nu = j.at("L_nu").get<double>();
  if (j.contains("L_eta")) s.params.bounds.L_eta = j.at("L_eta").get<double>();
  if (j.contains("theta_norm_bound"))
    s.params.bounds.theta_norm_bound = j.at("theta_norm_bound").get<double>();
  if (j.contains("horizon")) s.horizon = j.at("horizon").get<long long>();
  if (s.horizon < 1) fail(where, "horizon must be >= 1");
  if (j.contains("offline_per_arm")) s.offline_per_arm = j.at("offline_per_arm").get<long long>();
  if (s.offline_per_arm < 1) fail(where, "offline_per_arm must be >= 1");
  return s;
}

}  // namespace

const std::vector<std::string>& known_algorithms() {
  static const std::vector<std::string> names = {
      "cpeg",       "cpeug",          "cpeg-plugin", "static-oracle", "static-xy",
      "static-uniform", "static-se",  "ucb-ols",     "ucb-iv"};
  return names;
}

ExperimentConfig config_from_json_text(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin + ": " + e.what());
  }
  try {
    if (!j.is_object()) fail(origin, "top level must be an object");
    check_keys(j, origin,
               {"instance", "algorithms", "trials", "master_seed", "outputs", "log_mode",
                "emit_svg", "emit_traces"});
    ExperimentConfig cfg;
    cfg.instances = parse_instance(require(j, "instance", origin), origin + ".instance");
    LogBarMode mode = LogBarMode::Practical;
    if (j.contains("log_mode"))
      mode = parse_mode(j.at("log_mode").get<std::string>(), origin + ".log_mode");
    const json& algos = require(j, "algorithms", origin);
    if (!algos.is_array() || algos.empty()) fail(origin, "'algorithms' must be a nonempty array");
    for (size_t i = 0; i < algos.size(); ++i)
      cfg.algorithms.push_back(parse_algorithm(
          algos[i], origin + ".algorithms[" + std::to_string(i) + "]", mode));
    if (j.contains("trials")) cfg.trials = j.at("trials").get<int>();
    if (cfg.trials < 1) fail(origin, "trials must be >= 1");
    if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("outputs")) cfg.outputs = j.at("outputs").get<std::string>();
    cfg.emit_svg = j.value("emit_svg", false);
    cfg.emit_traces = j.value("emit_traces", false);
    return cfg;
  } catch (const json::exception& e) {
    throw ValidationError(origin + ": " + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  namespace fs = std::filesystem;
  std::string resolved = path;
  std::error_code ec;
  if (!fs::exists(resolved, ec) && fs::exists(resolved + ".json", ec)) resolved += ".json";
  std::ifstream in(resolved, std::ios::binary);
  if (!in) throw IOError("cannot read config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str(), resolved);
}

AlgoParams resolve_params(AlgoParams base, const ProblemInstance& inst) {
  if (base.bounds.L_eta == 0.0) base.bounds.L_eta = inst.noise.L_eta;
  if (base.bounds.theta_norm_bound == 0.0) base.bounds.theta_norm_bound = inst.theta.norm();
  if (base.bounds.L_nu == 0.0)
    base.bounds.L_nu =
        sigma_nu_bound(base.bounds, inst.noise.kind == NoiseKind::ComplianceCategorical);
  // Simulation convenience: a deployment would use the warm-up estimate.
  if (base.gamma_min == 0.0)
    base.gamma_min = 0.9 * extreme_singular_values(inst.gamma).first;
  return base;
}

}  // namespace ivb
