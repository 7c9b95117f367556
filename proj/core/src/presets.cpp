#include "ivbandit/presets.hpp"

#include <cmath>
#include <cstdio>
#include <initializer_list>

#include "ivbandit/errors.hpp"

namespace ivb {

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(int(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::string fmt_eps(double eps) {
  char b[32];
  std::snprintf(b, sizeof b, "%g", eps);
  return b;
}

AlgorithmSpec algo(const std::string& name, double delta = 0.1) {
  AlgorithmSpec s;
  s.name = name;
  s.params.delta = delta;
  return s;
}

AlgorithmSpec per_step(const std::string& name, long long horizon) {
  AlgorithmSpec s;
  s.name = name;
  s.horizon = horizon;
  return s;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"motivating", "exp1-known", "exp1-unknown", "exp2"};
}

bool is_preset(const std::string& name) {
  for (const auto& n : preset_names())
    if (n == name) return true;
  return false;
}

ProblemInstance preset_instance(const std::string& name, double eps) {
  if (name == "motivating") {
    auto inst = make_jump_around(6, vec({1.0, -0.95, 0.0, 0.45, 0.95, 0.99}), std::sqrt(0.35));
    inst.id = "motivating";
    return inst;
  }
  if (name == "exp1-known") {
    auto inst = make_jump_around(6, vec({1.0, -0.95, 0.45, 0.45, 0.95, 0.45}), std::sqrt(0.275));
    inst.id = "exp1-known";
    return inst;
  }
  if (name == "exp1-unknown") {
    auto inst = make_jump_around(6, vec({1.0, -0.95, 0.45, 0.45, 0.9, 0.45}), std::sqrt(0.275));
    inst.id = "exp1-unknown";
    return inst;
  }
  if (name == "exp2") {
    auto inst = make_interpolation(4, vec({0.5, 0.583, 0.67, 0.75}), eps);
    inst.id = "exp2-eps" + fmt_eps(eps);
    return inst;
  }
  throw ValidationError("unknown preset '" + name + "'");
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig cfg;
  cfg.emit_svg = true;
  cfg.outputs = "out/" + name;
  if (name == "motivating") {
    cfg.instances = {preset_instance(name)};
    cfg.algorithms = {per_step("ucb-ols", 30000), per_step("ucb-iv", 30000), algo("cpeg")};
    cfg.trials = 100;
    cfg.master_seed = 1;
  } else if (name == "exp1-known") {
    cfg.instances = {preset_instance(name)};
    cfg.algorithms = {algo("cpeg"), algo("static-oracle"), algo("static-xy"),
                      algo("static-uniform"), algo("static-se")};
    cfg.trials = 50;
    cfg.master_seed = 2;
  } else if (name == "exp1-unknown") {
    cfg.instances = {preset_instance(name)};
    cfg.algorithms = {algo("cpeug"), algo("cpeg")};
    cfg.trials = 50;
    cfg.master_seed = 3;
  } else if (name == "exp2") {
    for (double e : {1.0, 0.9, 0.8, 0.7}) cfg.instances.push_back(preset_instance(name, e));
    cfg.algorithms = {algo("cpeg"), algo("static-se"), algo("static-xy"),
                      algo("static-uniform")};
    cfg.trials = 50;
    cfg.master_seed = 4;
  } else {
    throw ValidationError("unknown preset '" + name + "'");
  }
  return cfg;
}

}  // namespace ivb
