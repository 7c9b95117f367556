#include "ivbandit/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "ivbandit/algorithms.hpp"
#include "ivbandit/config.hpp"
#include "ivbandit/design.hpp"
#include "ivbandit/errors.hpp"
#include "ivbandit/presets.hpp"
#include "ivbandit/runner.hpp"

namespace ivb {

namespace {

std::string fmt(double v) {
  char b[64];
  std::snprintf(b, sizeof b, "%g", v);
  return b;
}

void print_design(const std::string& label, const Design& design) {
  std::cout << label << ": objective=" << fmt(design.objective_value)
            << " support=" << design.support_size << "\n";
  for (int i = 0; i < design.weights.size(); ++i)
    std::cout << "  z" << i << " " << fmt(design.weights(i)) << "\n";
}

std::vector<Vector> all_pairs(const std::vector<Vector>& W) {
  std::vector<Vector> pairs;
  for (size_t i = 0; i < W.size(); ++i)
    for (size_t j = i + 1; j < W.size(); ++j) pairs.push_back(W[i] - W[j]);
  return pairs;
}

int do_run(const std::string& config_path, int trials, long long seed, bool seed_set,
           const std::string& out, int workers, bool svg) {
  auto cfg = load_config(config_path);
  if (trials > 0) cfg.trials = trials;
  if (seed_set) cfg.master_seed = static_cast<std::uint64_t>(seed);
  if (!out.empty()) cfg.outputs = out;
  if (svg) cfg.emit_svg = true;

  RunArtifacts art;
  const bool want_art = cfg.emit_svg || cfg.emit_traces;
  const auto table = run_experiment(cfg, workers, want_art ? &art : nullptr);
  if (!cfg.emit_traces) art.trace_lines.clear();
  write_outputs(table, cfg.outputs, want_art ? &art : nullptr, cfg.emit_svg);
  std::cout << "wrote " << table.rows.size() << " rows to " << cfg.outputs << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> copy = args;
  std::vector<char*> argv;
  argv.reserve(copy.size());
  for (auto& a : copy) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

int run_cli(int argc, char** argv) {
  CLI::App app{"best-arm identification with instrumented measurements"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a configuration and write results/figures");
  std::string config_path;
  int trials = 0;
  long long seed = 0;
  std::string out;
  int workers = 1;
  bool svg = false;
  run->add_option("--config", config_path, "configuration file (.json may be omitted)")
      ->required();
  run->add_option("--trials", trials, "override the configured trial count");
  auto* seed_opt = run->add_option("--seed", seed, "override the configured master seed");
  run->add_option("--out", out, "override the configured output directory");
  run->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--svg", svg, "emit figures even if the configuration does not");

  auto* design = app.add_subcommand("design", "print an optimal allocation for a preset");
  std::string d_preset, what = "xy";
  double d_eps = 1.0;
  design->add_option("--preset", d_preset, "preset instance name")->required();
  design->add_option("--what", what, "xy: pair design, e: spread design")
      ->check(CLI::IsMember({"xy", "e"}));
  design->add_option("--eps", d_eps, "interpolation strength for exp2");

  auto* rho = app.add_subcommand("rho-star", "print the hardness constant for a preset");
  std::string r_preset;
  double r_eps = 1.0, r_gamma = 0.0;
  rho->add_option("--preset", r_preset, "preset instance name")->required();
  rho->add_option("--eps", r_eps, "interpolation strength for exp2");
  rho->add_option("--gamma", r_gamma, "first-stage floor in the gap denominator");

  auto* lam = app.add_subcommand("lambda-min", "estimate the first-stage conditioning bound");
  std::string l_preset;
  double l_eps = 1.0, l_delta = 0.1;
  long long l_seed = 0;
  lam->add_option("--preset", l_preset, "preset instance name")->required();
  lam->add_option("--eps", l_eps, "interpolation strength for exp2");
  lam->add_option("--delta", l_delta, "confidence level");
  lam->add_option("--seed", l_seed, "sampling seed");

  auto* presets = app.add_subcommand("presets", "list the built-in presets");
  presets->add_subcommand("list", "list the built-in presets");

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      return app.exit(e) == 0 ? 0 : 1;
    }

    if (app.got_subcommand(run))
      return do_run(config_path, trials, seed, seed_opt->count() > 0, out, workers, svg);

    if (app.got_subcommand(design)) {
      const auto inst = preset_instance(d_preset, d_eps);
      if (what == "xy") {
        print_design("xy " + inst.id, xy_design(all_pairs(inst.W), inst.Z, inst.gamma));
      } else {
        const auto [lambda_e, kappa0] = e_design(inst.Z);
        print_design("e " + inst.id, lambda_e);
        std::cout << "  kappa0 " << fmt(kappa0) << "\n";
      }
      return 0;
    }

    if (app.got_subcommand(rho)) {
      const auto inst = preset_instance(r_preset, r_eps);
      std::cout << "rho* " << inst.id << " gamma=" << fmt(r_gamma) << ": "
                << fmt(rho_star(inst, r_gamma)) << "\n";
      return 0;
    }

    if (app.got_subcommand(lam)) {
      const auto inst = preset_instance(l_preset, l_eps);
      AlgoParams base;
      base.delta = l_delta;
      const auto params = resolve_params(base, inst);
      Rng rng(trial_seed(static_cast<std::uint64_t>(l_seed), inst.id, "lambda-min", 0));
      const auto res = estimate_lambda_min(inst, params, rng);
      std::cout << "lambda-min lcb " << inst.id << ": " << fmt(res.lcb) << " after "
                << res.samples << " rounds, " << res.doublings << " doublings\n";
      return 0;
    }

    for (const auto& name : preset_names()) std::cout << name << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace ivb
