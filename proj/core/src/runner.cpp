#include "ivbandit/runner.hpp"

#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <utility>

#include <json.hpp>

#include "ivbandit/algorithms.hpp"
#include "ivbandit/errors.hpp"
#include "ivbandit/plots.hpp"

namespace ivb {

namespace {

constexpr const char* kHeader =
    "instance_id,algorithm,trial,seed,samples,correct,recommended,wall_ms";

struct Job {
  int inst = 0;
  int algo = 0;
  int trial = 0;
};

// Per-step success tallies. Integer sums commute, so any worker schedule
// produces the same curve.
struct CurveAccum {
  std::vector<long long> correct_at;
  long long trials = 0;
};

bool is_per_step(const std::string& name) { return name == "ucb-ols" || name == "ucb-iv"; }

std::string trace_obj(const std::string& inst, const std::string& algo, int trial, int k,
                      double zeta, long long n, int active, const char* kind) {
  nlohmann::json j;
  j["instance"] = inst;
  j["algorithm"] = algo;
  j["trial"] = trial;
  j["k"] = k;
  j["zeta"] = zeta;
  j["N"] = n;
  j["active"] = active;
  j["kind"] = kind;
  return j.dump();
}

void run_one(const ProblemInstance& inst, const AlgorithmSpec& spec, int trial,
             std::uint64_t master, ResultRow& row, std::vector<std::string>* traces,
             CurveAccum* curve, std::mutex& curve_mu) {
  row.instance_id = inst.id;
  row.algorithm = spec.name;
  row.trial = trial;
  row.seed = trial_seed(master, inst.id, spec.name, trial);
  row.wall_ms = 0;
  Rng rng(row.seed);
  const AlgoParams params = resolve_params(spec.params, inst);
  try {
    if (is_per_step(spec.name)) {
      const auto rec = spec.name == "ucb-ols" ? Recommender::OLS : Recommender::IV;
      const auto trace = run_ucb_baseline(inst, spec.horizon, rec, rng);
      const int best = best_arm(inst).index;
      row.samples = spec.horizon;
      row.recommended = trace.back();
      row.correct = row.recommended == best;
      if (traces)
        traces->push_back(trace_obj(inst.id, spec.name, trial, 0, 0.0, spec.horizon,
                                    int(inst.W.size()), "horizon"));
      if (curve) {
        std::lock_guard<std::mutex> lk(curve_mu);
        if (curve->correct_at.size() < trace.size()) curve->correct_at.resize(trace.size(), 0);
        for (size_t s = 0; s < trace.size(); ++s) curve->correct_at[s] += trace[s] == best;
        curve->trials++;
      }
      return;
    }

    TrialResult res;
    if (spec.name == "cpeg") {
      res = run_cpeg(inst, params, rng);
    } else if (spec.name == "cpeug") {
      res = run_cpeug(inst, params, rng);
    } else if (spec.name == "cpeg-plugin") {
      // Offline first stage: a uniform block per instrument, both fit and
      // counted against the trial.
      const int d = inst.X_dim;
      const std::vector<long long> counts(inst.Z.size(), spec.offline_per_arm);
      const auto stats = collect_rounds(inst, counts, rng, params.sampling);
      const Matrix gamma_hat = fit_gamma_ols(stats);
      const long long offline_rows = spec.offline_per_arm * (long long)inst.Z.size();
      Matrix z1(offline_rows, d);
      long long at = 0;
      for (const auto& z : inst.Z)
        for (long long c = 0; c < spec.offline_per_arm; ++c) z1.row(at++) = z.transpose();
      res = run_cpeg_plugin(inst, gamma_hat, z1, params, rng).trial;
      res.total_samples += offline_rows;
      if (traces)
        traces->push_back(trace_obj(inst.id, spec.name, trial, 0, 0.0, offline_rows,
                                    int(inst.W.size()), "offline"));
    } else if (spec.name == "static-oracle") {
      res = run_static_baseline(inst, StaticKind::Oracle, params, rng);
    } else if (spec.name == "static-xy") {
      res = run_static_baseline(inst, StaticKind::XY, params, rng);
    } else if (spec.name == "static-uniform") {
      res = run_static_baseline(inst, StaticKind::Uniform, params, rng);
    } else if (spec.name == "static-se") {
      res = run_static_baseline(inst, StaticKind::SE, params, rng);
    } else {
      throw ValidationError("unknown algorithm '" + spec.name + "'");
    }
    row.samples = res.total_samples;
    row.recommended = res.recommended;
    row.correct = res.correct;
    if (traces)
      for (const auto& ph : res.phases)
        traces->push_back(trace_obj(inst.id, spec.name, trial, ph.k, ph.zeta, ph.N,
                                    int(ph.active_set.size()),
                                    ph.kind == PhaseKind::GammaPhase ? "gamma" : "theta"));
  } catch (const CapExceeded& e) {
    row.samples = e.samples_used;
    row.recommended = -1;
    row.correct = false;
    if (traces)
      traces->push_back(
          trace_obj(inst.id, spec.name, trial, e.phases_done, 0.0, e.samples_used, -1, "capped"));
  }
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t master, const std::string& instance_id,
                         const std::string& algorithm, int trial) {
  return seed_hash(master, fnv1a64(instance_id + "/" + algorithm), std::uint64_t(trial));
}

ResultsTable run_experiment(const ExperimentConfig& cfg, int workers, RunArtifacts* artifacts) {
  if (cfg.instances.empty()) throw ValidationError("config has no instances");
  if (cfg.algorithms.empty()) throw ValidationError("config has no algorithms");
  if (cfg.trials < 1) throw ValidationError("trials must be >= 1");
  for (const auto& a : cfg.algorithms) {
    bool known = false;
    for (const auto& n : known_algorithms()) known |= n == a.name;
    if (!known) throw ValidationError("unknown algorithm '" + a.name + "'");
  }

  std::vector<Job> jobs;
  for (int i = 0; i < int(cfg.instances.size()); ++i)
    for (int a = 0; a < int(cfg.algorithms.size()); ++a)
      for (int t = 0; t < cfg.trials; ++t) jobs.push_back({i, a, t});

  ResultsTable table;
  table.rows.resize(jobs.size());
  std::vector<std::vector<std::string>> job_traces(artifacts ? jobs.size() : 0);

  // Curve slots fixed up front; workers only mutate values, under the mutex.
  std::map<std::pair<int, int>, CurveAccum> curves;
  std::mutex curve_mu;
  if (artifacts)
    for (int i = 0; i < int(cfg.instances.size()); ++i)
      for (int a = 0; a < int(cfg.algorithms.size()); ++a)
        if (is_per_step(cfg.algorithms[a].name)) curves[{i, a}];

  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto work = [&] {
    for (;;) {
      const size_t idx = next.fetch_add(1);
      if (idx >= jobs.size()) return;
      const Job& jb = jobs[idx];
      try {
        const auto it = curves.find({jb.inst, jb.algo});
        run_one(cfg.instances[jb.inst], cfg.algorithms[jb.algo], jb.trial, cfg.master_seed,
                table.rows[idx], artifacts ? &job_traces[idx] : nullptr,
                it != curves.end() ? &it->second : nullptr, curve_mu);
      } catch (...) {
        std::lock_guard<std::mutex> lk(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };

  const int n_workers = std::max(1, workers);
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(size_t(n_workers));
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  if (artifacts) {
    for (auto& lines : job_traces)
      for (auto& line : lines) artifacts->trace_lines.push_back(std::move(line));
    const bool multi = cfg.instances.size() > 1;
    for (auto& [key, acc] : curves) {
      if (acc.trials == 0) continue;
      SuccessCurve c;
      c.algorithm = multi ? cfg.instances[key.first].id + "/" + cfg.algorithms[key.second].name
                          : cfg.algorithms[key.second].name;
      c.step = 1;
      c.success_at.resize(acc.correct_at.size());
      for (size_t s = 0; s < acc.correct_at.size(); ++s)
        c.success_at[s] = double(acc.correct_at[s]) / double(acc.trials);
      artifacts->curves.push_back(std::move(c));
    }
  }
  return table;
}

std::string results_csv(const ResultsTable& table) {
  std::string out = kHeader;
  out += '\n';
  for (const auto& r : table.rows) {
    out += r.instance_id;
    out += ',';
    out += r.algorithm;
    out += ',';
    out += std::to_string(r.trial);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += std::to_string(r.samples);
    out += ',';
    out += r.correct ? '1' : '0';
    out += ',';
    out += std::to_string(r.recommended);
    out += ',';
    out += std::to_string(r.wall_ms);
    out += '\n';
  }
  return out;
}

ResultsTable parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kHeader)
    throw ParseError("results CSV: bad or missing header");
  ResultsTable table;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    size_t start = 0;
    for (size_t i = 0; i <= line.size(); ++i)
      if (i == line.size() || line[i] == ',') {
        f.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    if (f.size() != 8)
      throw ParseError("results CSV line " + std::to_string(lineno) + ": expected 8 fields");
    try {
      ResultRow r;
      r.instance_id = f[0];
      r.algorithm = f[1];
      r.trial = std::stoi(f[2]);
      r.seed = std::stoull(f[3]);
      r.samples = std::stoll(f[4]);
      r.correct = f[5] == "1";
      r.recommended = std::stoi(f[6]);
      r.wall_ms = std::stoll(f[7]);
      table.rows.push_back(std::move(r));
    } catch (const std::exception&) {
      throw ParseError("results CSV line " + std::to_string(lineno) + ": malformed number");
    }
  }
  return table;
}

std::string summary_json(const ResultsTable& table) {
  std::set<std::string> ids;
  for (const auto& r : table.rows) ids.insert(r.instance_id);
  const bool multi = ids.size() > 1;

  struct Agg {
    std::vector<double> samples;
    long long correct = 0;
  };
  std::map<std::string, Agg> by_key;
  for (const auto& r : table.rows) {
    auto& agg = by_key[multi ? r.instance_id + "/" + r.algorithm : r.algorithm];
    agg.samples.push_back(double(r.samples));
    agg.correct += r.correct ? 1 : 0;
  }

  nlohmann::json out = nlohmann::json::object();
  for (const auto& [key, agg] : by_key) {
    const size_t n = agg.samples.size();
    double mean = 0.0;
    for (double s : agg.samples) mean += s;
    mean /= double(n);
    double var = 0.0;
    for (double s : agg.samples) var += (s - mean) * (s - mean);
    const double stdev = n > 1 ? std::sqrt(var / double(n - 1)) : 0.0;
    out[key] = {{"mean_samples", mean},
                {"std_samples", stdev},
                {"success_rate", double(agg.correct) / double(n)},
                {"n", n}};
  }
  return out.dump(2) + "\n";
}

void write_outputs(const ResultsTable& table, const std::string& dir,
                   const RunArtifacts* artifacts, bool emit_svg) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IOError("cannot create output directory " + dir + ": " + ec.message());
  const auto write_file = [&](const char* name, const std::string& content) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    out << content;
    if (!out) throw IOError(std::string("cannot write ") + name + " in " + dir);
  };
  write_file("results.csv", results_csv(table));
  write_file("summary.json", summary_json(table));
  if (artifacts && !artifacts->trace_lines.empty()) {
    std::string body;
    for (const auto& line : artifacts->trace_lines) {
      body += line;
      body += '\n';
    }
    write_file("trace.jsonl", body);
  }
  if (emit_svg && !table.rows.empty()) {
    write_file("samples_bar.svg", svg_samples_bar(table));
    if (artifacts && !artifacts->curves.empty())
      write_file("success_vs_horizon.svg", svg_success_vs_horizon(table, artifacts->curves));
  }
}

}  // namespace ivb
