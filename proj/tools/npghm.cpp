// Command-line front end: train, sweep, verify, report, exact.

#include "npghm/algorithms.hpp"
#include "npghm/config.hpp"
#include "npghm/experiment.hpp"
#include "npghm/oracles.hpp"
#include "npghm/specs.hpp"
#include "npghm/verification.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

namespace {

using namespace npghm;

constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAbort = 3;

struct RunOptions {
  std::string config;
  std::string env;
  std::string alg;
  std::string seeds;
  std::optional<int> T;
  std::optional<long> budget;
  std::string out;
  std::optional<int> threads;
  std::string solver;
  std::vector<std::string> sets;  // raw key=value overrides
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--config", o.config, "key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--env", o.env, "environment (chainN, random:SxA:SEED, bandit:R0,R1, pointmass, file:PATH)");
  cmd->add_option("--alg", o.alg, "algorithm list: npg-hm, pg, harpg, mnpg, or all");
  cmd->add_option("--seeds", o.seeds, "seed list, e.g. 1,2,3 or 1-10");
  cmd->add_option("--T", o.T, "iterations per run");
  cmd->add_option("--budget", o.budget, "trajectory budget per run (derives T per algorithm)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--threads", o.threads, "worker threads");
  cmd->add_option("--solver", o.solver, "sub-problem solver: sgd, adam, exact, auto");
  cmd->add_option("--set", o.sets, "extra key=value override (repeatable)");
}

KeyValueConfig build_config(const RunOptions& o) {
  KeyValueConfig cfg = o.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(o.config);
  if (!o.env.empty()) cfg.set("env", o.env);
  if (!o.alg.empty()) cfg.set("run.algorithms", o.alg);
  if (!o.seeds.empty()) cfg.set("run.seeds", o.seeds);
  if (o.T) cfg.set("run.T", std::to_string(*o.T));
  if (o.budget) cfg.set("run.budget", std::to_string(*o.budget));
  if (!o.out.empty()) cfg.set("output.dir", o.out);
  if (o.threads) cfg.set("output.threads", std::to_string(*o.threads));
  if (!o.solver.empty()) cfg.set("subproblem.solver", o.solver);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

std::string cell_text(const nlohmann::json& stats) {
  if (!stats.is_object() || !stats.contains("median") || stats["median"].is_null()) return "-";
  std::ostringstream out;
  out << std::setprecision(5) << stats["median"].get<double>() << " (IQR "
      << std::setprecision(3) << stats["iqr"].get<double>() << ")";
  return out.str();
}

void print_summary(const nlohmann::json& summary, std::ostream& out) {
  out << "env: " << summary.value("env_description", summary.value("env", std::string("?"))) << "\n";
  if (summary.contains("j_star")) {
    out << "J*: " << summary["j_star"].get<double>() << "  initial gap: " << summary["initial_gap"].get<double>()
        << "\n";
  }
  if (summary.contains("lqr_reference_return")) {
    out << "LQR reference return: " << summary["lqr_reference_return"].get<double>() << "\n";
  }
  out << std::left << std::setw(8) << "alg" << std::setw(10) << "alpha0" << std::setw(8) << "T"
      << std::setw(14) << "trajectories" << std::setw(26) << "final J_hat" << std::setw(26)
      << "final gap" << "aborted\n";
  for (const auto& [name, entry] : summary["algorithms"].items()) {
    std::ostringstream alpha;
    alpha << std::setprecision(4) << entry["alpha0"].get<double>();
    out << std::left << std::setw(8) << name << std::setw(10) << alpha.str() << std::setw(8)
        << entry["T"].get<int>() << std::setw(14) << entry["trajectories_per_run"].get<long>()
        << std::setw(26) << cell_text(entry["final_j_hat"]) << std::setw(26)
        << cell_text(entry.value("final_gap", nlohmann::json())) << entry["aborted_runs"].get<int>();
    if (entry.contains("flagged_importance_weights")) {
      out << "  (flagged IS weights: " << entry["flagged_importance_weights"].get<int>() << ")";
    }
    out << "\n";
  }
}

int cmd_train(const RunOptions& o) {
  const KeyValueConfig cfg = build_config(o);
  const ExperimentSpec spec = experiment_from_config(cfg);
  const AnyEnv env = make_env(spec.env, cfg);
  const AnyPolicy policy = make_policy(env, spec.policy);
  const ExperimentOutcome res = run_experiment(spec, env, policy);
  print_summary(res.summary, std::cout);
  std::cout << "outputs: " << resolve_output_dir(spec.output_dir) << "\n";
  if (res.aborted) {
    for (const auto& cell : res.cells) {
      if (cell.abort_message.empty()) continue;
      std::cerr << "numerical abort (" << to_string(cell.algorithm) << ", seed " << cell.seed
                << "): " << cell.abort_message << "; diagnostic: " << cell.abort_path << "\n";
    }
    return kExitAbort;
  }
  return 0;
}

int cmd_sweep(const RunOptions& o) {
  const KeyValueConfig cfg = build_config(o);
  const ExperimentSpec spec = experiment_from_config(cfg);
  const AnyEnv env = make_env(spec.env, cfg);
  const AnyPolicy policy = make_policy(env, spec.policy);
  const SweepOutcome res = run_sweep(spec, env, policy);
  std::cout << std::left << std::setw(8) << "alg" << std::setw(10) << "alpha0" << std::setw(7) << "tau0"
            << std::setw(8) << "K" << std::setw(16) << "median gap" << "median J_hat\n";
  for (const auto& row : res.rows) {
    std::cout << std::left << std::setw(8) << to_string(row.algorithm) << std::setw(10)
              << format_number(row.alpha0) << std::setw(7) << row.tau0 << std::setw(8) << row.k
              << std::setw(16) << format_number(row.median_final_gap)
              << format_number(row.median_final_j_hat) << "\n";
  }
  if (!res.rows.empty()) {
    const SweepRow& best = res.rows[res.best];
    std::cout << "best: " << to_string(best.algorithm) << " alpha0=" << format_number(best.alpha0)
              << " tau0=" << best.tau0 << " K=" << best.k << "\n";
  }
  std::cout << "outputs: " << resolve_output_dir(spec.output_dir) << "\n";
  return 0;
}

int cmd_verify(const std::vector<std::string>& only, bool acceptance, const std::string& report) {
  std::vector<std::string> filters;
  for (const auto& item : only) {
    for (auto& f : split_list(item)) filters.push_back(f);
  }
  const auto checks = acceptance ? acceptance_checks() : verification_checks();
  const auto results = run_checks(checks, filters, &std::cout);
  const auto failed = std::count_if(results.begin(), results.end(), [](const CheckResult& r) { return !r.pass; });
  std::cout << results.size() - failed << "/" << results.size() << " checks passed\n";
  if (!report.empty()) {
    std::ofstream out(report);
    if (!out) throw ConfigError("cannot write report '" + report + "'");
    out << to_json(results).dump(2) << "\n";
  }
  return failed == 0 ? 0 : kExitVerifyFailed;
}

int cmd_report(const std::string& dir) {
  const auto path = std::filesystem::path(dir) / "summary.json";
  std::ifstream in(path);
  if (!in) throw ConfigError("no summary.json in '" + dir + "'");
  nlohmann::json summary;
  try {
    summary = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  print_summary(summary, std::cout);
  return 0;
}

int cmd_exact(const std::string& env_spec, const std::string& policy_path) {
  const AnyEnv env = make_env(env_spec);
  const auto* mdp = std::get_if<TabularMdp>(&env);
  if (!mdp) throw ConfigError("exact quantities need a tabular environment");
  TabularSoftmaxPolicy policy(mdp->n_states(), mdp->n_actions());
  if (!policy_path.empty()) {
    const AnyPolicy loaded = load_policy(policy_path);
    const auto* sm = std::get_if<TabularSoftmaxPolicy>(&loaded);
    if (!sm || sm->n_states() != mdp->n_states() || sm->n_actions() != mdp->n_actions()) {
      throw ConfigError("policy does not match the environment");
    }
    policy = *sm;
  }
  std::cout << to_json(compute_exact(*mdp, policy)).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Natural policy gradient with Hessian-aided momentum"};
  app.require_subcommand(1);

  RunOptions train_opts;
  auto* train = app.add_subcommand("train", "run algorithms on an environment and write metrics");
  add_run_options(train, train_opts);

  RunOptions sweep_opts;
  auto* sweep = app.add_subcommand("sweep", "grid over sweep.alpha0 x sweep.tau0 x sweep.K");
  add_run_options(sweep, sweep_opts);

  std::vector<std::string> only;
  bool acceptance = false;
  std::string report_path;
  auto* verify = app.add_subcommand("verify", "run the numerical checks");
  verify->add_option("--only", only, "check names or modules (comma separated, repeatable)");
  verify->add_flag("--acceptance", acceptance, "run only the ten acceptance criteria");
  verify->add_option("--report", report_path, "write results as JSON");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "summarize a finished run directory");
  report->add_option("dir", report_dir, "output directory of a train run")->required();

  std::string exact_env = "chain5";
  std::string exact_policy;
  auto* exact = app.add_subcommand("exact", "print exact V, Q, A, d, grad J and FIM as JSON");
  exact->add_option("--env", exact_env, "tabular environment spec");
  exact->add_option("--policy", exact_policy, "policy file (default: uniform)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(train_opts);
    if (*sweep) return cmd_sweep(sweep_opts);
    if (*verify) return cmd_verify(only, acceptance, report_path);
    if (*report) return cmd_report(report_dir);
    if (*exact) return cmd_exact(exact_env, exact_policy);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
