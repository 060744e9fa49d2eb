#include "npghm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace npghm {

namespace fs = std::filesystem;

namespace {

void append_optional(std::string& out, const std::optional<double>& v) {
  out += ',';
  if (v) out += format_number(*v);
}

std::optional<double> parse_optional(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  return parse_double(cell, "csv cell");
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

std::string vec_string(const Vec& v) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_number(v[i]);
  }
  return out;
}

/// Runs one cell for concrete env/policy types.
template <class Env, class P>
CellResult run_cell(const ExperimentSpec& spec, const Env& env, const P& policy, Algorithm alg,
                    std::uint64_t seed, double alpha0, int T) {
  RunConfig cfg = spec.run;
  cfg.T = T;
  cfg.alpha0 = alpha0;
  cfg.seed = seed;
  RunHooks<P> hooks = default_hooks<Env, P>(env, cfg);
  CellResult cell;
  cell.algorithm = alg;
  cell.seed = seed;
  cell.alpha0 = alpha0;
  cell.T = T;
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&start] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };
  if (spec.record_timing) {
    hooks.observer = [&cell, &elapsed](const IterationTrace<P>&) { cell.wall_ms.push_back(elapsed()); };
  }
  try {
    cell.run = run_algorithm(alg, env, policy, cfg, hooks);
    if (spec.record_timing) cell.wall_ms.push_back(elapsed());
  } catch (const NumericalAbort& e) {
    cell.abort_message = e.what();
    nlohmann::json diag{{"algorithm", to_string(alg)},
                        {"seed", seed},
                        {"t", e.t},
                        {"message", e.what()},
                        {"theta", vec_string(e.theta)},
                        {"momentum",
                         {{"t", e.state.t},
                          {"u", vec_string(e.state.u)},
                          {"prev_theta", vec_string(e.state.prev_theta)}}}};
    cell.abort_diagnostic = diag.dump(2);
  }
  return cell;
}

template <class Fn>
auto dispatch(const AnyEnv& env, const AnyPolicy& policy, Fn&& fn) {
  if (const auto* mdp = std::get_if<TabularMdp>(&env)) {
    if (const auto* p = std::get_if<TabularSoftmaxPolicy>(&policy)) return fn(*mdp, *p);
  } else if (const auto* pm = std::get_if<PointMassEnv>(&env)) {
    if (const auto* p = std::get_if<TruncatedLinearGaussianPolicy>(&policy)) return fn(*pm, *p);
  }
  throw ConfigError("policy kind does not match the environment");
}

RunConfig resolved_run(const ExperimentSpec& spec, const AnyEnv& env) {
  RunConfig run = spec.run;
  if (spec.solver == "auto") {
    run.subproblem.kind = std::holds_alternative<TabularMdp>(env) ? SubproblemKind::kExact
                                                                  : SubproblemKind::kSgdAverage;
  }
  return run;
}

nlohmann::json stats_json(const std::vector<double>& values) {
  return nlohmann::json{{"median", median(values)}, {"iqr", iqr(values)}, {"values", values}};
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

double iqr(std::vector<double> values) {
  return quantile(values, 0.75) - quantile(values, 0.25);
}

const std::string& csv_header() {
  static const std::string header =
      "algorithm,seed,t,trajectories,wall_ms,j_hat,gap,u_norm,w_norm,alpha,beta";
  return header;
}

std::vector<MetricsRow> metrics_rows(Algorithm alg, std::uint64_t seed, const RunResult& run,
                                     const std::vector<double>* wall_ms) {
  std::vector<MetricsRow> rows;
  rows.reserve(run.records.size());
  for (std::size_t i = 0; i < run.records.size(); ++i) {
    const IterateRecord& r = run.records[i];
    MetricsRow row;
    row.algorithm = to_string(alg);
    row.seed = seed;
    row.t = r.t;
    row.trajectories = r.trajectories;
    if (wall_ms && i < wall_ms->size()) row.wall_ms = (*wall_ms)[i];
    row.j_hat = r.j_hat;
    row.gap = r.gap;
    row.u_norm = r.u_norm;
    row.w_norm = r.w_norm;
    row.alpha = r.alpha;
    row.beta = r.beta;
    rows.push_back(row);
  }
  return rows;
}

std::string format_csv(const std::vector<MetricsRow>& rows) {
  std::string out = csv_header() + "\n";
  for (const auto& r : rows) {
    out += r.algorithm;
    out += ',' + std::to_string(r.seed) + ',' + std::to_string(r.t) + ',' +
           std::to_string(r.trajectories);
    append_optional(out, r.wall_ms);
    append_optional(out, r.j_hat);
    append_optional(out, r.gap);
    append_optional(out, r.u_norm);
    append_optional(out, r.w_norm);
    append_optional(out, r.alpha);
    append_optional(out, r.beta);
    out += '\n';
  }
  return out;
}

std::vector<MetricsRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != csv_header()) throw ConfigError("csv: unexpected header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != 11) throw ConfigError("csv: expected 11 columns in '" + line + "'");
    MetricsRow r;
    r.algorithm = cells[0];
    r.seed = parse_seed_list(cells[1]).at(0);
    r.t = parse_int(cells[2], "csv t");
    r.trajectories = parse_int(cells[3], "csv trajectories");
    r.wall_ms = parse_optional(cells[4]);
    r.j_hat = parse_optional(cells[5]);
    r.gap = parse_optional(cells[6]);
    r.u_norm = parse_optional(cells[7]);
    r.w_norm = parse_optional(cells[8]);
    r.alpha = parse_optional(cells[9]);
    r.beta = parse_optional(cells[10]);
    rows.push_back(r);
  }
  return rows;
}

double alpha0_for(const ExperimentSpec& spec, Algorithm alg, const AnyEnv& env, const AnyPolicy& policy) {
  if (const auto it = spec.alpha0_override.find(alg); it != spec.alpha0_override.end()) return it->second;
  if (spec.alpha0_explicit) return spec.run.alpha0;
  if (!spec.alpha0_theoretical) return default_alpha0(alg);
  return dispatch(env, policy, [&](const auto& e, const auto& p) {
    // Bounds at the initial policy from 2000 draws of d~.
    Rng rng = make_stream(spec.seeds.front(), Stream::kInit);
    using P = std::decay_t<decltype(p)>;
    std::vector<std::pair<typename P::State, typename P::Action>> samples;
    for (int i = 0; i < 2000; ++i) samples.push_back(sample_state_action(e, p, rng));
    const MeasuredBounds mb = measured_bounds(p, samples);
    if (!(mb.mu_f_hat > 0.0)) {
      throw ConfigError("run.alpha0 = theoretical needs a Fisher-non-degenerate policy (measured mu_F = " +
                        format_number(mb.mu_f_hat) + ")");
    }
    const int horizon = resolve_horizon(spec.run, e.gamma());
    const ConstantsBundle c = compute_constants(std::max(p.declared_mg(), mb.mg_hat),
                                                std::max(p.declared_mh(), mb.mh_hat), mb.mu_f_hat,
                                                e.gamma(), horizon);
    return theoretical_alpha0(c, spec.run.tau0);
  });
}

int iterations_for(const ExperimentSpec& spec, Algorithm alg) {
  return spec.trajectory_budget ? iterations_for_budget(alg, *spec.trajectory_budget) : spec.run.T;
}

ExperimentOutcome run_experiment(const ExperimentSpec& spec, const AnyEnv& env,
                                 const AnyPolicy& policy, bool write_files) {
  validate(spec);
  ExperimentSpec resolved = spec;
  resolved.run = resolved_run(spec, env);

  struct Job {
    Algorithm alg;
    std::uint64_t seed;
    double alpha0;
    int T;
  };
  std::vector<Job> jobs;
  for (Algorithm alg : spec.algorithms) {
    const double alpha0 = alpha0_for(resolved, alg, env, policy);
    for (std::uint64_t seed : spec.seeds) jobs.push_back({alg, seed, alpha0, iterations_for(spec, alg)});
  }

  ExperimentOutcome outcome;
  outcome.cells.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const Job& job = jobs[i];
        outcome.cells[i] = dispatch(env, policy, [&](const auto& e, const auto& p) {
          return run_cell(resolved, e, p, job.alg, job.seed, job.alpha0, job.T);
        });
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(spec.threads, static_cast<int>(jobs.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  const fs::path dir = resolve_output_dir(spec.output_dir);
  if (write_files) fs::create_directories(dir);

  nlohmann::json algs = nlohmann::json::object();
  for (Algorithm alg : spec.algorithms) {
    std::vector<double> gaps, j_hats;
    long trajectories = 0;
    int flagged = 0;
    int aborted = 0;
    double alpha0 = 0.0;
    int T = 0;
    for (auto& cell : outcome.cells) {
      if (cell.algorithm != alg) continue;
      alpha0 = cell.alpha0;
      T = cell.T;
      const std::string stem = to_string(alg) + "_seed" + std::to_string(cell.seed);
      if (!cell.abort_message.empty()) {
        ++aborted;
        outcome.aborted = true;
        if (write_files) {
          const fs::path path = dir / (stem + ".abort.json");
          write_text(path, cell.abort_diagnostic + "\n");
          cell.abort_path = path.string();
        }
        continue;
      }
      const IterateRecord& last = cell.run.records.back();
      if (last.gap) gaps.push_back(*last.gap);
      if (last.j_hat) j_hats.push_back(*last.j_hat);
      trajectories = cell.run.trajectories;
      flagged += cell.run.flagged_weights;
      if (write_files) {
        write_text(dir / (stem + ".csv"),
                   format_csv(metrics_rows(alg, cell.seed, cell.run,
                                           spec.record_timing ? &cell.wall_ms : nullptr)));
        AnyPolicy final_policy = std::visit(
            [&](const auto& p) -> AnyPolicy { return p.with_params(cell.run.theta); }, policy);
        save_policy(final_policy, (dir / (stem + ".policy")).string());
      }
    }
    nlohmann::json entry{{"alpha0", alpha0},
                         {"T", T},
                         {"trajectories_per_run", trajectories},
                         {"aborted_runs", aborted},
                         {"final_j_hat", stats_json(j_hats)}};
    if (!gaps.empty()) entry["final_gap"] = stats_json(gaps);
    if (alg == Algorithm::kMnpg) entry["flagged_importance_weights"] = flagged;
    algs[to_string(alg)] = entry;
  }

  const double gamma = std::visit([](const auto& e) { return e.gamma(); }, env);
  nlohmann::json seeds = spec.seeds;
  outcome.summary = nlohmann::json{
      {"env", spec.env},
      {"env_description", describe(env)},
      {"seeds", seeds},
      {"horizon", resolve_horizon(resolved.run, gamma)},
      {"tau0", spec.run.tau0},
      {"subproblem", {{"solver", to_string(resolved.run.subproblem.kind)},
                      {"K", resolved.run.subproblem.iterations},
                      {"damping", resolved.run.subproblem.damping}}},
      {"geometric_horizon_cap", geometric_horizon_cap(gamma)},
      {"algorithms", algs}};
  if (const auto* mdp = std::get_if<TabularMdp>(&env)) {
    const auto& p = std::get<TabularSoftmaxPolicy>(policy);
    const double j_star = optimal_return(*mdp);
    outcome.summary["j_star"] = j_star;
    outcome.summary["initial_gap"] = j_star - exact_return(*mdp, p);
  } else {
    outcome.summary["lqr_reference_return"] = lqr_optimal_return(std::get<PointMassEnv>(env));
  }
  if (write_files) write_text(dir / "summary.json", outcome.summary.dump(2) + "\n");
  return outcome;
}

SweepOutcome run_sweep(const ExperimentSpec& spec, const AnyEnv& env, const AnyPolicy& policy,
                       bool write_files) {
  std::vector<double> alphas = spec.sweep_alpha0;
  std::vector<int> taus = spec.sweep_tau0;
  std::vector<int> ks = spec.sweep_k;
  if (taus.empty()) taus.push_back(spec.run.tau0);
  if (ks.empty()) ks.push_back(spec.run.subproblem.iterations);

  SweepOutcome out;
  nlohmann::json cells = nlohmann::json::array();
  const std::size_t n_alpha = alphas.empty() ? 1 : alphas.size();
  for (std::size_t ia = 0; ia < n_alpha; ++ia) {
    for (int tau0 : taus) {
      for (int k : ks) {
        ExperimentSpec cell = spec;
        cell.run.tau0 = tau0;
        cell.run.subproblem.iterations = k;
        if (!alphas.empty()) {
          cell.run.alpha0 = alphas[ia];
          cell.alpha0_explicit = true;
          cell.alpha0_theoretical = false;
          cell.alpha0_override.clear();
        }
        const ExperimentOutcome res = run_experiment(cell, env, policy, false);
        for (Algorithm alg : spec.algorithms) {
          SweepRow row;
          row.tau0 = tau0;
          row.k = k;
          row.algorithm = alg;
          std::vector<double> gaps, j_hats;
          for (const auto& c : res.cells) {
            if (c.algorithm != alg) continue;
            row.alpha0 = c.alpha0;
            row.T = c.T;
            if (!c.abort_message.empty()) {
              gaps.push_back(std::numeric_limits<double>::infinity());
              j_hats.push_back(-std::numeric_limits<double>::infinity());
              continue;
            }
            row.trajectories = c.run.trajectories;
            const auto& last = c.run.records.back();
            if (last.gap) gaps.push_back(*last.gap);
            if (last.j_hat) j_hats.push_back(*last.j_hat);
          }
          row.median_final_gap = median(gaps);
          row.median_final_j_hat = median(j_hats);
          cells.push_back({{"alpha0", row.alpha0},
                           {"tau0", tau0},
                           {"K", k},
                           {"algorithm", to_string(alg)},
                           {"T", row.T},
                           {"trajectories", row.trajectories},
                           {"median_final_gap", row.median_final_gap},
                           {"median_final_j_hat", row.median_final_j_hat}});
          out.rows.push_back(row);
        }
      }
    }
  }
  auto better = [](const SweepRow& a, const SweepRow& b) {
    if (!std::isnan(a.median_final_gap) || !std::isnan(b.median_final_gap)) {
      return a.median_final_gap < b.median_final_gap;
    }
    return a.median_final_j_hat > b.median_final_j_hat;
  };
  for (std::size_t i = 1; i < out.rows.size(); ++i) {
    if (better(out.rows[i], out.rows[out.best])) out.best = i;
  }
  out.json = nlohmann::json{{"env", spec.env}, {"cells", cells}, {"best", cells.at(out.best)}};

  if (write_files) {
    const fs::path dir = resolve_output_dir(spec.output_dir);
    fs::create_directories(dir);
    std::string csv = "algorithm,alpha0,tau0,K,T,trajectories,median_final_gap,median_final_j_hat\n";
    for (const auto& r : out.rows) {
      csv += to_string(r.algorithm) + ',' + format_number(r.alpha0) + ',' + std::to_string(r.tau0) +
             ',' + std::to_string(r.k) + ',' + std::to_string(r.T) + ',' +
             std::to_string(r.trajectories) + ',' + format_number(r.median_final_gap) + ',' +
             format_number(r.median_final_j_hat) + '\n';
    }
    write_text(dir / "sweep.csv", csv);
    write_text(dir / "sweep.json", out.json.dump(2) + "\n");
  }
  return out;
}

}  // namespace npghm
