#include "npghm/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string_view>

namespace npghm {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (cfg.values_.count(key)) throw ConfigError("duplicate key '" + key + "'");
    cfg.values_[key] = value;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  touch(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  return v ? parse_double(*v, key) : fallback;
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  const auto v = get(key);
  return v ? parse_int(*v, key) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  const std::string s = lower(*v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + *v + "'");
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [key, value] : values_) {
    if (!used_.count(key)) out.push_back(key);
  }
  return out;
}

double parse_double(const std::string& text, const std::string& what) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(what + ": expected a number, got '" + text + "'");
  }
  return v;
}

int parse_int(const std::string& text, const std::string& what) {
  const std::string s = trim(text);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(what + ": expected an integer, got '" + text + "'");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  auto number = [](std::string_view item) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw ConfigError("seeds: '" + std::string(item) + "' is not a nonnegative integer");
    }
    return v;
  };
  std::vector<std::uint64_t> seeds;
  for (const auto& item : split_list(text)) {
    // "a-b" is the inclusive range a..b.
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      seeds.push_back(number(item));
      continue;
    }
    const std::string_view view(item);
    const std::uint64_t lo = number(view.substr(0, dash));
    const std::uint64_t hi = number(view.substr(dash + 1));
    if (hi < lo || hi - lo >= 100'000) throw ConfigError("seeds: bad range '" + item + "'");
    for (std::uint64_t v = lo; v <= hi; ++v) seeds.push_back(v);
  }
  return seeds;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_double(item, what));
  return out;
}

ExperimentSpec experiment_from_config(const KeyValueConfig& cfg) {
  ExperimentSpec spec;
  spec.env = cfg.get_string("env", spec.env);

  const std::string kind = lower(cfg.get_string("policy.kind", "auto"));
  if (kind == "auto") spec.policy.kind = PolicyKind::kAuto;
  else if (kind == "softmax") spec.policy.kind = PolicyKind::kSoftmax;
  else if (kind == "gaussian") spec.policy.kind = PolicyKind::kGaussian;
  else throw ConfigError("policy.kind: unknown policy '" + kind + "'");
  spec.policy.sigma = cfg.get_double("policy.sigma", spec.policy.sigma);
  spec.policy.truncation = cfg.get_double("policy.truncation", spec.policy.truncation);
  spec.policy.features = cfg.get_string("policy.features", spec.policy.features);
  spec.policy.init_path = cfg.get_string("policy.init", "");

  RunConfig& run = spec.run;
  run.T = cfg.get_int("run.T", run.T);
  run.tau0 = cfg.get_int("run.tau0", run.tau0);
  if (const auto alpha0 = cfg.get("run.alpha0")) {
    if (lower(*alpha0) == "theoretical") {
      spec.alpha0_theoretical = true;
    } else {
      run.alpha0 = parse_double(*alpha0, "run.alpha0");
      spec.alpha0_explicit = true;
    }
  }
  for (Algorithm alg : all_algorithms()) {
    const std::string key = "run.alpha0." + to_string(alg);
    if (const auto v = cfg.get(key)) spec.alpha0_override[alg] = parse_double(*v, key);
  }
  const std::string rule = lower(cfg.get_string("run.step_rule", "scheduled"));
  if (rule == "scheduled") run.step_rule = StepRule::kScheduled;
  else if (rule == "constant") run.step_rule = StepRule::kConstant;
  else throw ConfigError("run.step_rule: expected 'scheduled' or 'constant'");
  const std::string horizon = lower(cfg.get_string("run.horizon", "auto"));
  if (horizon != "auto") run.horizon = parse_int(horizon, "run.horizon");
  run.eval_interval = cfg.get_int("run.eval_interval", run.eval_interval);
  run.eval_trajectories = cfg.get_int("run.eval_trajectories", run.eval_trajectories);
  if (const auto v = cfg.get("run.momentum_beta")) run.momentum_beta = parse_double(*v, "run.momentum_beta");
  if (const auto v = cfg.get("run.algorithms")) {
    spec.algorithms.clear();
    const auto names = split_list(*v);
    if (names.size() == 1 && lower(names[0]) == "all") {
      spec.algorithms = all_algorithms();
    } else {
      for (const auto& name : names) spec.algorithms.push_back(parse_algorithm(lower(name)));
    }
  }
  if (const auto v = cfg.get("run.seeds")) spec.seeds = parse_seed_list(*v);
  if (const auto v = cfg.get("run.budget")) {
    const int budget = parse_int(*v, "run.budget");
    if (budget < 1) throw ConfigError("run.budget must be >= 1");
    spec.trajectory_budget = budget;
  }

  spec.solver = lower(cfg.get_string("subproblem.solver", spec.solver));
  if (spec.solver != "auto") run.subproblem.kind = parse_subproblem_kind(spec.solver);
  // Adam runs few iterations per outer step by default.
  if (run.subproblem.kind == SubproblemKind::kAdam) run.subproblem.iterations = 10;
  run.subproblem.iterations = cfg.get_int("subproblem.K", run.subproblem.iterations);
  if (const auto v = cfg.get("subproblem.eta")) run.subproblem.eta = parse_double(*v, "subproblem.eta");
  run.subproblem.damping = cfg.get_double("subproblem.damping", run.subproblem.damping);
  run.subproblem.adam.lr = cfg.get_double("subproblem.adam_lr", run.subproblem.adam.lr);
  run.subproblem.warm_start = cfg.get_bool("subproblem.warm_start", run.subproblem.warm_start);

  spec.output_dir = cfg.get_string("output.dir", spec.output_dir);
  spec.record_timing = cfg.get_bool("output.record_timing", spec.record_timing);
  spec.threads = cfg.get_int("output.threads", spec.threads);

  if (const auto v = cfg.get("sweep.alpha0")) spec.sweep_alpha0 = parse_double_list(*v, "sweep.alpha0");
  if (const auto v = cfg.get("sweep.tau0")) {
    for (const auto& item : split_list(*v)) spec.sweep_tau0.push_back(parse_int(item, "sweep.tau0"));
  }
  if (const auto v = cfg.get("sweep.K")) {
    for (const auto& item : split_list(*v)) spec.sweep_k.push_back(parse_int(item, "sweep.K"));
  }

  // Environment parameters are read by the environment factory; mark them used.
  for (const auto& [key, value] : cfg.values()) {
    if (key.rfind("env.", 0) == 0) cfg.get(key);
  }
  const auto unused = cfg.unused_keys();
  if (!unused.empty()) {
    std::string msg = "unknown config key(s):";
    for (const auto& k : unused) msg += " " + k;
    throw ConfigError(msg);
  }
  validate(spec);
  return spec;
}

void validate(const ExperimentSpec& spec) {
  if (spec.seeds.empty()) throw ConfigError("at least one seed is required");
  if (std::set<std::uint64_t>(spec.seeds.begin(), spec.seeds.end()).size() != spec.seeds.size()) {
    throw ConfigError("seeds must be distinct");
  }
  if (spec.algorithms.empty()) throw ConfigError("at least one algorithm is required");
  if (spec.run.T < 1) throw ConfigError("run.T must be >= 1");
  if (spec.run.tau0 < 1) throw ConfigError("run.tau0 must be >= 1");
  if (!(spec.run.alpha0 >= 0.0)) throw ConfigError("run.alpha0 must be >= 0");
  if (spec.run.subproblem.iterations < 0) throw ConfigError("subproblem.K must be >= 0");
  if (spec.run.subproblem.eta && !(*spec.run.subproblem.eta > 0.0)) {
    throw ConfigError("subproblem.eta must be positive");
  }
  if (spec.run.momentum_beta && !(*spec.run.momentum_beta > 0.0 && *spec.run.momentum_beta <= 1.0)) {
    throw ConfigError("run.momentum_beta must lie in (0, 1]");
  }
  if (spec.threads < 1) throw ConfigError("output.threads must be >= 1");
  if (!(spec.policy.sigma > 0.0)) throw ConfigError("policy.sigma must be positive");
  if (!(spec.policy.truncation > 0.0)) throw ConfigError("policy.truncation must be positive");
  for (int tau0 : spec.sweep_tau0) {
    if (tau0 < 1) throw ConfigError("sweep.tau0 entries must be >= 1");
  }
  for (int k : spec.sweep_k) {
    if (k < 0) throw ConfigError("sweep.K entries must be >= 0");
  }
}

double default_alpha0(Algorithm alg) {
  switch (alg) {
    case Algorithm::kNpgHm: return 0.005;
    case Algorithm::kVanillaPg: return 0.5;
    case Algorithm::kHarpg: return 0.02;
    case Algorithm::kMnpg: return 0.005;
  }
  return 0.005;
}

long trajectories_for(Algorithm alg, int T) {
  if (T <= 1) return 0;
  switch (alg) {
    case Algorithm::kNpgHm:
    case Algorithm::kHarpg:
      return 2L * T - 3;
    case Algorithm::kVanillaPg:
    case Algorithm::kMnpg:
      return T - 1;
  }
  return 0;
}

int iterations_for_budget(Algorithm alg, long budget) {
  if (budget < 1) return 1;
  switch (alg) {
    case Algorithm::kNpgHm:
    case Algorithm::kHarpg:
      return static_cast<int>((budget + 3) / 2);
    case Algorithm::kVanillaPg:
    case Algorithm::kMnpg:
      return static_cast<int>(budget + 1);
  }
  return 1;
}

std::string resolve_output_dir(const std::string& dir) {
  const std::filesystem::path p(dir);
  if (p.is_absolute()) return dir;
  if (const char* root = std::getenv("NPGHM_OUTPUT_ROOT"); root && *root) {
    return (std::filesystem::path(root) / p).string();
  }
  return dir;
}

}  // namespace npghm
