#include "npghm/tabular_mdp.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace npghm {

namespace {

constexpr double kSumTolerance = 1e-12;

void append_number(std::string& out, double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, end);
}

Vec dirichlet_ones(int n, Rng& rng) {
  // Normalized exponentials give Dirichlet(1, ..., 1).
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = -std::log1p(-uniform01(rng));
  return v / v.sum();
}

}  // namespace

TabularMdp::TabularMdp(int n_states, int n_actions, std::vector<double> transition,
                       std::vector<double> reward, Vec init_dist, double gamma)
    : n_states_(n_states),
      n_actions_(n_actions),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      init_dist_(std::move(init_dist)),
      gamma_(gamma) {
  if (n_states_ < 1 || n_actions_ < 1) throw ConfigError("TabularMdp: counts must be positive");
  if (!(gamma_ >= 0.0 && gamma_ < 1.0)) throw ConfigError("TabularMdp: gamma must lie in [0,1)");
  const auto cells = static_cast<std::size_t>(n_states_) * n_actions_ * n_states_;
  if (transition_.size() != cells || reward_.size() != cells) {
    throw ConfigError("TabularMdp: transition/reward tables must have n_s*n_a*n_s entries");
  }
  if (init_dist_.size() != n_states_) throw ConfigError("TabularMdp: init_dist has wrong length");
  for (int s = 0; s < n_states_; ++s) {
    for (int a = 0; a < n_actions_; ++a) {
      double row = 0.0;
      for (int t = 0; t < n_states_; ++t) {
        const double p = this->transition(s, a, t);
        const double r = this->reward(s, a, t);
        if (!(p >= 0.0)) throw ConfigError("TabularMdp: negative transition probability");
        if (!(r >= -1.0 && r <= 1.0)) throw ConfigError("TabularMdp: reward outside [-1,1]");
        row += p;
      }
      if (std::abs(row - 1.0) > kSumTolerance) {
        throw ConfigError("TabularMdp: transition row (" + std::to_string(s) + "," +
                          std::to_string(a) + ") does not sum to 1");
      }
    }
  }
  if ((init_dist_.array() < 0.0).any() || std::abs(init_dist_.sum() - 1.0) > kSumTolerance) {
    throw ConfigError("TabularMdp: init_dist is not a probability vector");
  }
}

double TabularMdp::expected_reward(int s, int a) const {
  double acc = 0.0;
  const auto base = offset(s, a);
  for (int t = 0; t < n_states_; ++t) acc += transition_[base + t] * reward_[base + t];
  return acc;
}

TabularMdp::State TabularMdp::initial_state(Rng& rng) const {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (int s = 0; s < n_states_; ++s) {
    acc += init_dist_[s];
    if (u < acc) return s;
  }
  // Rounding left u above the running sum; take the last state with mass.
  for (int s = n_states_ - 1; s >= 0; --s) {
    if (init_dist_[s] > 0.0) return s;
  }
  return n_states_ - 1;
}

StepResult<TabularMdp::State> TabularMdp::step(State s, Action a, Rng& rng) const {
  const auto base = offset(s, a);
  const double u = uniform01(rng);
  double acc = 0.0;
  int next = -1;
  for (int t = 0; t < n_states_; ++t) {
    acc += transition_[base + t];
    if (u < acc) {
      next = t;
      break;
    }
  }
  if (next < 0) {
    for (int t = n_states_ - 1; t >= 0; --t) {
      if (transition_[base + t] > 0.0) {
        next = t;
        break;
      }
    }
  }
  return {next, reward_[base + next]};
}

TabularMdp TabularMdp::with_gamma(double gamma) const {
  return TabularMdp(n_states_, n_actions_, transition_, reward_, init_dist_, gamma);
}

TabularMdp TabularMdp::with_scaled_rewards(double factor) const {
  std::vector<double> scaled = reward_;
  for (double& r : scaled) r *= factor;
  return TabularMdp(n_states_, n_actions_, transition_, std::move(scaled), init_dist_, gamma_);
}

TabularMdp chain(int n, double gamma, double left_reward, double slip) {
  if (n < 1) throw ConfigError("chain: n must be positive");
  if (!(slip >= 0.0 && slip <= 1.0)) throw ConfigError("chain: slip must lie in [0,1]");
  const int n_actions = 2;
  const auto cells = static_cast<std::size_t>(n) * n_actions * n;
  std::vector<double> transition(cells, 0.0);
  std::vector<double> reward(cells, 0.0);
  auto idx = [&](int s, int a, int t) { return (static_cast<std::size_t>(s) * n_actions + a) * n + t; };
  for (int s = 0; s < n; ++s) {
    const int left = std::max(s - 1, 0);
    const int right = std::min(s + 1, n - 1);
    for (int a = 0; a < n_actions; ++a) {
      const int intended = a == 0 ? left : right;
      const int other = a == 0 ? right : left;
      transition[idx(s, a, intended)] += 1.0 - slip;
      transition[idx(s, a, other)] += slip;
    }
    // Rewards are attached to (s, a, s') so they only fire on the intended move.
    if (s == n - 1) reward[idx(s, 1, n - 1)] = 1.0;
    if (s == 0) reward[idx(s, 0, 0)] = left_reward;
  }
  return TabularMdp(n, n_actions, std::move(transition), std::move(reward),
                    Vec::Constant(n, 1.0 / n), gamma);
}

TabularMdp random_mdp(int n_states, int n_actions, std::uint64_t seed, double gamma) {
  if (n_states < 1 || n_actions < 1) throw ConfigError("random_mdp: counts must be positive");
  Rng rng(seed);
  const auto cells = static_cast<std::size_t>(n_states) * n_actions * n_states;
  std::vector<double> transition(cells);
  std::vector<double> reward(cells);
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      const Vec row = dirichlet_ones(n_states, rng);
      for (int t = 0; t < n_states; ++t) {
        transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + t] = row[t];
      }
    }
  }
  for (double& r : reward) r = 2.0 * uniform01(rng) - 1.0;
  Vec rho = dirichlet_ones(n_states, rng);
  return TabularMdp(n_states, n_actions, std::move(transition), std::move(reward), std::move(rho),
                    gamma);
}

TabularMdp bandit(const std::vector<double>& rewards, double gamma) {
  const int n_actions = static_cast<int>(rewards.size());
  if (n_actions < 1) throw ConfigError("bandit: need at least one arm");
  std::vector<double> transition(n_actions, 1.0);
  return TabularMdp(1, n_actions, std::move(transition), rewards, Vec::Ones(1), gamma);
}

TabularMdp parse_mdp(const std::string& text) {
  std::istringstream lines(text);
  std::string line;
  std::vector<double> values;
  while (std::getline(lines, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::string tok;
    while (tokens >> tok) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ConfigError("parse_mdp: bad number '" + tok + "'");
      }
      values.push_back(v);
    }
  }
  if (values.size() < 3) throw ConfigError("parse_mdp: missing header");
  const double ns = values[0];
  const double na = values[1];
  if (ns < 1 || na < 1 || ns != std::floor(ns) || na != std::floor(na)) {
    throw ConfigError("parse_mdp: counts must be positive integers");
  }
  const int n_states = static_cast<int>(ns);
  const int n_actions = static_cast<int>(na);
  const double gamma = values[2];
  const auto cells = static_cast<std::size_t>(n_states) * n_actions * n_states;
  const std::size_t expected = 3 + static_cast<std::size_t>(n_states) + 2 * cells;
  if (values.size() != expected) {
    throw ConfigError("parse_mdp: expected " + std::to_string(expected) + " numbers, found " +
                      std::to_string(values.size()));
  }
  Vec rho(n_states);
  for (int s = 0; s < n_states; ++s) rho[s] = values[3 + s];
  auto first = values.begin() + 3 + n_states;
  std::vector<double> transition(first, first + static_cast<std::ptrdiff_t>(cells));
  std::vector<double> reward(first + static_cast<std::ptrdiff_t>(cells), values.end());
  return TabularMdp(n_states, n_actions, std::move(transition), std::move(reward), std::move(rho),
                    gamma);
}

TabularMdp load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("load_mdp: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_mdp(buf.str());
}

std::string format_mdp(const TabularMdp& mdp) {
  std::string out;
  out += "# n_states n_actions\n";
  out += std::to_string(mdp.n_states()) + " " + std::to_string(mdp.n_actions()) + "\n";
  out += "# gamma\n";
  append_number(out, mdp.gamma());
  out += "\n# initial distribution\n";
  for (int s = 0; s < mdp.n_states(); ++s) {
    if (s) out += ' ';
    append_number(out, mdp.init_dist()[s]);
  }
  auto table = [&](const std::vector<double>& values, const char* title) {
    out += "\n# ";
    out += title;
    out += " [s][a][s']\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
      append_number(out, values[i]);
      out += ((i + 1) % mdp.n_states() == 0) ? '\n' : ' ';
    }
  };
  table(mdp.transition_table(), "transition");
  table(mdp.reward_table(), "reward");
  return out;
}

}  // namespace npghm
