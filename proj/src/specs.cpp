#include "npghm/specs.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace npghm {

namespace {

std::string hex(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
  return std::string(buf, end);
}

double parse_hex(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("policy file: bad value for " + what + ": '" + s + "'");
  }
  return v;
}

PointMassEnv make_point_mass(const KeyValueConfig& extra) {
  PointMassParams p;
  p.a_dyn = extra.get_double("env.pointmass.a_dyn", p.a_dyn);
  p.b_dyn = extra.get_double("env.pointmass.b_dyn", p.b_dyn);
  p.noise_std = extra.get_double("env.pointmass.noise_std", p.noise_std);
  p.q_s = extra.get_double("env.pointmass.q_s", p.q_s);
  p.q_a = extra.get_double("env.pointmass.q_a", p.q_a);
  p.state_radius = extra.get_double("env.pointmass.state_radius", p.state_radius);
  p.action_radius = extra.get_double("env.pointmass.action_radius", p.action_radius);
  p.init_radius = extra.get_double("env.pointmass.init_radius", p.init_radius);
  p.gamma = extra.get_double("env.gamma", p.gamma);
  return PointMassEnv(p);
}

TabularMdp make_tabular(const std::string& spec) {
  if (spec.rfind("chain", 0) == 0) {
    return chain(parse_int(spec.substr(5), "chain size"));
  }
  if (spec.rfind("random:", 0) == 0) {
    const auto parts = split_list(spec.substr(7), ':');
    if (parts.size() != 2) throw ConfigError("env: expected random:SxA:SEED, got '" + spec + "'");
    const auto dims = split_list(parts[0], 'x');
    if (dims.size() != 2) throw ConfigError("env: expected random:SxA:SEED, got '" + spec + "'");
    const auto seed = parse_seed_list(parts[1]);
    if (seed.size() != 1) throw ConfigError("env: bad random MDP seed in '" + spec + "'");
    return random_mdp(parse_int(dims[0], "random MDP states"), parse_int(dims[1], "random MDP actions"),
                      seed[0]);
  }
  if (spec.rfind("bandit:", 0) == 0) {
    return bandit(parse_double_list(spec.substr(7), "bandit reward"));
  }
  if (spec.rfind("file:", 0) == 0) {
    return load_mdp(spec.substr(5));
  }
  throw ConfigError("env: unknown environment spec '" + spec + "'");
}

}  // namespace

AnyEnv make_env(const std::string& spec, const KeyValueConfig& extra) {
  if (spec == "pointmass") return make_point_mass(extra);
  TabularMdp mdp = make_tabular(spec);
  if (const auto g = extra.get("env.gamma")) mdp = mdp.with_gamma(parse_double(*g, "env.gamma"));
  return mdp;
}

std::string describe(const AnyEnv& env) {
  if (const auto* mdp = std::get_if<TabularMdp>(&env)) {
    return "tabular MDP (" + std::to_string(mdp->n_states()) + " states, " +
           std::to_string(mdp->n_actions()) + " actions, gamma " + std::to_string(mdp->gamma()) + ")";
  }
  return "point mass (gamma " + std::to_string(std::get<PointMassEnv>(env).gamma()) + ")";
}

AnyPolicy make_policy(const AnyEnv& env, const PolicySpec& spec) {
  AnyPolicy policy = [&]() -> AnyPolicy {
    if (const auto* mdp = std::get_if<TabularMdp>(&env)) {
      if (spec.kind == PolicyKind::kGaussian) {
        throw ConfigError("policy.kind = gaussian needs a continuous environment");
      }
      return TabularSoftmaxPolicy(mdp->n_states(), mdp->n_actions());
    }
    if (spec.kind == PolicyKind::kSoftmax) {
      throw ConfigError("policy.kind = softmax needs a tabular environment");
    }
    const auto& pm = std::get<PointMassEnv>(env);
    return TruncatedLinearGaussianPolicy(FeatureMap::for_env(pm, parse_feature_kind(spec.features)),
                                         spec.sigma, spec.truncation);
  }();
  if (spec.init_path.empty()) return policy;

  AnyPolicy loaded = load_policy(spec.init_path);
  if (loaded.index() != policy.index()) throw ConfigError("policy.init: policy kind does not match env");
  if (const auto* sm = std::get_if<TabularSoftmaxPolicy>(&loaded)) {
    const auto& fresh = std::get<TabularSoftmaxPolicy>(policy);
    if (sm->n_states() != fresh.n_states() || sm->n_actions() != fresh.n_actions()) {
      throw ConfigError("policy.init: softmax shape does not match env");
    }
  }
  return loaded;
}

std::string serialize_policy(const AnyPolicy& policy) {
  std::ostringstream out;
  out << "npghm-policy 1\n";
  const Vec* theta = nullptr;
  if (const auto* sm = std::get_if<TabularSoftmaxPolicy>(&policy)) {
    out << "kind softmax\n"
        << "n_states " << sm->n_states() << "\n"
        << "n_actions " << sm->n_actions() << "\n";
    theta = &sm->params();
  } else {
    const auto& g = std::get<TruncatedLinearGaussianPolicy>(policy);
    out << "kind gaussian\n"
        << "features " << to_string(g.features().kind) << "\n"
        << "feature_scale " << hex(g.features().scale) << "\n"
        << "state_bound " << hex(g.features().state_bound) << "\n"
        << "sigma " << hex(g.sigma()) << "\n"
        << "truncation " << hex(g.truncation()) << "\n";
    theta = &g.params();
  }
  out << "dim " << theta->size() << "\n"
      << "theta\n";
  for (Index i = 0; i < theta->size(); ++i) out << hex((*theta)[i]) << "\n";
  return out.str();
}

AnyPolicy parse_policy(const std::string& text) {
  std::istringstream in(text);
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "npghm-policy" || version != 1) {
    throw ConfigError("policy file: missing 'npghm-policy 1' header");
  }
  std::map<std::string, std::string> header;
  std::string key;
  while (in >> key && key != "theta") {
    std::string value;
    if (!(in >> value)) throw ConfigError("policy file: missing value for '" + key + "'");
    header[key] = value;
  }
  if (key != "theta") throw ConfigError("policy file: missing theta block");
  auto field = [&](const std::string& k) {
    const auto it = header.find(k);
    if (it == header.end()) throw ConfigError("policy file: missing '" + k + "'");
    return it->second;
  };
  const int dim = parse_int(field("dim"), "dim");
  if (dim < 0) throw ConfigError("policy file: negative dim");
  Vec theta(dim);
  for (int i = 0; i < dim; ++i) {
    std::string token;
    if (!(in >> token)) throw ConfigError("policy file: theta has fewer than dim entries");
    theta[i] = parse_hex(token, "theta");
  }
  std::string extra;
  if (in >> extra) throw ConfigError("policy file: trailing data after theta");

  const std::string kind = field("kind");
  if (kind == "softmax") {
    const int ns = parse_int(field("n_states"), "n_states");
    const int na = parse_int(field("n_actions"), "n_actions");
    if (ns < 1 || na < 1 || static_cast<long>(ns) * na != dim) {
      throw ConfigError("policy file: softmax shape does not match dim");
    }
    return TabularSoftmaxPolicy(ns, na, std::move(theta));
  }
  if (kind == "gaussian") {
    FeatureMap features{parse_feature_kind(field("features")),
                        parse_hex(field("feature_scale"), "feature_scale"),
                        parse_hex(field("state_bound"), "state_bound")};
    return TruncatedLinearGaussianPolicy(features, parse_hex(field("sigma"), "sigma"),
                                         parse_hex(field("truncation"), "truncation"),
                                         std::move(theta));
  }
  throw ConfigError("policy file: unknown kind '" + kind + "'");
}

void save_policy(const AnyPolicy& policy, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write policy file '" + path + "'");
  out << serialize_policy(policy);
}

AnyPolicy load_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open policy file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_policy(buf.str());
}

}  // namespace npghm
