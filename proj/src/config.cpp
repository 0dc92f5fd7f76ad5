#include "debias/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "debias/errors.hpp"

namespace debias {

std::string to_string(VariantKind v) {
  switch (v) {
    case VariantKind::ActiveDebiasing: return "active";
    case VariantKind::ExploitationOnly: return "exploitation_only";
    case VariantKind::PureExploration: return "pure_exploration";
  }
  return "?";
}

std::string to_string(UpdateStrategy s) {
  switch (s) {
    case UpdateStrategy::MirroredWindow: return "mirrored_window";
    case UpdateStrategy::RateBalanced: return "rate_balanced";
  }
  return "?";
}

std::string to_string(ExplorationAction a) {
  switch (a) {
    case ExplorationAction::Uniform: return "uniform";
    case ExplorationAction::Intermediate: return "intermediate";
    case ExplorationAction::NoExplore: return "no_explore";
  }
  return "?";
}

std::string to_string(FairnessKind k) {
  switch (k) {
    case FairnessKind::Unconstrained: return "unconstrained";
    case FairnessKind::SameDecisionRule: return "same_decision_rule";
    case FairnessKind::EqualOpportunity: return "equal_opportunity";
  }
  return "?";
}

std::string to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::FixedDecay: return "fixed_decay";
    case ScheduleKind::Adaptive: return "adaptive";
  }
  return "?";
}

std::string to_string(Family f) {
  switch (f) {
    case Family::GaussianLocation: return "gaussian";
    case Family::BetaAlpha: return "beta";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Raw key/value store with consumption tracking, so anything left unread at
// the end is reported as an unknown key.
class KeyStore {
 public:
  void insert(const std::string& key, const std::string& value) {
    if (!map_.emplace(key, value).second) {
      throw ConfigError("duplicate config key: " + key);
    }
  }

  std::optional<std::string> take(const std::string& key) {
    auto it = map_.find(key);
    if (it == map_.end()) return std::nullopt;
    used_.insert(key);
    return it->second;
  }

  std::string require(const std::string& key) {
    auto v = take(key);
    if (!v) throw ConfigError("missing config key: " + key);
    return *v;
  }

  bool contains(const std::string& key) const { return map_.count(key) != 0; }

  bool contains_prefix(const std::string& prefix) const {
    auto it = map_.lower_bound(prefix);
    return it != map_.end() && it->first.compare(0, prefix.size(), prefix) == 0;
  }

  void finish() const {
    for (const auto& [key, value] : map_) {
      if (!used_.count(key)) {
        throw ConfigError("unknown config key: " + key);
      }
    }
  }

 private:
  std::map<std::string, std::string> map_;
  std::set<std::string> used_;
};

double parse_double(const std::string& key, const std::string& raw) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(raw, &pos);
    if (pos != raw.size() || !std::isfinite(v)) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": expected a number, got '" +
                      raw + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& raw) {
  try {
    std::size_t pos = 0;
    if (!raw.empty() && raw[0] == '-') throw std::invalid_argument(raw);
    const unsigned long long v = std::stoull(raw, &pos);
    if (pos != raw.size()) throw std::invalid_argument(raw);
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("config key " + key +
                      ": expected a non-negative integer, got '" + raw + "'");
  }
}

double take_double(KeyStore& ks, const std::string& key, double fallback) {
  auto v = ks.take(key);
  return v ? parse_double(key, *v) : fallback;
}

std::uint64_t take_u64(KeyStore& ks, const std::string& key,
                       std::uint64_t fallback) {
  auto v = ks.take(key);
  return v ? parse_u64(key, *v) : fallback;
}

template <typename Enum>
Enum parse_enum(const std::string& key, const std::string& raw,
                const std::vector<Enum>& values) {
  for (Enum e : values) {
    if (to_string(e) == raw) return e;
  }
  std::string known;
  for (Enum e : values) {
    if (!known.empty()) known += ", ";
    known += to_string(e);
  }
  throw ConfigError("config key " + key + ": unknown value '" + raw +
                    "' (expected one of: " + known + ")");
}

template <typename Enum>
Enum take_enum(KeyStore& ks, const std::string& key, Enum fallback,
               const std::vector<Enum>& values) {
  auto v = ks.take(key);
  return v ? parse_enum(key, *v, values) : fallback;
}

// Resolve a distribution from either its free parameter or its reference
// percentile (exactly one of the two keys).
DistEstimate take_dist(KeyStore& ks, const std::string& psi_key,
                       const std::string& omega_key, FamilyKind kind,
                       double tau) {
  auto psi = ks.take(psi_key);
  auto omega = ks.take(omega_key);
  if (psi && omega) {
    throw ConfigError("config keys " + psi_key + " and " + omega_key +
                      " are mutually exclusive");
  }
  try {
    if (psi) return DistEstimate::from_psi(kind, parse_double(psi_key, *psi), tau);
    if (omega) {
      return DistEstimate::from_omega(kind, parse_double(omega_key, *omega), tau);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("config key " + (psi ? psi_key : omega_key) + ": " +
                      e.what());
  }
  throw ConfigError("missing config key: " + omega_key + " (or " + psi_key + ")");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  KeyStore ks;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": empty key or value");
    }
    ks.insert(key, value);
  }

  ExperimentConfig cfg;

  for (const std::string& tok : split_list(ks.require("seeds"))) {
    cfg.seeds.push_back(parse_u64("seeds", tok));
  }
  if (cfg.seeds.empty()) throw ConfigError("config key seeds: empty list");
  cfg.horizon = take_u64(ks, "horizon", 0);
  cfg.regret_beta = take_double(ks, "regret_beta", 1.0);

  cfg.engine.variant.kind = take_enum(
      ks, "variant", VariantKind::ActiveDebiasing,
      {VariantKind::ActiveDebiasing, VariantKind::ExploitationOnly,
       VariantKind::PureExploration});
  cfg.engine.variant.strategy =
      take_enum(ks, "strategy", UpdateStrategy::MirroredWindow,
                {UpdateStrategy::MirroredWindow, UpdateStrategy::RateBalanced});
  cfg.engine.explore_action = take_enum(
      ks, "explore_action", ExplorationAction::Uniform,
      {ExplorationAction::Uniform, ExplorationAction::Intermediate,
       ExplorationAction::NoExplore});
  cfg.engine.gamma = take_double(ks, "gamma", 0.5);
  cfg.engine.fairness.kind = take_enum(
      ks, "fairness", FairnessKind::Unconstrained,
      {FairnessKind::Unconstrained, FairnessKind::SameDecisionRule,
       FairnessKind::EqualOpportunity});
  cfg.engine.fairness.slack = take_double(ks, "fairness_slack", 0.0);
  cfg.engine.schedule.kind =
      take_enum(ks, "schedule", ScheduleKind::FixedDecay,
                {ScheduleKind::FixedDecay, ScheduleKind::Adaptive});
  cfg.engine.schedule.eps0 = take_double(ks, "eps0", 0.5);
  cfg.engine.schedule.step = take_double(ks, "eps_step", 0.1);
  cfg.engine.schedule.every = take_u64(ks, "eps_every", 10000);
  cfg.engine.schedule.gain = take_double(ks, "eps_gain", 1.0);
  cfg.engine.schedule.window = take_u64(ks, "eps_window", 1000);
  cfg.engine.schedule.eps_min = take_double(ks, "eps_min", 0.01);
  cfg.engine.schedule.eps_max = take_double(ks, "eps_max", 1.0);
  cfg.engine.batch_min =
      static_cast<std::size_t>(take_u64(ks, "batch_min", 50));
  cfg.engine.eta = take_double(ks, "eta", 1.0);

  cfg.group_tags = split_list(ks.require("groups"));
  if (cfg.group_tags.empty()) throw ConfigError("config key groups: empty list");
  {
    std::set<std::string> seen;
    for (const std::string& tag : cfg.group_tags) {
      if (!seen.insert(tag).second) {
        throw ConfigError("config key groups: duplicate tag '" + tag + "'");
      }
      for (char c : tag) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) {
          throw ConfigError("config key groups: tag '" + tag +
                            "' must be alphanumeric/underscore");
        }
      }
    }
  }

  std::vector<double> weights;
  for (const std::string& tag : cfg.group_tags) {
    const std::string p = "group." + tag + ".";
    const Family fam =
        take_enum(ks, p + "family", Family::GaussianLocation,
                  {Family::GaussianLocation, Family::BetaAlpha});
    const double fixed0 = take_double(ks, p + "fixed0", 1.0);
    const double fixed1 = take_double(ks, p + "fixed1", 1.0);
    FamilyKind kind0{fam, fixed0};
    FamilyKind kind1{fam, fixed1};
    const double tau0 = take_double(ks, p + "tau0", 60.0);
    const double tau1 = take_double(ks, p + "tau1", 50.0);
    const double alpha1 = take_double(ks, p + "alpha1", 0.5);
    weights.push_back(take_double(ks, p + "weight", 1.0));

    GroupEstimate truth;
    truth.dist[0] = take_dist(ks, p + "true_psi0", p + "true_omega0", kind0, tau0);
    truth.dist[1] = take_dist(ks, p + "true_psi1", p + "true_omega1", kind1, tau1);
    truth.alpha[0] = 1.0 - alpha1;
    truth.alpha[1] = alpha1;

    GroupEstimate init = truth;
    const bool has_init0 =
        ks.contains(p + "init_psi0") || ks.contains(p + "init_omega0");
    const bool has_init1 =
        ks.contains(p + "init_psi1") || ks.contains(p + "init_omega1");
    if (has_init0) {
      init.dist[0] = take_dist(ks, p + "init_psi0", p + "init_omega0", kind0, tau0);
    }
    if (has_init1) {
      init.dist[1] = take_dist(ks, p + "init_psi1", p + "init_omega1", kind1, tau1);
    }

    cfg.world.truth.groups.push_back(truth);
    cfg.engine.init_est.groups.push_back(init);
  }
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) {
      throw ConfigError("config key group.<tag>.weight: weights must be positive");
    }
    wsum += w;
  }
  for (double& w : weights) w /= wsum;
  cfg.world.group_weights = weights;

  // Two-stage comparison section (single-group by construction).
  cfg.has_mdp = ks.contains_prefix("mdp.");
  if (cfg.has_mdp) {
    cfg.mdp.costs.L1h = take_double(ks, "mdp.L1h", 1.0);
    cfg.mdp.costs.L1l = take_double(ks, "mdp.L1l", 0.5);
    cfg.mdp.costs.L2h = take_double(ks, "mdp.L2h", 10.0);
    cfg.mdp.costs.L2l = take_double(ks, "mdp.L2l", 1.0);
    cfg.mdp.costs.gamma = take_double(ks, "mdp.gamma", 0.5);
    cfg.mdp.costs.N1 = take_u64(ks, "mdp.N1", 1000);
    cfg.mdp.costs.N2 = take_u64(ks, "mdp.N2", 1000);
    cfg.mdp.costs.eps = take_double(ks, "mdp.eps", 1.0);
    cfg.mdp_replications =
        static_cast<std::size_t>(take_u64(ks, "mdp.replications", 200));
    cfg.mdp.stage_update =
        take_enum(ks, "mdp.strategy", UpdateStrategy::RateBalanced,
                  {UpdateStrategy::MirroredWindow, UpdateStrategy::RateBalanced});
    const Family fam =
        take_enum(ks, "mdp.family", Family::GaussianLocation,
                  {Family::GaussianLocation, Family::BetaAlpha});
    FamilyKind kind0{fam, take_double(ks, "mdp.fixed0", 1.0)};
    FamilyKind kind1{fam, take_double(ks, "mdp.fixed1", 1.0)};
    const double tau = take_double(ks, "mdp.tau", 50.0);
    const double alpha1 = take_double(ks, "mdp.alpha1", 0.5);
    cfg.mdp.truth.dist[0] =
        take_dist(ks, "mdp.true_psi0", "mdp.true_omega0", kind0, tau);
    cfg.mdp.truth.dist[1] =
        take_dist(ks, "mdp.true_psi1", "mdp.true_omega1", kind1, tau);
    cfg.mdp.init_est.dist[0] =
        take_dist(ks, "mdp.init_psi0", "mdp.init_omega0", kind0, tau);
    cfg.mdp.init_est.dist[1] =
        take_dist(ks, "mdp.init_psi1", "mdp.init_omega1", kind1, tau);
    cfg.mdp.truth.alpha[0] = 1.0 - alpha1;
    cfg.mdp.truth.alpha[1] = alpha1;
    cfg.mdp.init_est.alpha[0] = 1.0 - alpha1;
    cfg.mdp.init_est.alpha[1] = alpha1;
  }

  ks.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error while reading config file: " + path);
  return parse_config_text(buf.str());
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("config key seeds: empty list");
  if (group_tags.size() != world.truth.n_groups() ||
      group_tags.size() != engine.init_est.n_groups()) {
    throw ConfigError("config: group tag/definition count mismatch");
  }
  if (!(regret_beta >= 0.0)) {
    throw ConfigError("config key regret_beta: must be >= 0");
  }
  try {
    engine.validate();
    world.validate();
    if (has_mdp) {
      mdp.costs.validate();
      mdp.truth.validate();
      mdp.init_est.validate();
      if (mdp_replications < 2) {
        throw std::domain_error("mdp.replications must be >= 2");
      }
    }
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

const std::vector<std::string>& sweepable_params() {
  static const std::vector<std::string> names = {
      "tau0",       "tau1",      "eps0",       "eps_step",
      "eps_every",  "eps_gain",  "eps_window", "eps_min",
      "eps_max",    "batch_min", "eta",        "gamma",
      "regret_beta", "fairness_slack"};
  return names;
}

void apply_sweep_value(ExperimentConfig& cfg, const std::string& param,
                       double value) {
  auto as_count = [&](const char* what) {
    if (!(value >= 0.0) || value != std::floor(value)) {
      throw ConfigError(std::string("sweep parameter ") + what +
                        ": expected a non-negative integer, got " +
                        std::to_string(value));
    }
    return static_cast<std::uint64_t>(value);
  };
  auto reanchor = [&](int label) {
    // Hold every free parameter fixed; move the tracked percentile level.
    for (std::size_t g = 0; g < cfg.group_tags.size(); ++g) {
      auto& truth = cfg.world.truth.group(g).dist[label];
      auto& init = cfg.engine.init_est.group(g).dist[label];
      truth = DistEstimate::from_psi(truth.kind, truth.psi, value);
      init = DistEstimate::from_psi(init.kind, init.psi, value);
    }
  };

  if (param == "tau0") {
    reanchor(0);
  } else if (param == "tau1") {
    reanchor(1);
  } else if (param == "eps0") {
    cfg.engine.schedule.eps0 = value;
  } else if (param == "eps_step") {
    cfg.engine.schedule.step = value;
  } else if (param == "eps_every") {
    cfg.engine.schedule.every = as_count("eps_every");
  } else if (param == "eps_gain") {
    cfg.engine.schedule.gain = value;
  } else if (param == "eps_window") {
    cfg.engine.schedule.window = as_count("eps_window");
  } else if (param == "eps_min") {
    cfg.engine.schedule.eps_min = value;
  } else if (param == "eps_max") {
    cfg.engine.schedule.eps_max = value;
  } else if (param == "batch_min") {
    cfg.engine.batch_min = static_cast<std::size_t>(as_count("batch_min"));
  } else if (param == "eta") {
    cfg.engine.eta = value;
  } else if (param == "gamma") {
    cfg.engine.gamma = value;
  } else if (param == "regret_beta") {
    cfg.regret_beta = value;
  } else if (param == "fairness_slack") {
    cfg.engine.fairness.slack = value;
  } else {
    std::string known;
    for (const auto& n : sweepable_params()) {
      if (!known.empty()) known += ", ";
      known += n;
    }
    throw ConfigError("unknown sweep parameter: " + param +
                      " (expected one of: " + known + ")");
  }
  try {
    cfg.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("sweep parameter ") + param +
                      " left the config invalid: " + e.what());
  }
}

}  // namespace debias
