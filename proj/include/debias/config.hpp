#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "debias/engine.hpp"
#include "debias/mdp.hpp"
#include "debias/population.hpp"

namespace debias {

// Canonical config-file spellings of the enums (also used by the CLI when it
// prints config fragments).
std::string to_string(VariantKind v);
std::string to_string(UpdateStrategy s);
std::string to_string(ExplorationAction a);
std::string to_string(FairnessKind k);
std::string to_string(ScheduleKind k);
std::string to_string(Family f);

// A full experiment: the synthetic world, the engine configuration, the seeds
// to replicate over, and (optionally) a two-stage cost-comparison setup.
struct ExperimentConfig {
  std::vector<std::uint64_t> seeds;  // one engine run per listed seed
  std::uint64_t horizon = 0;         // arrivals per run
  double regret_beta = 1.0;          // weighted-regret exponent
  std::vector<std::string> group_tags;
  EngineConfig engine;   // init_est carries the (possibly biased) start
  PopulationSpec world;  // ground truth + group weights

  bool has_mdp = false;  // true when the config carries an mdp.* section
  TwoStageSetup mdp;
  std::size_t mdp_replications = 200;

  void validate() const;
};

// Parse the flat `key = value` config dialect:
//   * one statement per line, `#` starts a comment, blank lines ignored;
//   * group-scoped keys use a `group.<tag>.` prefix, with the tag list given
//     by the `groups` key; two-stage keys use an `mdp.` prefix;
//   * true/initial distributions may be anchored by either the free parameter
//     (`true_psi0`) or the reference percentile (`true_omega0`), exactly one;
//     initial estimates default to the truth when omitted;
//   * group weights are normalized to sum to 1;
//   * duplicate, unknown, or malformed keys throw ConfigError naming the key.
ExperimentConfig parse_config_text(const std::string& text);

// Read and parse a config file. Throws IoError when unreadable.
ExperimentConfig load_config(const std::string& path);

// Re-apply one sweepable numeric parameter to a parsed config. tau0/tau1
// re-anchor every group's distributions at the new percentile level with the
// free parameters held fixed (the world does not change; the tracked
// reference point does). Throws ConfigError for an unknown parameter name and
// revalidates the config afterwards.
void apply_sweep_value(ExperimentConfig& cfg, const std::string& param,
                       double value);

// Names accepted by apply_sweep_value.
const std::vector<std::string>& sweepable_params();

}  // namespace debias
