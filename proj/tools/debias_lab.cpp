// debias_lab: config-driven experiment runner for the bounded-exploration
// debiasing library. Subcommands:
//   simulate  one engine run per seed -> trajectory.csv + summary.csv
//   mdp       replicated two-stage action comparison -> mdp_report.csv
//   sweep     simulate over a list of values for one parameter -> per-value
//             trajectories + combined fp_fn.csv
//   fit       score a labeled CSV with a logistic mapping and print fitted
//             per-(group,label) distributions as a config fragment
// Exit codes: 0 ok, 2 configuration/validation error, 3 I/O error.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "debias/config.hpp"
#include "debias/dataio.hpp"
#include "debias/errors.hpp"
#include "debias/mdp.hpp"
#include "debias/runner.hpp"

namespace {

using debias::ConfigError;
using debias::IoError;

std::ofstream open_output(const std::filesystem::path& dir,
                          const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create output directory " + dir.string() + ": " +
                  ec.message());
  }
  const std::filesystem::path path = dir / name;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  return os;
}

void finish_output(std::ofstream& os, const std::string& what) {
  os.flush();
  if (!os) throw IoError("error while writing " + what);
}

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    // trim
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string sanitize_token(const std::string& tok) {
  std::string out = tok;
  for (char& c : out) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' ||
                    c == '-' || c == '_';
    if (!ok) c = '_';
  }
  return out;
}

int run_simulate(const std::string& config_path, const std::string& out_dir,
                 bool has_seed_override, std::uint64_t seed_override) {
  debias::ExperimentConfig cfg = debias::load_config(config_path);
  if (has_seed_override) cfg.seeds = {seed_override};
  const std::vector<debias::RunOutput> runs = debias::run_experiment(cfg);

  std::ofstream traj = open_output(out_dir, "trajectory.csv");
  debias::write_trajectory_csv(traj, cfg, runs);
  finish_output(traj, "trajectory.csv");

  std::ofstream summary = open_output(out_dir, "summary.csv");
  debias::write_summary_csv(summary, cfg, runs);
  finish_output(summary, "summary.csv");
  return 0;
}

int run_mdp(const std::string& config_path, const std::string& out_dir,
            std::size_t replications_override) {
  debias::ExperimentConfig cfg = debias::load_config(config_path);
  if (!cfg.has_mdp) {
    throw ConfigError(
        "config has no mdp.* section (missing config key: mdp.true_omega0)");
  }
  std::size_t reps = cfg.mdp_replications;
  if (replications_override > 0) reps = replications_override;
  const debias::ComparisonReport report =
      debias::compare_actions(cfg.mdp, reps, cfg.seeds.front());

  std::ofstream os = open_output(out_dir, "mdp_report.csv");
  debias::write_mdp_csv(os, report);
  finish_output(os, "mdp_report.csv");
  return 0;
}

int run_sweep(const std::string& config_path, const std::string& out_dir,
              const std::string& param, const std::string& values_raw) {
  const debias::ExperimentConfig base = debias::load_config(config_path);
  const std::vector<std::string> tokens = split_csv_list(values_raw);
  if (tokens.empty()) throw ConfigError("sweep: empty value list");

  std::vector<std::vector<debias::RunOutput>> runs_per_value;
  for (const std::string& tok : tokens) {
    double value = 0.0;
    try {
      std::size_t pos = 0;
      value = std::stod(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("sweep: value '" + tok + "' is not a number");
    }
    debias::ExperimentConfig cfg = base;
    debias::apply_sweep_value(cfg, param, value);
    std::vector<debias::RunOutput> runs = debias::run_experiment(cfg);

    std::ofstream traj = open_output(
        out_dir, "trajectory_" + param + "_" + sanitize_token(tok) + ".csv");
    debias::write_trajectory_csv(traj, cfg, runs);
    finish_output(traj, "trajectory");
    runs_per_value.push_back(std::move(runs));
  }

  std::ofstream os = open_output(out_dir, "fp_fn.csv");
  debias::write_fp_fn_csv(os, param, tokens, runs_per_value);
  finish_output(os, "fp_fn.csv");
  return 0;
}

struct FitOptions {
  std::string csv_path;
  std::string features_raw;
  std::string group_col;
  std::string label_col;
  std::string family = "gaussian";
  double fixed_beta = 1.0;   // Beta family second parameter
  double fixed_sigma = 1.0;  // Gaussian family standard deviation
  double tau = 50.0;
  double train_frac = 1.0;
  std::size_t iterations = 2000;
  double learning_rate = 0.5;
};

int run_fit(const FitOptions& opt) {
  debias::CsvSchema schema;
  schema.feature_columns = split_csv_list(opt.features_raw);
  schema.group_column = opt.group_col;
  schema.label_column = opt.label_col;
  if (schema.feature_columns.empty()) {
    throw ConfigError("fit: empty --features list");
  }
  if (!(opt.train_frac > 0.0 && opt.train_frac <= 1.0)) {
    throw ConfigError("fit: --train-frac must lie in (0, 1]");
  }
  if (!(opt.tau > 0.0 && opt.tau < 100.0)) {
    throw ConfigError("fit: --tau must lie in (0, 100)");
  }

  debias::FamilyKind kind = debias::FamilyKind::gaussian(opt.fixed_sigma);
  if (opt.family == "beta") {
    kind = debias::FamilyKind::beta(opt.fixed_beta);
  } else if (opt.family != "gaussian") {
    throw ConfigError("fit: --family must be 'gaussian' or 'beta'");
  }

  const debias::LoadResult loaded =
      debias::load_records(opt.csv_path, schema);

  // Train the score mapping on a leading fraction of the rows (deterministic),
  // then score everything.
  const std::size_t n_train = std::max<std::size_t>(
      2, static_cast<std::size_t>(
             std::llround(opt.train_frac *
                          static_cast<double>(loaded.records.size()))));
  std::vector<debias::RawRecord> train(
      loaded.records.begin(),
      loaded.records.begin() +
          static_cast<std::ptrdiff_t>(
              std::min(n_train, loaded.records.size())));
  debias::ScoreMapping mapping =
      debias::fit_score_mapping(train, opt.iterations, opt.learning_rate);
  // The Beta family lives on (0,1) (squashed scores); the Gaussian family
  // takes the raw linear score.
  mapping.squash = kind.family == debias::Family::BetaAlpha;

  std::map<std::string, std::array<std::vector<double>, 2>> scores_by_group;
  std::map<std::string, std::size_t> group_sizes;
  for (const debias::RawRecord& rec : loaded.records) {
    scores_by_group[rec.group][static_cast<std::size_t>(rec.label)].push_back(
        debias::score(mapping, rec));
    ++group_sizes[rec.group];
  }

  std::ostringstream out;
  out << "# fitted from " << opt.csv_path << " (" << loaded.records.size()
      << " rows kept, " << loaded.skipped << " skipped, "
      << train.size() << " used for the score fit)\n";
  out << "# score mapping: intercept = "
      << debias::format_double(mapping.intercept) << ", squash = "
      << (mapping.squash ? 1 : 0) << "\n";
  for (std::size_t i = 0; i < mapping.weights.size(); ++i) {
    out << "#   weight[" << loaded.feature_names[i]
        << "] = " << debias::format_double(mapping.weights[i]) << "\n";
  }
  std::string tags;
  for (const auto& [tag, sizes] : scores_by_group) {
    if (!tags.empty()) tags += ",";
    tags += tag;
  }
  out << "groups = " << tags << "\n";
  for (const auto& [tag, per_label] : scores_by_group) {
    const std::size_t n0 = per_label[0].size();
    const std::size_t n1 = per_label[1].size();
    const std::string p = "group." + tag + ".";
    out << p << "family = " << debias::to_string(kind.family) << "\n";
    out << p << "fixed0 = " << debias::format_double(kind.fixed) << "\n";
    out << p << "fixed1 = " << debias::format_double(kind.fixed) << "\n";
    out << p << "tau0 = " << debias::format_double(opt.tau) << "\n";
    out << p << "tau1 = " << debias::format_double(opt.tau) << "\n";
    out << p << "weight = "
        << debias::format_double(static_cast<double>(n0 + n1) /
                                 static_cast<double>(loaded.records.size()))
        << "\n";
    out << p << "alpha1 = "
        << debias::format_double(static_cast<double>(n1) /
                                 static_cast<double>(n0 + n1))
        << "\n";
    for (int y = 0; y < 2; ++y) {
      const debias::DistEstimate est = debias::fit_distribution(
          per_label[static_cast<std::size_t>(y)], kind, opt.tau);
      out << p << "true_psi" << y << " = " << debias::format_double(est.psi)
          << "  # omega = " << debias::format_double(est.omega) << ", n = "
          << per_label[static_cast<std::size_t>(y)].size() << "\n";
    }
  }
  std::cout << out.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bounded-exploration debiasing lab"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed_override = 0;
  std::uint64_t replications = 0;
  std::string sweep_param;
  std::string sweep_values;
  FitOptions fit;

  CLI::App* sim = app.add_subcommand(
      "simulate", "run the debiasing engine over the configured seeds");
  sim->add_option("config", config_path, "experiment config file")->required();
  sim->add_option("--out", out_dir, "output directory (default .)");
  CLI::Option* seed_opt =
      sim->add_option("--seed", seed_override, "replace the seed list");

  CLI::App* mdp = app.add_subcommand(
      "mdp", "replicated two-stage exploration-action comparison");
  mdp->add_option("config", config_path, "experiment config file")->required();
  mdp->add_option("--out", out_dir, "output directory (default .)");
  mdp->add_option("--replications", replications,
                  "override mdp.replications from the config");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "simulate across a list of values for one parameter");
  sweep->add_option("config", config_path, "experiment config file")
      ->required();
  sweep->add_option("--param", sweep_param, "parameter name")->required();
  sweep->add_option("--values", sweep_values, "comma-separated values")
      ->required();
  sweep->add_option("--out", out_dir, "output directory (default .)");

  CLI::App* fit_cmd = app.add_subcommand(
      "fit", "fit a score mapping + per-(group,label) distributions from CSV");
  fit_cmd->add_option("--csv", fit.csv_path, "labeled input CSV")->required();
  fit_cmd->add_option("--features", fit.features_raw,
                      "comma-separated feature columns")
      ->required();
  fit_cmd->add_option("--group", fit.group_col, "group column")->required();
  fit_cmd->add_option("--label", fit.label_col, "binary label column")
      ->required();
  fit_cmd->add_option("--family", fit.family, "gaussian | beta");
  fit_cmd->add_option("--beta", fit.fixed_beta,
                      "fixed second Beta parameter (family beta)");
  fit_cmd->add_option("--sigma", fit.fixed_sigma,
                      "fixed standard deviation (family gaussian)");
  fit_cmd->add_option("--tau", fit.tau, "reference percentile level");
  fit_cmd->add_option("--train-frac", fit.train_frac,
                      "leading fraction of rows used to fit the score mapping");
  fit_cmd->add_option("--iterations", fit.iterations,
                      "gradient-descent iterations (0 = intercept-only)");
  fit_cmd->add_option("--rate", fit.learning_rate, "gradient-descent rate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed()) {
      return run_simulate(config_path, out_dir, seed_opt->count() > 0,
                          seed_override);
    }
    if (mdp->parsed()) {
      return run_mdp(config_path, out_dir,
                     static_cast<std::size_t>(replications));
    }
    if (sweep->parsed()) {
      return run_sweep(config_path, out_dir, sweep_param, sweep_values);
    }
    if (fit_cmd->parsed()) {
      return run_fit(fit);
    }
    std::cerr << "error: no subcommand given\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
}
