#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "debias/config.hpp"
#include "debias/engine.hpp"
#include "debias/mdp.hpp"

namespace debias {

struct RunOutput {
  std::uint64_t run_id = 0;
  std::uint64_t seed = 0;
  Trajectory traj;
};

// Number of worker threads for n_jobs independent jobs: at most the hardware
// concurrency, further capped by the DEBIAS_LAB_THREADS environment variable
// (which must be a positive integer when set), never more than n_jobs and
// never less than 1.
unsigned resolve_thread_cap(std::size_t n_jobs);

// One engine run per configured seed (run r uses the stream derived from
// seeds[r]). Runs execute in parallel up to resolve_thread_cap, but results
// are slotted by run index and every stream is self-contained, so the output
// is identical for every thread count.
std::vector<RunOutput> run_experiment(const ExperimentConfig& cfg);

// Deterministic decimal rendering: %.12g with the C locale, NaN spelled
// "nan" and infinities "inf"/"-inf".
std::string format_double(double v);

// CSV column headers (golden-tested; ASCII, LF endings, no trailing
// delimiter, one header line).
extern const char* const kTrajectoryHeader;
extern const char* const kSummaryHeader;
extern const char* const kMdpHeader;
extern const char* const kFpFnHeader;

// One row per (update round x group x label), including the initial
// round-0 snapshot. Population-level columns (epsilon, eo_gap, regret) repeat
// across the rows of a round.
void write_trajectory_csv(std::ostream& os, const ExperimentConfig& cfg,
                          const std::vector<RunOutput>& runs);

// Final state per (run, group, label): estimates, bias error, total regret.
void write_summary_csv(std::ostream& os, const ExperimentConfig& cfg,
                       const std::vector<RunOutput>& runs);

// Per-action mean/standard-error of the two-stage cost components.
void write_mdp_csv(std::ostream& os, const ComparisonReport& report);

// Cumulative false-positive/false-negative counts sampled at every update
// round, stacked over the sweep values (value_tokens[i] labels
// runs_per_value[i]).
void write_fp_fn_csv(std::ostream& os, const std::string& param,
                     const std::vector<std::string>& value_tokens,
                     const std::vector<std::vector<RunOutput>>& runs_per_value);

}  // namespace debias
