#include "debias/runner.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "debias/dataio.hpp"
#include "debias/errors.hpp"
#include "debias/metrics.hpp"

namespace debias {

unsigned resolve_thread_cap(std::size_t n_jobs) {
  unsigned cap = std::thread::hardware_concurrency();
  if (cap == 0) cap = 1;
  if (const char* env = std::getenv("DEBIAS_LAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v <= 0) {
      throw ConfigError(
          "DEBIAS_LAB_THREADS must be a positive integer, got '" +
          std::string(env) + "'");
    }
    cap = std::min<unsigned long>(cap, static_cast<unsigned long>(v));
  }
  if (n_jobs < cap) cap = static_cast<unsigned>(n_jobs);
  return std::max(1u, cap);
}

std::vector<RunOutput> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.seeds.size();
  std::vector<RunOutput> out(n);

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;

  auto worker = [&]() {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= n) return;
      try {
        const RandomStream stream = RandomStream::derive(cfg.seeds[r], 0);
        const std::vector<AgentArrival> arrivals =
            synth_stream(cfg.world, static_cast<std::size_t>(cfg.horizon),
                         stream);
        EngineState state(cfg.engine, stream);
        out[r].run_id = r;
        out[r].seed = cfg.seeds[r];
        out[r].traj = state.run(arrivals);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };

  const unsigned threads = resolve_thread_cap(n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

const char* const kTrajectoryHeader =
    "run_id,seed,t,group,label,omega_hat,psi,omega_true,theta,lb,ub,epsilon,"
    "batch_n,clamped,accuracy_window,eo_gap,regret_cum,wregret_cum,bias_err,"
    "exploration_error";
const char* const kSummaryHeader =
    "run_id,seed,group,label,omega_hat,omega_true,bias_err,regret_total,"
    "wregret_total,rounds,arrivals";
const char* const kMdpHeader =
    "action,exp_cost_mean,exp_cost_se,miss1_mean,miss1_se,miss2_mean,miss2_se,"
    "total_mean,total_se,abs_gap_mean,abs_gap_se,dominance_condition";
const char* const kFpFnHeader = "param,value,run_id,seed,t,fp_cum,fn_cum";

namespace {

// Cumulative series sampled at a trajectory point: value after `arrivals`
// records (0 before the first decision).
double series_at(const std::vector<double>& series, std::uint64_t arrivals) {
  if (arrivals == 0 || series.empty()) return 0.0;
  const std::size_t idx =
      std::min<std::size_t>(static_cast<std::size_t>(arrivals), series.size());
  return series[idx - 1];
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const ExperimentConfig& cfg,
                          const std::vector<RunOutput>& runs) {
  os << kTrajectoryHeader << "\n";
  const OracleRef oracle = make_oracle(cfg.world, cfg.engine.fairness);
  for (const RunOutput& run : runs) {
    const std::vector<double> reg = regret(run.traj.records, oracle);
    const std::vector<double> wreg =
        weighted_regret(run.traj.records, oracle, cfg.regret_beta);
    for (const TrajectoryPoint& pt : run.traj.points) {
      const double reg_cum = series_at(reg, pt.arrivals);
      const double wreg_cum = series_at(wreg, pt.arrivals);
      for (std::size_t g = 0; g < pt.groups.size(); ++g) {
        const TrajectoryGroup& tg = pt.groups[g];
        const GroupEstimate& truth = cfg.world.truth.group(g);
        for (int y = 0; y < 2; ++y) {
          const TrajectoryCell& cell = tg.cell[static_cast<std::size_t>(y)];
          const double omega_true =
              truth.dist[static_cast<std::size_t>(y)].omega;
          os << run.run_id << ',' << run.seed << ',' << pt.arrivals << ','
             << cfg.group_tags[g] << ',' << y << ','
             << format_double(cell.omega_hat) << ',' << format_double(cell.psi)
             << ',' << format_double(omega_true) << ','
             << format_double(tg.theta) << ',' << format_double(tg.lb) << ','
             << format_double(tg.ub) << ',' << format_double(pt.epsilon) << ','
             << cell.batch_n << ',' << (cell.clamped ? 1 : 0) << ','
             << format_double(tg.accuracy) << ',' << format_double(pt.eo_gap)
             << ',' << format_double(reg_cum) << ',' << format_double(wreg_cum)
             << ',' << format_double(std::abs(cell.omega_hat - omega_true))
             << ',' << format_double(tg.exploration_error) << '\n';
        }
      }
    }
  }
}

void write_summary_csv(std::ostream& os, const ExperimentConfig& cfg,
                       const std::vector<RunOutput>& runs) {
  os << kSummaryHeader << "\n";
  const OracleRef oracle = make_oracle(cfg.world, cfg.engine.fairness);
  for (const RunOutput& run : runs) {
    const std::vector<double> reg = regret(run.traj.records, oracle);
    const std::vector<double> wreg =
        weighted_regret(run.traj.records, oracle, cfg.regret_beta);
    const double reg_total = reg.empty() ? 0.0 : reg.back();
    const double wreg_total = wreg.empty() ? 0.0 : wreg.back();
    const TrajectoryPoint& last = run.traj.points.back();
    for (std::size_t g = 0; g < last.groups.size(); ++g) {
      const GroupEstimate& truth = cfg.world.truth.group(g);
      for (int y = 0; y < 2; ++y) {
        const TrajectoryCell& cell =
            last.groups[g].cell[static_cast<std::size_t>(y)];
        const double omega_true = truth.dist[static_cast<std::size_t>(y)].omega;
        os << run.run_id << ',' << run.seed << ',' << cfg.group_tags[g] << ','
           << y << ',' << format_double(cell.omega_hat) << ','
           << format_double(omega_true) << ','
           << format_double(std::abs(cell.omega_hat - omega_true)) << ','
           << format_double(reg_total) << ',' << format_double(wreg_total)
           << ',' << last.round << ',' << run.traj.records.size() << '\n';
      }
    }
  }
}

void write_mdp_csv(std::ostream& os, const ComparisonReport& report) {
  os << kMdpHeader << "\n";
  for (const ActionStats& st : report.actions) {
    os << to_string(st.action) << ',' << format_double(st.exp_cost.mean) << ','
       << format_double(st.exp_cost.se) << ','
       << format_double(st.miss_cost_1.mean) << ','
       << format_double(st.miss_cost_1.se) << ','
       << format_double(st.miss_cost_2.mean) << ','
       << format_double(st.miss_cost_2.se) << ','
       << format_double(st.total.mean) << ',' << format_double(st.total.se)
       << ',' << format_double(st.abs_gap.mean) << ','
       << format_double(st.abs_gap.se) << ','
       << (report.dominance_condition ? 1 : 0) << '\n';
  }
}

void write_fp_fn_csv(std::ostream& os, const std::string& param,
                     const std::vector<std::string>& value_tokens,
                     const std::vector<std::vector<RunOutput>>& runs_per_value) {
  os << kFpFnHeader << "\n";
  for (std::size_t vi = 0; vi < value_tokens.size(); ++vi) {
    for (const RunOutput& run : runs_per_value.at(vi)) {
      std::uint64_t fp = 0;
      std::uint64_t fn = 0;
      std::size_t consumed = 0;
      for (const TrajectoryPoint& pt : run.traj.points) {
        while (consumed < pt.arrivals && consumed < run.traj.records.size()) {
          const DecisionRecord& rec = run.traj.records[consumed++];
          const bool admitted = rec.decision != DecisionKind::Reject;
          if (admitted && rec.arrival.y_true == 0) ++fp;
          if (!admitted && rec.arrival.y_true == 1) ++fn;
        }
        os << param << ',' << value_tokens[vi] << ',' << run.run_id << ','
           << run.seed << ',' << pt.arrivals << ',' << fp << ',' << fn << '\n';
      }
    }
  }
}

}  // namespace debias
