#pragma once

// CLI subcommands. Each returns the process exit code and writes its
// diagnostics to `err`.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "hetsched/bnb_solver.hpp"
#include "hetsched/config.hpp"
#include "hetsched/receding_scheduler.hpp"
#include "hetsched/sim_harness.hpp"

namespace hetsched {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPropertyFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitInfeasible = 3;

inline constexpr const char* kOutDirEnv = "HETSCHED_OUT_DIR";

/// --out, then output.directory, then $HETSCHED_OUT_DIR, then "out".
std::filesystem::path resolve_out_dir(const ExperimentConfig& cfg,
                                      const std::optional<std::string>& override_dir);

/// "<policy>_d<rate>_seed<seed>.csv"
std::string run_csv_name(PolicyKind policy, double rate_bytes_per_s, std::uint64_t seed);

/// step,throughput_cum_bits,buffer_bits,loss_rate,rb_consumed,violations
/// with one row per simulated step, numbers in shortest round-trip form.
std::string metrics_csv(const RunMetrics& metrics);

struct RunOptions {
  PolicyKind policy = PolicyKind::Mpc;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

int cmd_run(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& out,
            std::ostream& err);

struct SweepOptions {
  bool plots_only = false;
  std::optional<std::string> out_dir;
};

/// Every policy at every configured rate, then one comparison CSV and plot
/// per (metric, rate) built from the run CSVs, and manifest.json.
int cmd_sweep(const ExperimentConfig& cfg, const SweepOptions& opts, std::ostream& out,
              std::ostream& err);

/// Comparison tables and plots from the run CSVs already in `dir`.
int regenerate_plots(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                     std::ostream& err);

/// Runs the property suites on the configured oracle instances. The
/// enumerator's objective can be replaced to exercise the failure path.
int cmd_oracle_check(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err,
                     const ObjectiveFn& oracle_objective = objective);

}  // namespace hetsched
