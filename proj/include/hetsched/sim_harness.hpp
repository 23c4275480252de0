#pragma once

// Scenario construction, seeded traffic, wireless loss realization and the
// per-step metric series of one policy run.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "hetsched/receding_scheduler.hpp"

namespace hetsched {

enum class TrafficDistribution { Constant, Uniform };
enum class LossMode { Expected, MonteCarlo };

struct TrafficSpec {
  double mean_rate_bytes_per_s = 200.0;
  TrafficDistribution distribution = TrafficDistribution::Constant;
  double spread = 0.5;  ///< uniform: rate * (1 +/- spread)
};

struct Scenario {
  std::vector<SensorSpec> sensors;
  LinkParams link;
  TrafficSpec traffic;
  std::size_t duration_steps = 100;
  double dt_s = 1.0;
  std::uint64_t seed = 1;
  LossMode loss_mode = LossMode::Expected;
  double initial_depth_bits = 8e4;
  double capacity_bits = 8e6;
  std::size_t horizon_T = 5;
  TerminalCost terminal;
  BnbConfig bnb;

  void validate() const;
  SchedulerParams scheduler_params() const;
};

/// Some sensor can neither meet its delay bound over an empty PLC buffer nor
/// its reliability bound over LTE for one of its samples.
class InfeasibleScenarioError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct RunMetrics {
  std::vector<double> cumulative_throughput_bits;
  std::vector<double> buffer_depth_bits;
  std::vector<double> packet_loss_rate;
  std::vector<double> rb_consumed;
  std::vector<std::vector<double>> decisions;
  std::vector<std::size_t> violations;  ///< events logged at each step
  std::vector<ViolationEvent> violation_log;
  std::vector<MpcTraceEntry> mpc_trace;  ///< filled for the mpc policy

  // Bit accounting over the whole run.
  double initial_bits = 0.0;
  double arrived_bits = 0.0;
  double backlog_drained_bits = 0.0;  ///< initial buffer content sent over PLC
  double plc_delivered_bits = 0.0;    ///< bits sampled during the run sent over PLC
  double wireless_offered_bits = 0.0;
  double wireless_delivered_bits = 0.0;
  double wireless_lost_bits = 0.0;
  double overflow_bits = 0.0;
  double final_buffer_bits = 0.0;
};

/// Wireless delivery is quantized to this many bits in expected mode so that
/// every accumulated quantity is exact in double precision.
inline constexpr double kDeliveryQuantum = 1.0 / 65536.0;

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
double unit_uniform(std::mt19937_64& rng);

TrafficTrace generate_traffic(const TrafficSpec& spec, std::size_t sensors, std::size_t steps,
                              double dt_s, std::uint64_t seed);

double loss_realization(std::int64_t size_bits, double p_b, LossMode mode, std::mt19937_64& rng);

/// Throws InfeasibleScenarioError for the static condition described above.
void check_scenario(const Scenario& scenario, const TrafficTrace& trace, double p_b);

/// Called before each step with the step index; may change the parameters
/// (used to inject disturbances).
using StepHook = std::function<void(std::size_t step, SchedulerParams& params)>;

RunMetrics run_simulation(const Scenario& scenario, PolicyKind policy,
                          const StepHook& hook = nullptr);

/// Same, on a given trace instead of the generated one.
RunMetrics run_simulation(const Scenario& scenario, const TrafficTrace& trace, PolicyKind policy,
                          const StepHook& hook = nullptr);

/// offered = delivered + lost + buffered + overflow, compared exactly.
bool conserves_bits(const RunMetrics& metrics);

double series_stddev(const std::vector<double>& series);

}  // namespace hetsched
