#include "hetsched/sim_harness.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

namespace hetsched {

namespace {

constexpr std::uint64_t kLossStreamSalt = 0x9E3779B97F4A7C15ULL;

void require(bool ok, const std::string& what) {
  if (!ok) {
    throw InvalidArgument(what);
  }
}

}  // namespace

void Scenario::validate() const {
  require(!sensors.empty(), "scenario needs at least one sensor");
  require(duration_steps >= 1, "duration_steps must be >= 1");
  require(dt_s > 0.0, "dt_s must be > 0");
  require(horizon_T >= 1, "horizon_T must be >= 1");
  require(traffic.mean_rate_bytes_per_s >= 0.0, "mean rate must be >= 0");
  require(traffic.spread >= 0.0 && traffic.spread <= 1.0, "spread must lie in [0, 1]");
  require(capacity_bits >= 0.0, "buffer capacity must be >= 0");
  require(initial_depth_bits >= 0.0 && initial_depth_bits <= capacity_bits,
          "initial depth must lie in [0, capacity]");
  link.validate();
  for (const auto& s : sensors) {
    s.validate();
  }
  terminal.validate();
}

SchedulerParams Scenario::scheduler_params() const {
  SchedulerParams p;
  p.link = link;
  p.sensors = sensors;
  p.p_b = bit_error_rate(link.radio);
  p.dt_s = dt_s;
  p.horizon_T = horizon_T;
  p.terminal = terminal;
  p.bnb = bnb;
  return p;
}

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

TrafficTrace generate_traffic(const TrafficSpec& spec, std::size_t sensors, std::size_t steps,
                              double dt_s, std::uint64_t seed) {
  require(spec.mean_rate_bytes_per_s >= 0.0, "mean rate must be >= 0");
  TrafficTrace trace(sensors, steps);
  const double mean_bits = 8.0 * spec.mean_rate_bytes_per_s * dt_s;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < steps; ++i) {
    for (std::size_t n = 0; n < sensors; ++n) {
      double bits = mean_bits;
      if (spec.distribution == TrafficDistribution::Uniform) {
        bits *= 1.0 + spec.spread * (2.0 * unit_uniform(rng) - 1.0);
      }
      trace.set(n, i, static_cast<std::int64_t>(std::llround(bits)));
    }
  }
  return trace;
}

double loss_realization(std::int64_t size_bits, double p_b, LossMode mode, std::mt19937_64& rng) {
  if (size_bits <= 0) {
    return 0.0;
  }
  const double size = static_cast<double>(size_bits);
  const double s = success_prob(size, p_b);
  if (mode == LossMode::MonteCarlo) {
    return unit_uniform(rng) < s ? size : 0.0;
  }
  return std::floor(size * s / kDeliveryQuantum) * kDeliveryQuantum;
}

void check_scenario(const Scenario& scenario, const TrafficTrace& trace, double p_b) {
  for (std::size_t n = 0; n < trace.sensors(); ++n) {
    std::int64_t peak = 0;
    for (std::size_t i = 0; i < trace.steps(); ++i) {
      peak = std::max(peak, trace.at(n, i));
    }
    const double d = static_cast<double>(peak);
    const SensorSpec& s = scenario.sensors[n];
    const bool plc_never = d / scenario.link.plc_rate_bps > s.delay_bound_s;
    const bool lte_never = success_prob(d, p_b) < s.min_success_prob;
    if (plc_never && lte_never) {
      throw InfeasibleScenarioError(
          fmt::format("sensor {}: a {}-bit sample misses the {} s delay bound on PLC and the {} "
                      "success probability on LTE",
                      n, peak, s.delay_bound_s, s.min_success_prob));
    }
  }
}

RunMetrics run_simulation(const Scenario& scenario, PolicyKind policy, const StepHook& hook) {
  scenario.validate();
  const TrafficTrace trace = generate_traffic(scenario.traffic, scenario.sensors.size(),
                                              scenario.duration_steps, scenario.dt_s,
                                              scenario.seed);
  return run_simulation(scenario, trace, policy, hook);
}

RunMetrics run_simulation(const Scenario& scenario, const TrafficTrace& trace, PolicyKind policy,
                          const StepHook& hook) {
  scenario.validate();
  require(trace.sensors() == scenario.sensors.size(), "trace rows must match the sensor list");
  require(trace.steps() == scenario.duration_steps, "trace length must equal duration_steps");
  SchedulerParams params = scenario.scheduler_params();
  check_scenario(scenario, trace, params.p_b);

  SchedulerState state{BufferState(scenario.initial_depth_bits, scenario.capacity_bits), 0.0, 0,
                       {}};
  std::mt19937_64 loss_rng(scenario.seed ^ kLossStreamSalt);
  RunMetrics m;
  m.initial_bits = scenario.initial_depth_bits;
  double drained_total = 0.0;

  for (std::size_t k = 0; k < scenario.duration_steps; ++k) {
    if (hook) {
      hook(k, params);
    }
    const auto arrivals = trace.column(k);
    Column column;
    switch (policy) {
      case PolicyKind::Mpc: {
        MpcDecision d = mpc_decide(state, trace.window(k, params.horizon_T), params);
        column = std::move(d.column);
        m.mpc_trace.push_back({std::move(d.problem), std::move(d.plan)});
        break;
      }
      case PolicyKind::Greedy: column = greedy_column(state, arrivals, params); break;
      case PolicyKind::SinglePlc: column = single_plc_column(state, arrivals, params); break;
      case PolicyKind::SingleLte: column = single_lte_column(state, arrivals, params); break;
    }

    auto [next, step] = apply_column(state, arrivals, column, params);
    state = std::move(next);

    drained_total += step.drained_bits;
    m.overflow_bits += step.overflow_bits;
    for (std::size_t n = 0; n < arrivals.size(); ++n) {
      m.arrived_bits += static_cast<double>(arrivals[n]);
      if (column.x[n] == 0.0 && arrivals[n] > 0) {
        const double sent = static_cast<double>(arrivals[n]);
        const double delivered = loss_realization(arrivals[n], params.p_b, scenario.loss_mode,
                                                  loss_rng);
        m.wireless_offered_bits += sent;
        m.wireless_delivered_bits += delivered;
        m.wireless_lost_bits += sent - delivered;
      }
    }
    // FIFO: the initial backlog leaves the buffer first.
    m.backlog_drained_bits = std::min(m.initial_bits, drained_total);
    m.plc_delivered_bits = drained_total - m.backlog_drained_bits;

    m.cumulative_throughput_bits.push_back(m.plc_delivered_bits + m.wireless_delivered_bits);
    m.buffer_depth_bits.push_back(state.buffer.depth_bits);
    m.packet_loss_rate.push_back(
        m.wireless_offered_bits > 0.0 ? m.wireless_lost_bits / m.wireless_offered_bits : 0.0);
    m.rb_consumed.push_back(state.rb_consumed);
    m.decisions.push_back(column.x);
    m.violations.push_back(column.violations.size());
  }
  m.violation_log = state.violation_log;
  m.final_buffer_bits = state.buffer.depth_bits;
  return m;
}

bool conserves_bits(const RunMetrics& m) {
  const double offered = m.initial_bits + m.arrived_bits;
  const double accounted = m.backlog_drained_bits + m.plc_delivered_bits +
                           m.wireless_delivered_bits + m.wireless_lost_bits +
                           m.final_buffer_bits + m.overflow_bits;
  return offered == accounted;
}

double series_stddev(const std::vector<double>& series) {
  if (series.empty()) {
    return 0.0;
  }
  double mean = 0.0;
  for (double v : series) {
    mean += v;
  }
  mean /= static_cast<double>(series.size());
  double ss = 0.0;
  for (double v : series) {
    ss += (v - mean) * (v - mean);
  }
  return std::sqrt(ss / static_cast<double>(series.size()));
}

}  // namespace hetsched
