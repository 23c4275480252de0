#include "hetsched/receding_scheduler.hpp"

#include <algorithm>

namespace hetsched {

namespace {

void require_row(std::span<const std::int64_t> arrivals, const SchedulerParams& params) {
  if (arrivals.size() != params.sensors.size()) {
    throw InvalidArgument("arrivals row does not match the sensor list");
  }
}

bool plc_delay_ok(double d_bits, double depth_bits, const SensorSpec& sensor,
                  const SchedulerParams& params) {
  return (d_bits + depth_bits) / params.link.plc_rate_bps - sensor.delay_bound_s <=
         params.constraint_tol;
}

bool lte_reliability_ok(double d_bits, const SensorSpec& sensor, const SchedulerParams& params) {
  return sensor.min_success_prob - success_prob(d_bits, params.p_b) <= params.constraint_tol;
}

}  // namespace

std::string_view policy_name(PolicyKind policy) {
  switch (policy) {
    case PolicyKind::Mpc: return "mpc";
    case PolicyKind::Greedy: return "greedy";
    case PolicyKind::SinglePlc: return "single-plc";
    case PolicyKind::SingleLte: return "single-lte";
  }
  return "unknown";
}

std::optional<PolicyKind> parse_policy(std::string_view name) {
  for (PolicyKind p : kAllPolicies) {
    if (policy_name(p) == name) {
      return p;
    }
  }
  return std::nullopt;
}

double rb_remaining(const SchedulerState& state, const SchedulerParams& params) {
  return std::max(0.0, params.link.rb_budget - state.rb_consumed);
}

std::pair<SchedulerState, BufferStepResult> apply_column(const SchedulerState& state,
                                                         std::span<const std::int64_t> arrivals,
                                                         const Column& column,
                                                         const SchedulerParams& params) {
  require_row(arrivals, params);
  SchedulerState next = state;
  const BufferStepResult step =
      buffer_step(state.buffer, arrivals, column.x, params.link.plc_rate_bps, params.dt_s);
  next.buffer = step.state;
  double wireless_bits = 0.0;
  for (std::size_t n = 0; n < arrivals.size(); ++n) {
    wireless_bits += static_cast<double>(arrivals[n]) * (1.0 - column.x[n]);
  }
  next.rb_consumed += wireless_bits / params.link.rb_rate_bps;
  next.step_k += 1;
  next.violation_log.insert(next.violation_log.end(), column.violations.begin(),
                            column.violations.end());
  return {next, step};
}

Column greedy_column(const SchedulerState& state, std::span<const std::int64_t> arrivals,
                     const SchedulerParams& params) {
  require_row(arrivals, params);
  Column col;
  col.x.assign(arrivals.size(), 1.0);
  const double budget = rb_remaining(state, params);
  double rb_used = 0.0;
  for (std::size_t n = 0; n < arrivals.size(); ++n) {
    const double d = static_cast<double>(arrivals[n]);
    const SensorSpec& sensor = params.sensors[n];
    const double rb = d / params.link.rb_rate_bps;
    const bool plc_ok = plc_delay_ok(d, state.buffer.depth_bits, sensor, params);
    const bool lte_ok = lte_reliability_ok(d, sensor, params) &&
                        rb_used + rb - budget <= params.constraint_tol;
    const double lte_reward = d * success_prob(d, params.p_b);

    if (lte_ok && (!plc_ok || lte_reward > d)) {
      col.x[n] = 0.0;
      rb_used += rb;
    } else if (!plc_ok) {
      col.violations.push_back({state.step_k, n, ConstraintFamily::Delay});
    }
  }
  return col;
}

Column single_plc_column(const SchedulerState& state, std::span<const std::int64_t> arrivals,
                         const SchedulerParams& params) {
  require_row(arrivals, params);
  Column col;
  col.x.assign(arrivals.size(), 1.0);
  for (std::size_t n = 0; n < arrivals.size(); ++n) {
    const double d = static_cast<double>(arrivals[n]);
    if (!plc_delay_ok(d, state.buffer.depth_bits, params.sensors[n], params)) {
      col.violations.push_back({state.step_k, n, ConstraintFamily::Delay});
    }
  }
  return col;
}

Column single_lte_column(const SchedulerState& state, std::span<const std::int64_t> arrivals,
                         const SchedulerParams& params) {
  require_row(arrivals, params);
  Column col;
  col.x.assign(arrivals.size(), 0.0);
  const double budget = rb_remaining(state, params);
  double rb_used = 0.0;
  for (std::size_t n = 0; n < arrivals.size(); ++n) {
    const double d = static_cast<double>(arrivals[n]);
    if (!lte_reliability_ok(d, params.sensors[n], params)) {
      col.violations.push_back({state.step_k, n, ConstraintFamily::Reliability});
    }
    rb_used += d / params.link.rb_rate_bps;
    if (d > 0.0 && rb_used - budget > params.constraint_tol) {
      col.violations.push_back({state.step_k, n, ConstraintFamily::ResourceBudget});
    }
  }
  return col;
}

HorizonProblem make_horizon_problem(const SchedulerState& state, const TrafficTrace& lookahead,
                                    const SchedulerParams& params) {
  HorizonProblem p;
  p.initial_depth_bits = state.buffer.depth_bits;
  p.window = lookahead;
  p.horizon_T = params.horizon_T;
  p.link = params.link;
  p.sensors = params.sensors;
  p.rb_remaining = rb_remaining(state, params);
  p.p_b = params.p_b;
  p.terminal = params.terminal;
  p.dt_s = params.dt_s;
  p.validate();
  return p;
}

MpcDecision mpc_decide(const SchedulerState& state, const TrafficTrace& lookahead,
                       const SchedulerParams& params) {
  MpcDecision out{{}, make_horizon_problem(state, lookahead, params), std::nullopt};
  try {
    const BnbResult res = branch_and_bound(out.problem, params.bnb);
    out.column.x = res.x01.column(0);
    out.plan = res.x01;
  } catch (const InfeasibleError&) {
    const auto arrivals = lookahead.column(0);
    out.column = greedy_column(state, arrivals, params);
    out.column.violations.insert(out.column.violations.begin(),
                                 {state.step_k, kAllSensors, ConstraintFamily::Horizon});
  }
  return out;
}

MpcStepResult mpc_step(const SchedulerState& state, const TrafficTrace& lookahead,
                       const SchedulerParams& params) {
  MpcDecision decision = mpc_decide(state, lookahead, params);
  const auto arrivals = lookahead.column(0);
  auto [next, buffer] = apply_column(state, arrivals, decision.column, params);
  return {std::move(decision), std::move(next), buffer};
}

FeasibilityCheck recursive_feasibility_check(const std::vector<MpcTraceEntry>& trace, double tol) {
  for (std::size_t k = 0; k + 1 < trace.size(); ++k) {
    if (!trace[k].plan) {
      continue;
    }
    const DecisionMatrix& plan = *trace[k].plan;
    const HorizonProblem& next = trace[k + 1].problem;
    const std::size_t T = next.horizon_T;
    const std::size_t N = next.sensor_count();
    if (plan.steps() != T || plan.sensors() != N) {
      throw InvalidArgument("plan dimensions differ between consecutive steps");
    }

    DecisionMatrix candidate(N, T);
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t i = 0; i + 1 < T; ++i) {
        candidate.set(n, i, plan.at(n, i + 1));
      }
    }
    // Terminal controller on the last column, at the depth predicted for it.
    const double depth = predicted_depths(next, candidate)[T - 1];
    for (std::size_t n = 0; n < N; ++n) {
      const double wait = (next.arrival(n, T - 1) + depth) / next.link.plc_rate_bps;
      candidate.set(n, T - 1, wait - next.sensors[n].delay_bound_s <= tol ? 1.0 : 0.0);
    }

    if (!is_feasible(next, candidate, tol).feasible) {
      return {false, k + 1};
    }
  }
  return {true, std::nullopt};
}

}  // namespace hetsched
