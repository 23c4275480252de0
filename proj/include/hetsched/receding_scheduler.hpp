#pragma once

// Receding-horizon control loop step and the baseline policies. Every policy
// produces one decision column per step; apply_column advances the state the
// same way for all of them.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hetsched/bnb_solver.hpp"
#include "hetsched/horizon_problem.hpp"
#include "hetsched/system_model.hpp"

namespace hetsched {

enum class PolicyKind { Mpc, Greedy, SinglePlc, SingleLte };

inline constexpr PolicyKind kAllPolicies[] = {PolicyKind::Mpc, PolicyKind::Greedy,
                                              PolicyKind::SinglePlc, PolicyKind::SingleLte};

/// "mpc", "greedy", "single-plc", "single-lte".
std::string_view policy_name(PolicyKind policy);
std::optional<PolicyKind> parse_policy(std::string_view name);

struct SchedulerParams {
  LinkParams link;
  std::vector<SensorSpec> sensors;
  double p_b = 0.0;
  double dt_s = 1.0;
  std::size_t horizon_T = 5;
  TerminalCost terminal;
  BnbConfig bnb;
  double constraint_tol = kDefaultConstraintTol;
};

inline constexpr std::size_t kAllSensors = std::numeric_limits<std::size_t>::max();

struct ViolationEvent {
  std::size_t step = 0;
  std::size_t sensor = 0;  ///< kAllSensors for horizon-wide events
  ConstraintFamily family = ConstraintFamily::Horizon;

  bool operator==(const ViolationEvent&) const = default;
};

struct SchedulerState {
  BufferState buffer;
  double rb_consumed = 0.0;
  std::size_t step_k = 0;
  std::vector<ViolationEvent> violation_log;
};

struct Column {
  std::vector<double> x;
  std::vector<ViolationEvent> violations;
};

/// RB budget left for the current horizon, max(0, Y - consumed).
double rb_remaining(const SchedulerState& state, const SchedulerParams& params);

/// Clamped buffer update, RB accounting, step counter and
/// violation log. Returns the buffer step details alongside the new state.
std::pair<SchedulerState, BufferStepResult> apply_column(const SchedulerState& state,
                                                         std::span<const std::int64_t> arrivals,
                                                         const Column& column,
                                                         const SchedulerParams& params);

Column greedy_column(const SchedulerState& state, std::span<const std::int64_t> arrivals,
                     const SchedulerParams& params);
Column single_plc_column(const SchedulerState& state, std::span<const std::int64_t> arrivals,
                         const SchedulerParams& params);
Column single_lte_column(const SchedulerState& state, std::span<const std::int64_t> arrivals,
                         const SchedulerParams& params);

HorizonProblem make_horizon_problem(const SchedulerState& state, const TrafficTrace& lookahead,
                                    const SchedulerParams& params);

struct MpcDecision {
  Column column;
  HorizonProblem problem;
  std::optional<DecisionMatrix> plan;  ///< empty when the fallback fired
};

/// Solves the horizon problem by branch and bound and returns its first
/// column. When the horizon problem is infeasible the greedy column is used
/// and a horizon-wide event is logged.
MpcDecision mpc_decide(const SchedulerState& state, const TrafficTrace& lookahead,
                       const SchedulerParams& params);

struct MpcStepResult {
  MpcDecision decision;
  SchedulerState state;
  BufferStepResult buffer;
};

MpcStepResult mpc_step(const SchedulerState& state, const TrafficTrace& lookahead,
                       const SchedulerParams& params);

struct MpcTraceEntry {
  HorizonProblem problem;
  std::optional<DecisionMatrix> plan;
};

struct FeasibilityCheck {
  bool ok = true;
  std::optional<std::size_t> first_failure;  ///< step whose candidate failed
};

/// For each consecutive pair (k, k+1) with a plan at k, shifts the plan by
/// one column, appends the terminal controller column (PLC where the delay
/// bound holds at the predicted depth, LTE otherwise) and checks the
/// candidate against the problem actually posed at k+1.
FeasibilityCheck recursive_feasibility_check(const std::vector<MpcTraceEntry>& trace,
                                             double tol = kDefaultConstraintTol);

}  // namespace hetsched
