#pragma once

// Continuous relaxation of the horizon problem (x in [0,1]^{N x T}).
//
// Augmented Lagrangian on the delay, reliability, resource-block and
// terminal-set families; the box is handled by projection. Each inner
// subproblem is maximized by projected Newton with Armijo backtracking along
// the projection arc. Reliability is carried internally in its equivalent
// linear form c*D*(1-x) + ln(P_e) <= 0 and mapped back to h2 multipliers.
//
// The result is certified with kkt_residual against the h1..h4 system. The
// certificate is local: when every stage reward is concave (c*D < 2) the
// relaxation is a convex program and the point is globally optimal.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hetsched/horizon_problem.hpp"

namespace hetsched {

struct RelaxConfig {
  double kkt_tol = 1e-6;
  int max_outer = 100;
  int max_inner = 500;
  double penalty_growth = 10.0;
  double penalty_max = 1e8;
  bool record_merit = false;
};

struct RelaxSolution {
  DecisionMatrix x_relax;
  double z_relax = 0.0;
  KktMultipliers multipliers;
  double kkt_residual = 0.0;
  int iterations = 0;  ///< outer iterations
  bool converged = false;
  /// Augmented-Lagrangian merit after each accepted inner step, one vector
  /// per outer iteration. Filled only when RelaxConfig::record_merit is set.
  std::vector<std::vector<double>> merit_trace;
};

/// No point of the (sub)problem satisfies the constraints.
class InfeasibleError : public std::runtime_error {
public:
  InfeasibleError(ConstraintFamily family, double violation);

  ConstraintFamily family() const noexcept { return family_; }
  double violation() const noexcept { return violation_; }

private:
  ConstraintFamily family_;
  double violation_;
};

/// Optional per-entry bounds replacing [0, 1]; used by branch and bound to
/// fix variables.
struct VariableBounds {
  std::vector<double> lower;
  std::vector<double> upper;

  static VariableBounds unit(std::size_t count);
};

RelaxSolution solve_relaxation(const HorizonProblem& problem, const RelaxConfig& cfg = {});

/// Same, restricted to bounds.lower <= x <= bounds.upper. The reported
/// kkt_residual is then measured on the restricted box.
RelaxSolution solve_relaxation(const HorizonProblem& problem, const RelaxConfig& cfg,
                               const VariableBounds& bounds);

/// max of: projected stationarity norm, positive part of every h, most
/// negative multiplier, and largest |lambda * h|.
double kkt_residual(const HorizonProblem& problem, const DecisionMatrix& x,
                    const KktMultipliers& multipliers);

}  // namespace hetsched
