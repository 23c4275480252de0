#pragma once

// One finite-horizon scheduling instance: the throughput objective with its
// terminal cost, the constraint families, analytic gradients, and
// feasibility checks.
//
// Decision x[n][i] = 1 routes sensor n's step-i sample over PLC, 0 over LTE.
// The predicted buffer is the unclamped linear recursion
//   m[0] = m(k),  m[i+1] = m[i] + sum_n x[n][i] * (D[n][i] - r * dt)
// so the objective stays smooth in x.

#include <cstddef>
#include <string_view>
#include <vector>

#include "hetsched/system_model.hpp"

namespace hetsched {

/// Linear terminal cost E(m) = weight * m and terminal set {m : E(m) <= alpha}.
struct TerminalCost {
  double weight = 1e-6;
  double alpha = 1.0;
  bool enforce = true;  ///< add E(m_T) <= alpha as a hard constraint

  void validate() const;
};

double terminal_cost(const TerminalCost& terminal, double depth_bits);
bool in_terminal_set(const TerminalCost& terminal, double depth_bits);

/// N x T matrix of doubles, row-major by sensor.
class Grid {
public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double at(std::size_t n, std::size_t i) const { return data_[n * cols_ + i]; }
  double& at(std::size_t n, std::size_t i) { return data_[n * cols_ + i]; }

  const std::vector<double>& flat() const noexcept { return data_; }
  std::vector<double>& flat() noexcept { return data_; }

  bool operator==(const Grid&) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Decision assignment with every entry in [0, 1].
class DecisionMatrix {
public:
  DecisionMatrix() = default;
  DecisionMatrix(std::size_t sensors, std::size_t steps, double fill = 0.0);
  explicit DecisionMatrix(Grid values);

  std::size_t sensors() const noexcept { return values_.rows(); }
  std::size_t steps() const noexcept { return values_.cols(); }
  std::size_t size() const noexcept { return values_.size(); }

  double at(std::size_t n, std::size_t i) const { return values_.at(n, i); }
  void set(std::size_t n, std::size_t i, double v);

  const Grid& values() const noexcept { return values_; }

  /// True iff every entry is exactly 0 or 1.
  bool integral() const noexcept;

  std::vector<double> column(std::size_t i) const;

  bool operator==(const DecisionMatrix&) const = default;

private:
  Grid values_;
};

struct HorizonProblem {
  double initial_depth_bits = 0.0;
  TrafficTrace window;  ///< arrivals over [k, k+T-1]
  std::size_t horizon_T = 1;
  LinkParams link;
  std::vector<SensorSpec> sensors;
  double rb_remaining = 0.0;
  double p_b = 0.0;
  TerminalCost terminal;
  double dt_s = 1.0;

  std::size_t sensor_count() const noexcept { return sensors.size(); }
  double drain_per_step() const noexcept { return link.plc_rate_bps * dt_s; }
  double arrival(std::size_t n, std::size_t i) const {
    return static_cast<double>(window.at(n, i));
  }

  void validate() const;
};

enum class ConstraintFamily { Delay, Reliability, ResourceBudget, Box, TerminalSet, Horizon };

/// "h1".."h4", "terminal", "horizon".
std::string_view family_name(ConstraintFamily family);

/// D*x + D*(1-x)*(1-p_b)^(D*(1-x)).
double stage_reward(double d_bits, double x, double p_b);

/// d stage_reward / dx.
double stage_reward_derivative(double d_bits, double x, double p_b);

/// Predicted buffer depths m[0..T] under x.
std::vector<double> predicted_depths(const HorizonProblem& problem, const DecisionMatrix& x);

/// Sum of stage rewards plus the terminal cost of the predicted final depth.
double objective(const HorizonProblem& problem, const DecisionMatrix& x);

/// Upper bound of (D + m[i])/r - T_c over the box; the slack granted to h1
/// when the sample goes wireless.
double delay_relief(const HorizonProblem& problem, std::size_t n, std::size_t i);

/// Delay: (D + m[i])/r - T_c - relief * (1 - x). Equals D/r + t - T_c at x = 1.
double constraint_h1(const HorizonProblem& problem, const DecisionMatrix& x,
                     std::size_t n, std::size_t i);
/// Reliability: P_e - (1-p_b)^(D*(1-x)).
double constraint_h2(const HorizonProblem& problem, const DecisionMatrix& x,
                     std::size_t n, std::size_t i);
/// Resource blocks: sum D*(1-x)/R_RB - rb_remaining.
double constraint_h3(const HorizonProblem& problem, const DecisionMatrix& x);
/// Box: x - 1.
double constraint_h4(const DecisionMatrix& x, std::size_t n, std::size_t i);
/// Terminal set: E(m[T]) - alpha.
double constraint_terminal(const HorizonProblem& problem, const DecisionMatrix& x);

/// d h1[n][i] / dx, dense over all entries (h1 is affine).
Grid h1_gradient(const HorizonProblem& problem, std::size_t n, std::size_t i);
/// d h2[n][i] / dx[n][i]; h2 depends on no other entry.
double h2_derivative(const HorizonProblem& problem, const DecisionMatrix& x,
                     std::size_t n, std::size_t i);
Grid h3_gradient(const HorizonProblem& problem);
Grid terminal_gradient(const HorizonProblem& problem);

/// d objective / dx.
Grid gradient(const HorizonProblem& problem, const DecisionMatrix& x);

struct Violation {
  ConstraintFamily family;
  std::size_t n = 0;
  std::size_t i = 0;
  double value = 0.0;
};

struct FeasibilityReport {
  bool feasible = true;
  std::vector<Violation> violations;
};

inline constexpr double kDefaultConstraintTol = 1e-9;

/// Every instantiated constraint value must be <= tol.
FeasibilityReport is_feasible(const HorizonProblem& problem, const DecisionMatrix& x,
                              double tol = kDefaultConstraintTol);

/// One multiplier per instantiated constraint. lambda1, lambda2 and lambda4
/// are N*T row-major; lambda3 has one entry; terminal has one entry when the
/// terminal set is enforced.
struct KktMultipliers {
  std::vector<double> lambda1;
  std::vector<double> lambda2;
  std::vector<double> lambda3;
  std::vector<double> lambda4;
  std::vector<double> terminal;

  static KktMultipliers zeros(const HorizonProblem& problem);
};

}  // namespace hetsched
