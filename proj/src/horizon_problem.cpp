#include "hetsched/horizon_problem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hetsched {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) {
    throw InvalidArgument(what);
  }
}

void require_shape(const HorizonProblem& problem, const DecisionMatrix& x) {
  require(x.sensors() == problem.sensor_count() && x.steps() == problem.horizon_T,
          "decision matrix does not match the problem dimensions");
}

// -ln(1 - p_b), the per-bit log-survival rate.
double loss_rate(double p_b) { return -std::log1p(-p_b); }

}  // namespace

void TerminalCost::validate() const {
  require(weight >= 0.0, "terminal weight must be >= 0");
  require(alpha > 0.0, "terminal alpha must be > 0");
}

double terminal_cost(const TerminalCost& terminal, double depth_bits) {
  return terminal.weight * depth_bits;
}

bool in_terminal_set(const TerminalCost& terminal, double depth_bits) {
  return terminal_cost(terminal, depth_bits) <= terminal.alpha;
}

DecisionMatrix::DecisionMatrix(std::size_t sensors, std::size_t steps, double fill)
    : values_(sensors, steps, fill) {
  require(fill >= 0.0 && fill <= 1.0, "decision entries must lie in [0, 1]");
}

DecisionMatrix::DecisionMatrix(Grid values) : values_(std::move(values)) {
  for (double v : values_.flat()) {
    require(v >= 0.0 && v <= 1.0, "decision entries must lie in [0, 1]");
  }
}

void DecisionMatrix::set(std::size_t n, std::size_t i, double v) {
  require(v >= 0.0 && v <= 1.0, "decision entries must lie in [0, 1]");
  values_.at(n, i) = v;
}

bool DecisionMatrix::integral() const noexcept {
  return std::all_of(values_.flat().begin(), values_.flat().end(),
                     [](double v) { return v == 0.0 || v == 1.0; });
}

std::vector<double> DecisionMatrix::column(std::size_t i) const {
  std::vector<double> col(sensors());
  for (std::size_t n = 0; n < sensors(); ++n) {
    col[n] = at(n, i);
  }
  return col;
}

void HorizonProblem::validate() const {
  require(horizon_T >= 1, "horizon_T must be >= 1");
  require(window.steps() == horizon_T, "window must have exactly horizon_T columns");
  require(window.sensors() == sensors.size(), "window rows must match the sensor list");
  require(rb_remaining >= 0.0, "rb_remaining must be >= 0");
  require(p_b >= 0.0 && p_b < 1.0, "p_b must lie in [0, 1)");
  require(dt_s > 0.0, "dt_s must be > 0");
  require(initial_depth_bits >= 0.0, "initial depth must be >= 0");
  link.validate();
  for (const auto& s : sensors) {
    s.validate();
  }
  terminal.validate();
}

std::string_view family_name(ConstraintFamily family) {
  switch (family) {
    case ConstraintFamily::Delay: return "h1";
    case ConstraintFamily::Reliability: return "h2";
    case ConstraintFamily::ResourceBudget: return "h3";
    case ConstraintFamily::Box: return "h4";
    case ConstraintFamily::TerminalSet: return "terminal";
    case ConstraintFamily::Horizon: return "horizon";
  }
  return "unknown";
}

double stage_reward(double d_bits, double x, double p_b) {
  const double u = d_bits * (1.0 - x);
  return d_bits * x + u * success_prob(u, p_b);
}

double stage_reward_derivative(double d_bits, double x, double p_b) {
  if (d_bits <= 0.0 || p_b <= 0.0) {
    return 0.0;
  }
  // D * (1 - s^u (1 + u ln s)) with a = -u ln s, rearranged to avoid the
  // cancellation near a = 0: D * (-expm1(-a) + a e^-a).
  const double a = d_bits * (1.0 - x) * loss_rate(p_b);
  return d_bits * (-std::expm1(-a) + a * std::exp(-a));
}

std::vector<double> predicted_depths(const HorizonProblem& problem, const DecisionMatrix& x) {
  require_shape(problem, x);
  const double drain = problem.drain_per_step();
  std::vector<double> m(problem.horizon_T + 1);
  m[0] = problem.initial_depth_bits;
  for (std::size_t i = 0; i < problem.horizon_T; ++i) {
    double delta = 0.0;
    for (std::size_t n = 0; n < problem.sensor_count(); ++n) {
      delta += x.at(n, i) * (problem.arrival(n, i) - drain);
    }
    m[i + 1] = m[i] + delta;
  }
  return m;
}

double objective(const HorizonProblem& problem, const DecisionMatrix& x) {
  require_shape(problem, x);
  double total = 0.0;
  for (std::size_t n = 0; n < problem.sensor_count(); ++n) {
    for (std::size_t i = 0; i < problem.horizon_T; ++i) {
      total += stage_reward(problem.arrival(n, i), x.at(n, i), problem.p_b);
    }
  }
  const auto m = predicted_depths(problem, x);
  return total + terminal_cost(problem.terminal, m.back());
}

double delay_relief(const HorizonProblem& problem, std::size_t n, std::size_t i) {
  const double drain = problem.drain_per_step();
  double m_max = problem.initial_depth_bits;
  for (std::size_t j = 0; j < i; ++j) {
    for (std::size_t k = 0; k < problem.sensor_count(); ++k) {
      m_max += std::max(0.0, problem.arrival(k, j) - drain);
    }
  }
  const double worst =
      (problem.arrival(n, i) + m_max) / problem.link.plc_rate_bps - problem.sensors[n].delay_bound_s;
  return std::max(0.0, worst);
}

double constraint_h1(const HorizonProblem& problem, const DecisionMatrix& x,
                     std::size_t n, std::size_t i) {
  const auto m = predicted_depths(problem, x);
  const double wait = (problem.arrival(n, i) + m[i]) / problem.link.plc_rate_bps;
  return wait - problem.sensors[n].delay_bound_s - delay_relief(problem, n, i) * (1.0 - x.at(n, i));
}

double constraint_h2(const HorizonProblem& problem, const DecisionMatrix& x,
                     std::size_t n, std::size_t i) {
  require_shape(problem, x);
  const double u = problem.arrival(n, i) * (1.0 - x.at(n, i));
  return problem.sensors[n].min_success_prob - success_prob(u, problem.p_b);
}

double constraint_h3(const HorizonProblem& problem, const DecisionMatrix& x) {
  require_shape(problem, x);
  double bits = 0.0;
  for (std::size_t n = 0; n < problem.sensor_count(); ++n) {
    for (std::size_t i = 0; i < problem.horizon_T; ++i) {
      bits += problem.arrival(n, i) * (1.0 - x.at(n, i));
    }
  }
  return bits / problem.link.rb_rate_bps - problem.rb_remaining;
}

double constraint_h4(const DecisionMatrix& x, std::size_t n, std::size_t i) {
  return x.at(n, i) - 1.0;
}

double constraint_terminal(const HorizonProblem& problem, const DecisionMatrix& x) {
  const auto m = predicted_depths(problem, x);
  return terminal_cost(problem.terminal, m.back()) - problem.terminal.alpha;
}

Grid h1_gradient(const HorizonProblem& problem, std::size_t n, std::size_t i) {
  Grid g(problem.sensor_count(), problem.horizon_T);
  const double r = problem.link.plc_rate_bps;
  const double drain = problem.drain_per_step();
  for (std::size_t j = 0; j < i; ++j) {
    for (std::size_t k = 0; k < problem.sensor_count(); ++k) {
      g.at(k, j) = (problem.arrival(k, j) - drain) / r;
    }
  }
  g.at(n, i) += delay_relief(problem, n, i);
  return g;
}

double h2_derivative(const HorizonProblem& problem, const DecisionMatrix& x,
                     std::size_t n, std::size_t i) {
  const double d = problem.arrival(n, i);
  if (d <= 0.0 || problem.p_b <= 0.0) {
    return 0.0;
  }
  const double c = loss_rate(problem.p_b);
  return -d * c * success_prob(d * (1.0 - x.at(n, i)), problem.p_b);
}

Grid h3_gradient(const HorizonProblem& problem) {
  Grid g(problem.sensor_count(), problem.horizon_T);
  for (std::size_t n = 0; n < problem.sensor_count(); ++n) {
    for (std::size_t i = 0; i < problem.horizon_T; ++i) {
      g.at(n, i) = -problem.arrival(n, i) / problem.link.rb_rate_bps;
    }
  }
  return g;
}

Grid terminal_gradient(const HorizonProblem& problem) {
  Grid g(problem.sensor_count(), problem.horizon_T);
  const double drain = problem.drain_per_step();
  for (std::size_t n = 0; n < problem.sensor_count(); ++n) {
    for (std::size_t i = 0; i < problem.horizon_T; ++i) {
      g.at(n, i) = problem.terminal.weight * (problem.arrival(n, i) - drain);
    }
  }
  return g;
}

Grid gradient(const HorizonProblem& problem, const DecisionMatrix& x) {
  require_shape(problem, x);
  Grid g = terminal_gradient(problem);
  for (std::size_t n = 0; n < problem.sensor_count(); ++n) {
    for (std::size_t i = 0; i < problem.horizon_T; ++i) {
      g.at(n, i) += stage_reward_derivative(problem.arrival(n, i), x.at(n, i), problem.p_b);
    }
  }
  return g;
}

FeasibilityReport is_feasible(const HorizonProblem& problem, const DecisionMatrix& x, double tol) {
  require_shape(problem, x);
  FeasibilityReport report;
  auto check = [&](ConstraintFamily family, std::size_t n, std::size_t i, double value) {
    if (value > tol) {
      report.feasible = false;
      report.violations.push_back({family, n, i, value});
    }
  };
  for (std::size_t n = 0; n < problem.sensor_count(); ++n) {
    for (std::size_t i = 0; i < problem.horizon_T; ++i) {
      check(ConstraintFamily::Delay, n, i, constraint_h1(problem, x, n, i));
      check(ConstraintFamily::Reliability, n, i, constraint_h2(problem, x, n, i));
      check(ConstraintFamily::Box, n, i, constraint_h4(x, n, i));
    }
  }
  check(ConstraintFamily::ResourceBudget, 0, 0, constraint_h3(problem, x));
  if (problem.terminal.enforce) {
    check(ConstraintFamily::TerminalSet, 0, 0, constraint_terminal(problem, x));
  }
  return report;
}

KktMultipliers KktMultipliers::zeros(const HorizonProblem& problem) {
  const std::size_t count = problem.sensor_count() * problem.horizon_T;
  KktMultipliers m;
  m.lambda1.assign(count, 0.0);
  m.lambda2.assign(count, 0.0);
  m.lambda3.assign(1, 0.0);
  m.lambda4.assign(count, 0.0);
  m.terminal.assign(problem.terminal.enforce ? 1 : 0, 0.0);
  return m;
}

}  // namespace hetsched
