#include "hetsched/oracle_suite.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <fmt/format.h>

#include "hetsched/relaxation_solver.hpp"
#include "hetsched/sim_harness.hpp"

namespace hetsched {

namespace {

constexpr int kMaxDraws = 1000;

std::size_t draw(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng() % (hi - lo + 1));
}

HorizonProblem draw_instance(std::mt19937_64& rng, std::size_t max_sensors,
                             std::size_t max_steps) {
  HorizonProblem p;
  const std::size_t N = draw(rng, 1, max_sensors);
  const std::size_t T = draw(rng, 1, max_steps);
  p.horizon_T = T;
  p.window = TrafficTrace(N, T);
  for (std::size_t n = 0; n < N; ++n) {
    SensorSpec s;
    s.id = n;
    s.delay_bound_s = 0.2 + 0.05 * static_cast<double>(draw(rng, 0, 99));
    s.min_success_prob =
        draw(rng, 0, 1) ? 0.5 + static_cast<double>(draw(rng, 0, 99)) / 201.0 : 0.0;
    p.sensors.push_back(s);
    for (std::size_t i = 0; i < T; ++i) {
      p.window.set(n, i, static_cast<std::int64_t>(draw(rng, 0, 59999)));
    }
  }
  p.initial_depth_bits = static_cast<double>(draw(rng, 0, 99999));
  p.rb_remaining = static_cast<double>(draw(rng, 0, 399));
  // p_b <= 3e-5 and D < 6e4 keep c*D below 2.
  p.p_b = 1e-7 * static_cast<double>(draw(rng, 1, 300));
  p.terminal.weight = draw(rng, 0, 1) ? 1e-6 : 1.0;
  p.terminal.alpha = p.terminal.weight * (draw(rng, 0, 1) ? 8e6 : 1e5);
  p.terminal.enforce = draw(rng, 0, 1) == 1;
  p.validate();
  return p;
}

bool has_feasible_assignment(const HorizonProblem& p) {
  try {
    exhaustive_oracle(p);
    return true;
  } catch (const InfeasibleError&) {
    return false;
  }
}

DecisionMatrix interior_point(const HorizonProblem& p, std::mt19937_64& rng) {
  DecisionMatrix x(p.sensor_count(), p.horizon_T);
  for (std::size_t n = 0; n < x.sensors(); ++n) {
    for (std::size_t i = 0; i < x.steps(); ++i) {
      x.set(n, i, 0.05 + 0.9 * unit_uniform(rng));
    }
  }
  return x;
}

using Scalar = std::function<long double(const DecisionMatrix&)>;

long double central_difference(const Scalar& f, DecisionMatrix x, std::size_t n, std::size_t i) {
  const double x0 = x.at(n, i);
  x.set(n, i, x0 + kFdStep);
  const long double up = f(x);
  x.set(n, i, x0 - kFdStep);
  const long double down = f(x);
  return (up - down) / (2.0L * kFdStep);
}

// Straight-line objective in extended precision, so the difference quotient
// is not dominated by roundoff in the sum.
long double objective_extended(const HorizonProblem& p, const DecisionMatrix& x) {
  const long double log_s = std::log1p(-static_cast<long double>(p.p_b));
  const long double drain = static_cast<long double>(p.link.plc_rate_bps) * p.dt_s;
  long double total = 0.0L;
  long double depth = p.initial_depth_bits;
  for (std::size_t i = 0; i < p.horizon_T; ++i) {
    for (std::size_t n = 0; n < p.sensor_count(); ++n) {
      const long double d = p.arrival(n, i);
      const long double xv = x.at(n, i);
      const long double u = d * (1.0L - xv);
      total += d * xv + u * std::exp(u * log_s);
      depth += xv * (d - drain);
    }
  }
  return total + static_cast<long double>(p.terminal.weight) * depth;
}

// Normwise relative error of the analytic gradient against central
// differences; empty when it is below the tolerance.
std::string compare_gradient(const char* what, const Scalar& f, const Grid& analytic,
                             const DecisionMatrix& x) {
  long double err = 0.0L;
  long double norm_a = 0.0L;
  long double norm_fd = 0.0L;
  std::size_t worst_n = 0;
  std::size_t worst_i = 0;
  for (std::size_t n = 0; n < x.sensors(); ++n) {
    for (std::size_t i = 0; i < x.steps(); ++i) {
      const long double fd = central_difference(f, x, n, i);
      const long double a = analytic.at(n, i);
      norm_a = std::max(norm_a, std::abs(a));
      norm_fd = std::max(norm_fd, std::abs(fd));
      if (std::abs(a - fd) > err) {
        err = std::abs(a - fd);
        worst_n = n;
        worst_i = i;
      }
    }
  }
  if (norm_a == 0.0L) {
    // A vanishing gradient must difference to zero up to roundoff in f.
    const long double noise = 1e-12L * std::max(1.0L, std::abs(f(x))) / kFdStep;
    if (norm_fd <= noise) {
      return {};
    }
    return fmt::format("{}: analytic gradient 0, difference norm {}", what,
                       static_cast<double>(norm_fd));
  }
  const long double rel = err / std::max(norm_a, norm_fd);
  if (rel < kFdRelTol) {
    return {};
  }
  return fmt::format("{}: relative error {} at [{}][{}]", what, static_cast<double>(rel), worst_n,
                     worst_i);
}

template <typename Check>
SuiteReport run_suite(const char* name, const SuiteSettings& s, Check check) {
  SuiteReport report;
  report.name = name;
  for (std::size_t k = 0; k < s.instances; ++k) {
    const std::uint64_t seed = instance_seed(s.seed, k);
    const HorizonProblem p = random_instance(seed, s.max_sensors, s.max_steps);
    std::string failure;
    try {
      failure = check(p, seed);
    } catch (const std::exception& e) {
      failure = e.what();
    }
    if (failure.empty()) {
      ++report.passed;
      continue;
    }
    ++report.failed;
    if (!report.first_failing_seed) {
      report.first_failing_seed = seed;
      report.first_failure = fmt::format("seed {} (N={}, T={}): {}", seed, p.sensor_count(),
                                         p.horizon_T, failure);
    }
  }
  return report;
}

}  // namespace

std::uint64_t instance_seed(std::uint64_t base, std::size_t index) {
  return base + static_cast<std::uint64_t>(index);
}

HorizonProblem random_instance(std::uint64_t seed, std::size_t max_sensors,
                               std::size_t max_steps) {
  if (max_sensors == 0 || max_steps == 0) {
    throw InvalidArgument("instance dimensions must be positive");
  }
  if (max_sensors * max_steps > kOracleMaxEntries) {
    throw SizeLimitError(fmt::format("random instances are limited to N*T <= {}", kOracleMaxEntries));
  }
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    HorizonProblem p = draw_instance(rng, max_sensors, max_steps);
    if (has_feasible_assignment(p)) {
      return p;
    }
  }
  throw InvalidArgument(fmt::format("seed {}: no feasible instance drawn", seed));
}

SuiteReport bnb_oracle_suite(const SuiteSettings& settings, const ObjectiveFn& oracle_objective) {
  return run_suite("bnb-vs-exhaustive", settings,
                   [&](const HorizonProblem& p, std::uint64_t) -> std::string {
                     const OracleResult truth = exhaustive_oracle(p, oracle_objective);
                     const BnbResult res = branch_and_bound(p, settings.bnb);
                     if (!res.proven_optimal) {
                       return fmt::format("not proven optimal (gap {})", res.gap);
                     }
                     const double scale = std::max(1.0, std::abs(truth.z_best));
                     if (std::abs(res.z01 - truth.z_best) > kOracleRelTol * scale) {
                       return fmt::format("branch and bound {} vs exhaustive {}", res.z01,
                                          truth.z_best);
                     }
                     return {};
                   });
}

SuiteReport relaxation_bound_suite(const SuiteSettings& settings) {
  return run_suite("relaxation-bound", settings,
                   [&](const HorizonProblem& p, std::uint64_t) -> std::string {
                     const RelaxSolution root = solve_relaxation(p, settings.bnb.relax);
                     const BnbResult res = branch_and_bound(p, settings.bnb);
                     if (root.z_relax + kBoundSlack < res.z01) {
                       return fmt::format("z_relax {} below integral {}", root.z_relax,
                                          res.z01);
                     }
                     return {};
                   });
}

SuiteReport kkt_suite(const SuiteSettings& settings) {
  return run_suite("kkt", settings, [&](const HorizonProblem& p, std::uint64_t) -> std::string {
    const RelaxSolution sol = solve_relaxation(p, settings.bnb.relax);
    const double r = kkt_residual(p, sol.x_relax, sol.multipliers);
    if (!sol.converged) {
      return fmt::format("not converged after {} outer iterations (residual {})",
                         sol.iterations, r);
    }
    if (r > settings.bnb.relax.kkt_tol) {
      return fmt::format("kkt residual {}", r);
    }
    return {};
  });
}

SuiteReport gradient_suite(const SuiteSettings& settings) {
  return run_suite(
      "gradient", settings, [&](const HorizonProblem& p, std::uint64_t seed) -> std::string {
        std::mt19937_64 rng(seed);
        const DecisionMatrix x = interior_point(p, rng);
        const std::size_t N = p.sensor_count();
        const std::size_t T = p.horizon_T;

        std::string err = compare_gradient(
            "objective", [&](const DecisionMatrix& v) { return objective_extended(p, v); },
            gradient(p, x), x);
        if (!err.empty()) {
          return err;
        }
        for (std::size_t n = 0; n < N; ++n) {
          for (std::size_t i = 0; i < T; ++i) {
            err = compare_gradient(
                "h1", [&](const DecisionMatrix& v) { return constraint_h1(p, v, n, i); },
                h1_gradient(p, n, i), x);
            if (!err.empty()) {
              return err;
            }
            Grid g2(N, T);
            g2.at(n, i) = h2_derivative(p, x, n, i);
            err = compare_gradient(
                "h2", [&](const DecisionMatrix& v) { return constraint_h2(p, v, n, i); }, g2,
                x);
            if (!err.empty()) {
              return err;
            }
          }
        }
        err = compare_gradient(
            "h3", [&](const DecisionMatrix& v) { return constraint_h3(p, v); }, h3_gradient(p),
            x);
        if (!err.empty()) {
          return err;
        }
        return compare_gradient(
            "terminal", [&](const DecisionMatrix& v) { return constraint_terminal(p, v); },
            terminal_gradient(p), x);
      });
}

}  // namespace hetsched
