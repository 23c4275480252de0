#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "hetsched/oracle_suite.hpp"
#include "hetsched/relaxation_solver.hpp"

using namespace hetsched;
using fixtures::make_problem;

namespace {

// Residual recomputed from the definitions, entry by entry.
double reference_residual(const HorizonProblem& p, const DecisionMatrix& x,
                          const KktMultipliers& l) {
  const std::size_t N = p.sensor_count();
  const std::size_t T = p.horizon_T;
  const double r = p.link.plc_rate_bps;
  const double drain = r * p.dt_s;
  const double c = -std::log1p(-p.p_b);
  double worst = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t i = 0; i < T; ++i) {
      const double d = p.arrival(n, i);
      const double xv = x.at(n, i);
      const double a = d * (1 - xv) * c;
      double g = d * (1 - std::exp(-a) * (1 - a)) + p.terminal.weight * (d - drain);
      // Delay rows (k, j) with j > i see x[n][i] through the predicted depth.
      for (std::size_t k = 0; k < N; ++k) {
        for (std::size_t j = i + 1; j < T; ++j) {
          g -= l.lambda1[k * T + j] * (d - drain) / r;
        }
      }
      g -= l.lambda1[n * T + i] * delay_relief(p, n, i);
      g -= l.lambda2[n * T + i] * (-d * c * std::exp(-a));
      g -= l.lambda3[0] * (-d / p.link.rb_rate_bps);
      g -= l.lambda4[n * T + i];
      if (p.terminal.enforce) {
        g -= l.terminal[0] * p.terminal.weight * (d - drain);
      }
      worst = std::max(worst, std::abs(xv - std::clamp(xv + g, 0.0, 1.0)));

      const double h[] = {constraint_h1(p, x, n, i), constraint_h2(p, x, n, i), xv - 1};
      const double lam[] = {l.lambda1[n * T + i], l.lambda2[n * T + i], l.lambda4[n * T + i]};
      for (int f = 0; f < 3; ++f) {
        worst = std::max({worst, h[f], -lam[f], std::abs(lam[f] * h[f])});
      }
    }
  }
  const double h3 = constraint_h3(p, x);
  worst = std::max({worst, h3, -l.lambda3[0], std::abs(l.lambda3[0] * h3)});
  if (p.terminal.enforce) {
    const double ht = constraint_terminal(p, x);
    worst = std::max({worst, ht, -l.terminal[0], std::abs(l.terminal[0] * ht)});
  }
  return worst;
}

}  // namespace

TEST_SUITE("relaxation_solver") {
  TEST_CASE("constant objective returns the start point") {
    HorizonProblem p = make_problem({{1000, 2000}, {3000, 4000}}, 0.0);
    p.terminal.weight = 0.0;
    const RelaxSolution s = solve_relaxation(p);
    CHECK(s.converged);
    for (double v : s.x_relax.values().flat()) {
      CHECK(v == 0.5);
    }
    CHECK(s.z_relax == 10000.0);
    CHECK(kkt_residual(p, s.x_relax, KktMultipliers::zeros(p)) == 0.0);
  }

  TEST_CASE("one-variable instance matches a fine grid search") {
    HorizonProblem p = make_problem({{60000}}, 3e-5);
    p.terminal.weight = 0.1;
    p.terminal.alpha = 1e9;
    p.sensors[0].delay_bound_s = 100.0;
    const RelaxSolution s = solve_relaxation(p);
    REQUIRE(s.converged);
    double best = -1e300;
    double arg = 0.0;
    for (int k = 0; k <= 1000000; ++k) {
      const double x = k * 1e-6;
      const double v = stage_reward(60000.0, x, 3e-5) + 0.1 * (x * (60000.0 - 8e4));
      if (v > best) {
        best = v;
        arg = x;
      }
    }
    CHECK(s.x_relax.at(0, 0) == doctest::Approx(arg).epsilon(2e-6));
    CHECK(s.z_relax >= best + 0.1 * p.initial_depth_bits - 1e-6);
    CHECK(s.z_relax == doctest::Approx(best).epsilon(1e-12));
  }

  TEST_CASE("zero remaining budget forces every entry to PLC") {
    HorizonProblem p = make_problem({{16000, 500}, {8000, 40000}}, 4e-7);
    p.rb_remaining = 0.0;
    const RelaxSolution s = solve_relaxation(p);
    CHECK(s.converged);
    for (double v : s.x_relax.values().flat()) {
      CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  TEST_CASE("residual with zero multipliers is the projected gradient") {
    HorizonProblem p = make_problem({{100}}, 1e-7);
    p.terminal.alpha = 1e9;
    const DecisionMatrix x(1, 1, 0.5);
    const double g = gradient(p, x).at(0, 0);
    REQUIRE(std::abs(g) < 0.5);
    CHECK(kkt_residual(p, x, KktMultipliers::zeros(p)) == doctest::Approx(std::abs(g)));
  }

  TEST_CASE("residual against an independent evaluation at random points") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const HorizonProblem p = random_instance(seed, 3, 4);
      std::mt19937_64 rng(seed);
      Grid g(p.sensor_count(), p.horizon_T);
      for (double& v : g.flat()) {
        v = static_cast<double>(rng() % 1001) / 1000.0;
      }
      KktMultipliers l = KktMultipliers::zeros(p);
      for (auto* vec : {&l.lambda1, &l.lambda2, &l.lambda3, &l.lambda4, &l.terminal}) {
        for (double& v : *vec) {
          v = static_cast<double>(rng() % 2001) / 1000.0 - 0.2;
        }
      }
      const DecisionMatrix x(g);
      CHECK(kkt_residual(p, x, l) == doctest::Approx(reference_residual(p, x, l)).epsilon(1e-9));
    }
  }

  TEST_CASE("solutions are deterministic") {
    const HorizonProblem p = random_instance(42, 3, 4);
    const RelaxSolution a = solve_relaxation(p);
    const RelaxSolution b = solve_relaxation(p);
    CHECK(a.x_relax == b.x_relax);
    CHECK(a.z_relax == b.z_relax);
    CHECK(a.multipliers.lambda1 == b.multipliers.lambda1);
    CHECK(a.kkt_residual == b.kkt_residual);
  }

  TEST_CASE("merit is non-decreasing within each outer iteration") {
    RelaxConfig cfg;
    cfg.record_merit = true;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
      const RelaxSolution s = solve_relaxation(random_instance(seed, 3, 4), cfg);
      for (const auto& trace : s.merit_trace) {
        for (std::size_t k = 1; k < trace.size(); ++k) {
          CHECK(trace[k] >= trace[k - 1] - 1e-12 * std::max(1.0, std::abs(trace[k - 1])));
        }
      }
    }
  }

  TEST_CASE("converged solutions are certified on seeded instances") {
    SuiteSettings s;
    s.instances = 100;
    const SuiteReport r = kkt_suite(s);
    INFO(r.first_failure);
    CHECK(r.failed == 0);
  }

  TEST_CASE("relaxation bounds every integral assignment") {
    SuiteSettings s;
    s.instances = 100;
    s.seed = 500;
    const SuiteReport r = relaxation_bound_suite(s);
    INFO(r.first_failure);
    CHECK(r.failed == 0);
  }

  TEST_CASE("infeasible instance is reported") {
    HorizonProblem p = make_problem({{400000}}, 1e-5);
    p.sensors[0].delay_bound_s = 1.0;
    p.sensors[0].min_success_prob = 0.9;
    CHECK_THROWS_AS(solve_relaxation(p), InfeasibleError);
  }

  TEST_CASE("restricted box") {
    const HorizonProblem p = make_problem({{16000, 3000}}, 4e-7);
    VariableBounds b = VariableBounds::unit(2);
    b.upper[0] = 0.0;
    const RelaxSolution s = solve_relaxation(p, RelaxConfig{}, b);
    CHECK(s.x_relax.at(0, 0) == 0.0);
    CHECK(s.converged);
  }
}
