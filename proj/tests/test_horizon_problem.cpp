#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "hetsched/horizon_problem.hpp"
#include "hetsched/oracle_suite.hpp"

using namespace hetsched;
using fixtures::make_problem;
using fixtures::rel_close;

namespace {

bool has_family(const FeasibilityReport& r, ConstraintFamily f) {
  return std::any_of(r.violations.begin(), r.violations.end(),
                     [&](const Violation& v) { return v.family == f; });
}

}  // namespace

TEST_SUITE("horizon_problem") {
  TEST_CASE("stage_reward") {
    CHECK(stage_reward(5000.0, 1.0, 3e-5) == 5000.0);
    for (double x : {0.0, 0.2, 0.7, 1.0}) {
      CHECK(stage_reward(7000.0, x, 0.0) == doctest::Approx(7000.0).epsilon(1e-15));
    }
    CHECK(rel_close(stage_reward(16000.0, 0.0, 4e-7), 15897.926961717032, 1e-13));
  }

  TEST_CASE("stage_reward is continuous on a fine grid") {
    const double d = 50000.0;
    double prev = stage_reward(d, 0.0, 2e-5);
    for (int k = 1; k <= 1000; ++k) {
      const double v = stage_reward(d, k * 1e-3, 2e-5);
      CHECK(std::abs(v - prev) < 1e-2 * d);
      prev = v;
    }
  }

  TEST_CASE("objective against a straight-line evaluation") {
    HorizonProblem p = make_problem({{12000, 3000}, {0, 45000}}, 7e-6);
    p.initial_depth_bits = 20000.0;
    p.terminal.weight = 0.5;
    p.terminal.alpha = 1e9;
    const Grid g = [] {
      Grid v(2, 2);
      v.at(0, 0) = 0.25;
      v.at(0, 1) = 1.0;
      v.at(1, 0) = 0.0;
      v.at(1, 1) = 0.6;
      return v;
    }();
    const DecisionMatrix x(g);

    const double log_s = std::log1p(-7e-6);
    auto reward = [&](double d, double xv) {
      return d * xv + d * (1 - xv) * std::exp(d * (1 - xv) * log_s);
    };
    const double r = p.link.plc_rate_bps;
    double m = 20000.0;
    m += 0.25 * (12000 - r) + 0.0 * (0 - r);
    m += 1.0 * (3000 - r) + 0.6 * (45000 - r);
    const double expected = reward(12000, 0.25) + reward(3000, 1.0) + reward(0, 0.0) +
                            reward(45000, 0.6) + 0.5 * m;
    CHECK(rel_close(objective(p, x), expected, 1e-13));
  }

  TEST_CASE("objective special cases") {
    HorizonProblem p = make_problem({{100, 200}, {300, 400}}, 1e-5);
    p.terminal.weight = 0.0;
    p.terminal.enforce = false;
    CHECK(objective(p, DecisionMatrix(2, 2, 1.0)) == 1000.0);

    HorizonProblem z = make_problem({{0, 0}}, 1e-5);
    z.initial_depth_bits = 5000.0;
    z.terminal.weight = 2.0;
    CHECK(objective(z, DecisionMatrix(1, 2, 0.0)) == 10000.0);
  }

  TEST_CASE("stage rewards stay within the offered traffic") {
    HorizonProblem p = make_problem({{40000, 100, 7000}, {0, 60000, 2}}, 3e-5);
    p.initial_depth_bits = 1e5;
    std::mt19937_64 rng(5);
    for (int k = 0; k < 50; ++k) {
      Grid g(2, 3);
      for (double& v : g.flat()) {
        v = static_cast<double>(rng() % 1001) / 1000.0;
      }
      const DecisionMatrix x(g);
      const double stages =
          objective(p, x) - terminal_cost(p.terminal, predicted_depths(p, x).back());
      CHECK(stages >= 0.0);
      CHECK(stages <= static_cast<double>(p.window.total()) * (1 + 1e-12));
    }
  }

  TEST_CASE("constraint examples") {
    HorizonProblem p = make_problem({{16000}}, 4e-7);
    p.sensors[0].min_success_prob = 0.9;
    DecisionMatrix x(1, 1, 0.3);
    CHECK(constraint_h4(x, 0, 0) == doctest::Approx(-0.7));
    CHECK(constraint_h4(DecisionMatrix(1, 1, 1.0), 0, 0) == 0.0);
    CHECK(constraint_h4(DecisionMatrix(1, 1, 0.0), 0, 0) == -1.0);
    CHECK(constraint_h2(p, DecisionMatrix(1, 1, 1.0), 0, 0) == doctest::Approx(0.9 - 1.0));
    CHECK(constraint_h3(p, DecisionMatrix(1, 1, 1.0)) == -p.rb_remaining);
  }

  TEST_CASE("h1 equals the wait bound at x = 1") {
    HorizonProblem p = make_problem({{16000, 8000}}, 4e-7);
    p.initial_depth_bits = 40000.0;
    const DecisionMatrix x(1, 2, 1.0);
    const double r = p.link.plc_rate_bps;
    CHECK(constraint_h1(p, x, 0, 0) == doctest::Approx(16000 / r + 40000 / r - 10.0));
    const double m1 = 40000.0 + 16000.0 - r;
    CHECK(constraint_h1(p, x, 0, 1) == doctest::Approx(8000 / r + m1 / r - 10.0));
  }

  TEST_CASE("reliability equivalence for integral x") {
    for (double pe : {0.5, 0.99, 0.9936, 0.9937, 0.999}) {
      HorizonProblem p = make_problem({{16000}}, 4e-7);
      p.sensors[0].min_success_prob = pe;
      const bool h2_ok = constraint_h2(p, DecisionMatrix(1, 1, 0.0), 0, 0) <= 0.0;
      CHECK(h2_ok == (success_prob(16000.0, 4e-7) >= pe));
    }
  }

  TEST_CASE("is_feasible") {
    HorizonProblem zero = make_problem({{0, 0}, {0, 0}});
    CHECK(is_feasible(zero, DecisionMatrix(2, 2, 0.0)).feasible);
    CHECK(is_feasible(zero, DecisionMatrix(2, 2, 1.0)).feasible);

    HorizonProblem p = make_problem({{400000}}, 1e-5);
    p.sensors[0].delay_bound_s = 1.0;
    p.sensors[0].min_success_prob = 0.9;
    const auto plc = is_feasible(p, DecisionMatrix(1, 1, 1.0));
    const auto lte = is_feasible(p, DecisionMatrix(1, 1, 0.0));
    CHECK_FALSE(plc.feasible);
    CHECK_FALSE(lte.feasible);
    CHECK(has_family(plc, ConstraintFamily::Delay));
    CHECK(has_family(lte, ConstraintFamily::Reliability));

    // A value exactly at the tolerance is still feasible.
    HorizonProblem b = make_problem({{2400}});
    b.rb_remaining = 10.0;
    CHECK(constraint_h3(b, DecisionMatrix(1, 1, 0.0)) == 0.0);
    CHECK(is_feasible(b, DecisionMatrix(1, 1, 0.0), 0.0).feasible);
  }

  TEST_CASE("terminal cost and set") {
    TerminalCost t{1.0, 1e6, true};
    CHECK(terminal_cost(t, 0.0) == 0.0);
    CHECK(in_terminal_set(t, 0.0));
    CHECK(terminal_cost(t, 1e6) == 1e6);
    CHECK(in_terminal_set(t, 1e6));
    CHECK_FALSE(in_terminal_set(t, 1e6 + 1));
  }

  TEST_CASE("gradient special cases") {
    HorizonProblem p = make_problem({{1000, 5000}, {70000, 3}}, 0.0);
    p.terminal.weight = 0.0;
    const Grid g = gradient(p, DecisionMatrix(2, 2, 0.4));
    for (double v : g.flat()) {
      CHECK(v == 0.0);
    }
    HorizonProblem q = make_problem({{16000}}, 4e-7);
    q.terminal.weight = 0.25;
    const double terminal_term = 0.25 * (16000.0 - q.drain_per_step());
    CHECK(gradient(q, DecisionMatrix(1, 1, 1.0)).at(0, 0) == doctest::Approx(terminal_term));
  }

  TEST_CASE("gradients agree with central differences on seeded instances") {
    SuiteSettings s;
    s.instances = 100;
    s.seed = 11;
    const SuiteReport r = gradient_suite(s);
    INFO(r.first_failure);
    CHECK(r.failed == 0);
    CHECK(r.passed == 100);
  }

  TEST_CASE("decision matrix integrality") {
    DecisionMatrix x(2, 2, 1.0);
    CHECK(x.integral());
    x.set(1, 1, 0.5);
    CHECK_FALSE(x.integral());
    CHECK_THROWS_AS(x.set(0, 0, 1.5), InvalidArgument);
  }
}
