#pragma once

// Seeded property suites: branch and bound against exhaustive enumeration,
// the relaxation bound, KKT certification and analytic gradients against
// central differences.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hetsched/bnb_solver.hpp"
#include "hetsched/horizon_problem.hpp"

namespace hetsched {

struct SuiteSettings {
  std::size_t instances = 200;
  std::uint64_t seed = 1;
  std::size_t max_sensors = 3;
  std::size_t max_steps = 4;
  BnbConfig bnb;
};

/// Random horizon problem for instance seed `seed`, with N <= max_sensors and
/// T <= max_steps. Draws are repeated from the same stream until the instance
/// has at least one integral feasible assignment. Stage rewards stay concave.
HorizonProblem random_instance(std::uint64_t seed, std::size_t max_sensors,
                               std::size_t max_steps);

/// Seed of instance `index` in a suite starting at `base`.
std::uint64_t instance_seed(std::uint64_t base, std::size_t index);

struct SuiteReport {
  std::string name;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::optional<std::uint64_t> first_failing_seed;
  std::string first_failure;  ///< description of the first failing instance

  bool ok() const noexcept { return failed == 0; }
};

/// proven-optimal branch and bound equals the exhaustive optimum within 1e-9
/// relative. `oracle_objective` is what the enumerator maximizes; it defaults
/// to the real objective and can be replaced by a test double.
SuiteReport bnb_oracle_suite(const SuiteSettings& settings,
                             const ObjectiveFn& oracle_objective = objective);

/// Root relaxation value + 1e-6 >= branch-and-bound value.
SuiteReport relaxation_bound_suite(const SuiteSettings& settings);

/// Relaxation converges with kkt_residual <= the configured tolerance.
SuiteReport kkt_suite(const SuiteSettings& settings);

/// Objective and constraint gradients against central differences (step
/// 1e-6) at random interior points, normwise relative error < 1e-5.
SuiteReport gradient_suite(const SuiteSettings& settings);

inline constexpr double kOracleRelTol = 1e-9;
inline constexpr double kBoundSlack = 1e-6;
inline constexpr double kFdStep = 1e-6;
inline constexpr double kFdRelTol = 1e-5;

}  // namespace hetsched
