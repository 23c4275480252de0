#pragma once

// Branch and bound over x in {0,1}^{N x T} with the continuous relaxation as
// the bounding oracle, plus an exhaustive enumerator used as ground truth.

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "hetsched/horizon_problem.hpp"
#include "hetsched/relaxation_solver.hpp"

namespace hetsched {

struct BnbConfig {
  double epsilon = 0.5;  ///< x_j < epsilon explores the 0-child first
  std::size_t node_limit = 100000;
  double gap_tol = 1e-6;
  bool literal_dive = false;  ///< follow a single child per branching step
  RelaxConfig relax;
};

struct BnbResult {
  DecisionMatrix x01;
  double z01 = 0.0;
  std::size_t nodes_explored = 0;
  bool proven_optimal = false;
  double gap = 0.0;
};

/// Snapshot after each processed node.
struct BnbNodeRecord {
  std::size_t depth = 0;
  double bound = 0.0;
  double lower = 0.0;  ///< incumbent value L (-inf before the first one)
  double upper = 0.0;  ///< best open bound U, including this node
};

class SizeLimitError : public std::length_error {
public:
  using std::length_error::length_error;
};

inline constexpr double kIntegralTol = 1e-6;

/// proven_optimal requires that the search completed, every node relaxation
/// converged, and every stage reward in the window is concave (c*D <= 2), so
/// that the node bounds are valid. Throws InfeasibleError when no integral
/// feasible assignment is found.
BnbResult branch_and_bound(const HorizonProblem& problem, const BnbConfig& cfg = {},
                           std::vector<BnbNodeRecord>* log = nullptr);

using ObjectiveFn = std::function<double(const HorizonProblem&, const DecisionMatrix&)>;

struct OracleResult {
  DecisionMatrix x_best;
  double z_best = 0.0;
};

inline constexpr std::size_t kOracleMaxEntries = 20;

/// Enumerates all 2^(N*T) assignments in lexicographic row-major order and
/// keeps the first strict maximum among feasible ones. Throws SizeLimitError
/// when N*T > 20 and InfeasibleError when nothing is feasible.
OracleResult exhaustive_oracle(const HorizonProblem& problem, const ObjectiveFn& fn = objective);

}  // namespace hetsched
