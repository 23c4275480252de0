#include "hetsched/bnb_solver.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>

namespace hetsched {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Node {
  VariableBounds bounds;
  RelaxSolution relax;
  double bound = 0.0;
  std::size_t depth = 0;
  std::size_t seq = 0;
};

// Best bound first; among equal bounds, the earlier insertion.
struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) {
      return a.bound < b.bound;
    }
    return a.seq > b.seq;
  }
};

bool concave_window(const HorizonProblem& problem) {
  const double c = -std::log1p(-problem.p_b);
  for (std::size_t n = 0; n < problem.sensor_count(); ++n) {
    for (std::size_t i = 0; i < problem.horizon_T; ++i) {
      if (c * problem.arrival(n, i) > 2.0) {
        return false;
      }
    }
  }
  return true;
}

// Rounds entries within kIntegralTol of 0 or 1; nullopt if any stays
// fractional.
std::optional<DecisionMatrix> snap(const DecisionMatrix& x) {
  Grid g = x.values();
  for (double& v : g.flat()) {
    if (v <= kIntegralTol) {
      v = 0.0;
    } else if (v >= 1.0 - kIntegralTol) {
      v = 1.0;
    } else {
      return std::nullopt;
    }
  }
  return DecisionMatrix(std::move(g));
}

// Most fractional free entry; ties go to the lowest row-major index.
std::optional<std::size_t> branch_variable(const DecisionMatrix& x, const VariableBounds& b) {
  std::optional<std::size_t> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < x.size(); ++e) {
    if (b.lower[e] == b.upper[e]) {
      continue;
    }
    const double dist = std::abs(x.values().flat()[e] - 0.5);
    if (dist < best_dist) {
      best_dist = dist;
      best = e;
    }
  }
  return best;
}

class Search {
public:
  Search(const HorizonProblem& problem, const BnbConfig& cfg, std::vector<BnbNodeRecord>* log)
      : problem_(problem), cfg_(cfg), log_(log), valid_bounds_(concave_window(problem)) {}

  BnbResult run() {
    const std::size_t count = problem_.sensor_count() * problem_.horizon_T;
    auto root = solve(VariableBounds::unit(count), std::numeric_limits<double>::infinity(), 0);
    if (!root) {
      throw InfeasibleError(infeasible_family_, infeasible_violation_);
    }
    return cfg_.literal_dive ? dive(std::move(*root)) : best_first(std::move(*root));
  }

private:
  std::optional<Node> solve(VariableBounds bounds, double parent_bound, std::size_t depth) {
    ++nodes_;
    try {
      Node node;
      node.relax = solve_relaxation(problem_, cfg_.relax, bounds);
      node.bounds = std::move(bounds);
      node.bound = std::min(node.relax.z_relax, parent_bound);
      node.depth = depth;
      node.seq = seq_++;
      all_converged_ = all_converged_ && node.relax.converged;
      return node;
    } catch (const InfeasibleError& e) {
      infeasible_family_ = e.family();
      infeasible_violation_ = e.violation();
      return std::nullopt;
    }
  }

  // Records an integral feasible relaxation point; true if the node is
  // fathomed by it.
  bool try_incumbent(const Node& node) {
    const auto snapped = snap(node.relax.x_relax);
    if (!snapped || !is_feasible(problem_, *snapped).feasible) {
      return false;
    }
    const double z = objective(problem_, *snapped);
    if (!incumbent_ || z > lower_) {
      incumbent_ = *snapped;
      lower_ = z;
    }
    return true;
  }

  std::vector<Node> children(const Node& node, std::size_t j) {
    const double xj = node.relax.x_relax.values().flat()[j];
    const double first = xj < cfg_.epsilon ? 0.0 : 1.0;
    std::vector<Node> out;
    for (double fix : {first, 1.0 - first}) {
      VariableBounds b = node.bounds;
      b.lower[j] = fix;
      b.upper[j] = fix;
      if (auto child = solve(std::move(b), node.bound, node.depth + 1)) {
        out.push_back(std::move(*child));
      }
    }
    return out;
  }

  void record(const Node& node, double open_upper) {
    if (log_) {
      log_->push_back({node.depth, node.bound, incumbent_ ? lower_ : kNegInf,
                       std::max(open_upper, incumbent_ ? lower_ : kNegInf)});
    }
  }

  BnbResult best_first(Node root) {
    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    open.push(std::move(root));
    bool complete = true;
    double gap = 0.0;

    while (!open.empty()) {
      const double upper = open.top().bound;
      if (incumbent_ && upper - lower_ <= cfg_.gap_tol) {
        gap = std::max(0.0, upper - lower_);
        break;
      }
      if (nodes_ >= cfg_.node_limit) {
        complete = false;
        gap = incumbent_ ? std::max(0.0, upper - lower_) : std::numeric_limits<double>::infinity();
        break;
      }
      Node node = open.top();
      open.pop();
      if (incumbent_ && node.bound <= lower_ + cfg_.gap_tol) {
        record(node, upper);
        continue;
      }
      if (!try_incumbent(node)) {
        if (const auto j = branch_variable(node.relax.x_relax, node.bounds)) {
          for (auto& child : children(node, *j)) {
            if (!incumbent_ || child.bound > lower_ + cfg_.gap_tol) {
              open.push(std::move(child));
            }
          }
        }
      }
      record(node, upper);
    }

    if (!incumbent_) {
      throw InfeasibleError(infeasible_family_, infeasible_violation_);
    }
    BnbResult out;
    out.x01 = *incumbent_;
    out.z01 = lower_;
    out.nodes_explored = nodes_;
    out.proven_optimal = complete && all_converged_ && valid_bounds_;
    out.gap = gap;
    return out;
  }

  BnbResult dive(Node node) {
    while (true) {
      record(node, node.bound);
      if (try_incumbent(node)) {
        break;
      }
      const auto j = branch_variable(node.relax.x_relax, node.bounds);
      if (!j || nodes_ >= cfg_.node_limit) {
        break;
      }
      auto next = children(node, *j);
      if (next.empty()) {
        break;
      }
      node = std::move(next.front());
    }
    if (!incumbent_) {
      throw InfeasibleError(infeasible_family_, infeasible_violation_);
    }
    BnbResult out;
    out.x01 = *incumbent_;
    out.z01 = lower_;
    out.nodes_explored = nodes_;
    out.proven_optimal = false;
    out.gap = std::max(0.0, node.bound - lower_);
    return out;
  }

  const HorizonProblem& problem_;
  const BnbConfig& cfg_;
  std::vector<BnbNodeRecord>* log_;
  bool valid_bounds_;
  bool all_converged_ = true;
  std::size_t nodes_ = 0;
  std::size_t seq_ = 0;
  std::optional<DecisionMatrix> incumbent_;
  double lower_ = kNegInf;
  ConstraintFamily infeasible_family_ = ConstraintFamily::Horizon;
  double infeasible_violation_ = 0.0;
};

}  // namespace

BnbResult branch_and_bound(const HorizonProblem& problem, const BnbConfig& cfg,
                           std::vector<BnbNodeRecord>* log) {
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) {
    throw InvalidArgument("epsilon must lie in (0, 1)");
  }
  if (cfg.gap_tol < 0.0) {
    throw InvalidArgument("gap_tol must be >= 0");
  }
  problem.validate();
  return Search(problem, cfg, log).run();
}

OracleResult exhaustive_oracle(const HorizonProblem& problem, const ObjectiveFn& fn) {
  problem.validate();
  const std::size_t count = problem.sensor_count() * problem.horizon_T;
  if (count > kOracleMaxEntries) {
    throw SizeLimitError("exhaustive oracle is limited to N*T <= 20");
  }

  std::optional<OracleResult> best;
  DecisionMatrix x(problem.sensor_count(), problem.horizon_T);
  const std::uint64_t total = std::uint64_t{1} << count;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    // Entry 0 is the most significant bit, so masks ascend lexicographically.
    for (std::size_t e = 0; e < count; ++e) {
      const double v = static_cast<double>((mask >> (count - 1 - e)) & 1u);
      x.set(e / problem.horizon_T, e % problem.horizon_T, v);
    }
    if (!is_feasible(problem, x).feasible) {
      continue;
    }
    const double z = fn(problem, x);
    if (!best || z > best->z_best) {
      best = OracleResult{x, z};
    }
  }
  if (!best) {
    throw InfeasibleError(ConstraintFamily::Horizon, 0.0);
  }
  return *best;
}

}  // namespace hetsched
