#include "hetsched/relaxation_solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <string>

namespace hetsched {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kArmijo = 1e-4;
constexpr double kInfeasibleViolation = 1e-9;
constexpr double kMeritNoise = 1e-13;

// One normalized linear inequality a.x <= b. The original constraint value
// is scale * (a.x - b).
struct Row {
  ConstraintFamily family;
  std::size_t n = 0;
  std::size_t i = 0;
  double scale = 1.0;
};

class Model {
public:
  Model(const HorizonProblem& problem, const VariableBounds& bounds)
      : problem_(problem),
        sensors_(problem.sensor_count()),
        steps_(problem.horizon_T),
        count_(sensors_ * steps_),
        lower_(count_),
        upper_(count_),
        arrivals_(count_),
        terminal_slope_(count_) {
    const double c = -std::log1p(-problem.p_b);
    log_survival_ = c;
    const double drain = problem.drain_per_step();
    for (std::size_t n = 0; n < sensors_; ++n) {
      for (std::size_t i = 0; i < steps_; ++i) {
        const std::size_t e = index(n, i);
        arrivals_[e] = problem.arrival(n, i);
        terminal_slope_[e] = problem.terminal.weight * (arrivals_[e] - drain);
        lower_[e] = bounds.lower[e];
        upper_[e] = bounds.upper[e];
      }
    }
    build_rows();
    // Work with an objective whose gradient is O(1) at the start point so the
    // penalty range is meaningful regardless of the bit scale.
    const VectorXd start = project(VectorXd::Constant(static_cast<Eigen::Index>(count_), 0.5));
    objective_scale_ = std::max(1.0, inf_norm_raw(grad(start)));
  }

  std::size_t count() const { return count_; }
  std::size_t index(std::size_t n, std::size_t i) const { return n * steps_ + i; }
  const VectorXd& lower() const { return lower_; }
  const VectorXd& upper() const { return upper_; }
  const MatrixXd& a() const { return a_; }
  const VectorXd& b() const { return b_; }
  const std::vector<Row>& rows() const { return rows_; }

  bool unit_box() const {
    return (lower_.array() == 0.0).all() && (upper_.array() == 1.0).all();
  }

  VectorXd project(const VectorXd& x) const { return x.cwiseMax(lower_).cwiseMin(upper_); }

  double objective_scale() const { return objective_scale_; }

  // Objective, gradient and curvature below are divided by objective_scale().
  double value(const VectorXd& x) const {
    double total = problem_.terminal.weight * problem_.initial_depth_bits;
    for (std::size_t e = 0; e < count_; ++e) {
      total += stage_reward(arrivals_[e], x[e], problem_.p_b) + terminal_slope_[e] * x[e];
    }
    return total / objective_scale_;
  }

  VectorXd grad(const VectorXd& x) const {
    VectorXd g(count_);
    for (std::size_t e = 0; e < count_; ++e) {
      g[e] = stage_reward_derivative(arrivals_[e], x[e], problem_.p_b) + terminal_slope_[e];
    }
    return g / objective_scale_;
  }

  // Second derivative of each (separable) stage reward:
  // -D^2 c e^-a (2 - a), a = c D (1 - x).
  VectorXd curvature(const VectorXd& x) const {
    VectorXd h(count_);
    for (std::size_t e = 0; e < count_; ++e) {
      const double d = arrivals_[e];
      const double a = log_survival_ * d * (1.0 - x[e]);
      h[e] = -d * d * log_survival_ * std::exp(-a) * (2.0 - a);
    }
    return h / objective_scale_;
  }

  // Interval check: some row cannot be met anywhere in the box.
  void check_box_consistency() const {
    for (Eigen::Index k = 0; k < a_.rows(); ++k) {
      double least = 0.0;
      for (Eigen::Index e = 0; e < a_.cols(); ++e) {
        const double coef = a_(k, e);
        least += coef * (coef > 0.0 ? lower_[e] : upper_[e]);
      }
      if (least - b_[k] > 1e-12 * (1.0 + std::abs(b_[k]))) {
        throw InfeasibleError(rows_[k].family, (least - b_[k]) * rows_[k].scale);
      }
    }
  }

  double log_survival() const { return log_survival_; }
  double arrival(std::size_t e) const { return arrivals_[e]; }

private:
  static double inf_norm_raw(const VectorXd& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
  }

  void add_row(ConstraintFamily family, std::size_t n, std::size_t i, VectorXd coef, double rhs) {
    const double scale = coef.cwiseAbs().maxCoeff();
    if (scale == 0.0) {
      if (rhs < 0.0) {
        throw InfeasibleError(family, -rhs);
      }
      return;
    }
    rows_.push_back({family, n, i, scale});
    pending_a_.push_back(coef / scale);
    pending_b_.push_back(rhs / scale);
  }

  void build_rows() {
    const auto& p = problem_;
    const double r = p.link.plc_rate_bps;
    const double drain = p.drain_per_step();

    for (std::size_t n = 0; n < sensors_; ++n) {
      for (std::size_t i = 0; i < steps_; ++i) {
        VectorXd coef = VectorXd::Zero(count_);
        for (std::size_t j = 0; j < i; ++j) {
          for (std::size_t k = 0; k < sensors_; ++k) {
            coef[index(k, j)] = (arrivals_[index(k, j)] - drain) / r;
          }
        }
        const double relief = delay_relief(p, n, i);
        coef[index(n, i)] += relief;
        const double constant =
            (arrivals_[index(n, i)] + p.initial_depth_bits) / r - p.sensors[n].delay_bound_s - relief;
        add_row(ConstraintFamily::Delay, n, i, std::move(coef), -constant);
      }
    }

    for (std::size_t n = 0; n < sensors_; ++n) {
      const double pe = p.sensors[n].min_success_prob;
      for (std::size_t i = 0; i < steps_; ++i) {
        const double d = arrivals_[index(n, i)];
        if (pe <= 0.0 || d <= 0.0 || log_survival_ <= 0.0) {
          continue;  // h2 = P_e - 1 <= 0 or P_e - s^u < 0 everywhere
        }
        VectorXd coef = VectorXd::Zero(count_);
        coef[index(n, i)] = -log_survival_ * d;
        add_row(ConstraintFamily::Reliability, n, i, std::move(coef),
                -log_survival_ * d - std::log(pe));
      }
    }

    {
      VectorXd coef(count_);
      double total = 0.0;
      for (std::size_t e = 0; e < count_; ++e) {
        coef[e] = -arrivals_[e] / p.link.rb_rate_bps;
        total += arrivals_[e] / p.link.rb_rate_bps;
      }
      add_row(ConstraintFamily::ResourceBudget, 0, 0, std::move(coef), p.rb_remaining - total);
    }

    if (p.terminal.enforce) {
      VectorXd coef(count_);
      for (std::size_t e = 0; e < count_; ++e) {
        coef[e] = terminal_slope_[e];
      }
      add_row(ConstraintFamily::TerminalSet, 0, 0, std::move(coef),
              p.terminal.alpha - p.terminal.weight * p.initial_depth_bits);
    }

    a_.resize(static_cast<Eigen::Index>(pending_a_.size()), static_cast<Eigen::Index>(count_));
    b_.resize(static_cast<Eigen::Index>(pending_b_.size()));
    for (std::size_t k = 0; k < pending_a_.size(); ++k) {
      a_.row(static_cast<Eigen::Index>(k)) = pending_a_[k].transpose();
      b_[static_cast<Eigen::Index>(k)] = pending_b_[k];
    }
    pending_a_.clear();
    pending_b_.clear();
  }

  const HorizonProblem& problem_;
  std::size_t sensors_;
  std::size_t steps_;
  std::size_t count_;
  VectorXd lower_;
  VectorXd upper_;
  VectorXd arrivals_;
  VectorXd terminal_slope_;
  double log_survival_ = 0.0;
  double objective_scale_ = 1.0;
  std::vector<Row> rows_;
  std::vector<VectorXd> pending_a_;
  std::vector<double> pending_b_;
  MatrixXd a_;
  VectorXd b_;
};

class AugmentedLagrangian {
public:
  AugmentedLagrangian(const Model& model, const VectorXd& mu, double rho)
      : model_(model), mu_(mu), rho_(rho) {}

  double value(const VectorXd& x) const {
    const VectorXd shifted = shifted_multipliers(x);
    return model_.value(x) - (shifted.squaredNorm() - mu_.squaredNorm()) / (2.0 * rho_);
  }

  VectorXd grad(const VectorXd& x) const {
    return model_.grad(x) - model_.a().transpose() * shifted_multipliers(x);
  }

  VectorXd shifted_multipliers(const VectorXd& x) const {
    return (mu_ + rho_ * (model_.a() * x - model_.b())).cwiseMax(0.0);
  }

  // Negated Hessian of the merit, with the convex part of the stage rewards
  // dropped so it stays positive semidefinite.
  MatrixXd negated_hessian(const VectorXd& x) const {
    const auto n = static_cast<Eigen::Index>(model_.count());
    MatrixXd h = MatrixXd::Zero(n, n);
    h.diagonal() = (-model_.curvature(x)).cwiseMax(0.0);
    const VectorXd raw = mu_ + rho_ * (model_.a() * x - model_.b());
    for (Eigen::Index k = 0; k < raw.size(); ++k) {
      if (raw[k] > 0.0) {
        h.noalias() += rho_ * model_.a().row(k).transpose() * model_.a().row(k);
      }
    }
    return h;
  }

private:
  const Model& model_;
  const VectorXd& mu_;
  double rho_;
};

// Phase one: maximize -1/2 sum max(0, a.x - b)^2 over the box.
class ViolationMerit {
public:
  explicit ViolationMerit(const Model& model) : model_(model) {}

  double value(const VectorXd& x) const { return -0.5 * excess(x).squaredNorm(); }

  VectorXd grad(const VectorXd& x) const { return -(model_.a().transpose() * excess(x)); }

  MatrixXd negated_hessian(const VectorXd& x) const {
    const auto n = static_cast<Eigen::Index>(model_.count());
    MatrixXd h = MatrixXd::Zero(n, n);
    const VectorXd ex = excess(x);
    for (Eigen::Index k = 0; k < ex.size(); ++k) {
      if (ex[k] > 0.0) {
        h.noalias() += model_.a().row(k).transpose() * model_.a().row(k);
      }
    }
    return h;
  }

  VectorXd excess(const VectorXd& x) const { return (model_.a() * x - model_.b()).cwiseMax(0.0); }

private:
  const Model& model_;
};

double inf_norm(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Projected Newton ascent on a merit over the box. Returns the merit after
// every accepted step.
template <class Merit>
std::vector<double> maximize_inner(const Model& model, const Merit& merit, VectorXd& x,
                                   int max_iter, double tol) {
  std::vector<double> trace;
  const auto n = static_cast<Eigen::Index>(model.count());
  for (int it = 0; it < max_iter; ++it) {
    const VectorXd g = merit.grad(x);
    const double pg = inf_norm(x - model.project(x + g));
    if (pg <= tol) {
      break;
    }

    const double eps = std::min(1e-6, pg);
    std::vector<Eigen::Index> free;
    std::vector<bool> active(static_cast<std::size_t>(n), false);
    for (Eigen::Index e = 0; e < n; ++e) {
      const bool fixed = model.lower()[e] == model.upper()[e];
      const bool at_low = x[e] <= model.lower()[e] + eps && g[e] < 0.0;
      const bool at_high = x[e] >= model.upper()[e] - eps && g[e] > 0.0;
      if (fixed || at_low || at_high) {
        active[static_cast<std::size_t>(e)] = true;
      } else {
        free.push_back(e);
      }
    }

    const MatrixXd h = merit.negated_hessian(x);
    const double ridge = 1e-10 * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
    VectorXd d = VectorXd::Zero(n);
    if (!free.empty()) {
      const auto f = static_cast<Eigen::Index>(free.size());
      MatrixXd hf(f, f);
      VectorXd gf(f);
      for (Eigen::Index r = 0; r < f; ++r) {
        gf[r] = g[free[static_cast<std::size_t>(r)]];
        for (Eigen::Index c = 0; c < f; ++c) {
          hf(r, c) = h(free[static_cast<std::size_t>(r)], free[static_cast<std::size_t>(c)]);
        }
        hf(r, r) += ridge;
      }
      const VectorXd df = hf.ldlt().solve(gf);
      for (Eigen::Index r = 0; r < f; ++r) {
        d[free[static_cast<std::size_t>(r)]] = df[r];
      }
    }
    for (Eigen::Index e = 0; e < n; ++e) {
      if (active[static_cast<std::size_t>(e)] && model.lower()[e] != model.upper()[e]) {
        d[e] = g[e] / std::max(h(e, e), ridge);
      }
    }

    const double base = merit.value(x);
    double step = 1.0;
    bool accepted = false;
    VectorXd next;
    for (int ls = 0; ls < 80; ++ls) {
      next = model.project(x + step * d);
      if (inf_norm(next - x) == 0.0) {
        break;
      }
      const double trial = merit.value(next);
      if (trial >= base && trial >= base + kArmijo * g.dot(next - x)) {
        accepted = true;
        trace.push_back(trial);
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // Near the optimum the merit change drops below its rounding noise;
      // take the full step if it is within that noise and halves the
      // projected gradient.
      next = model.project(x + d);
      const double trial = merit.value(next);
      const double next_pg = inf_norm(next - model.project(next + merit.grad(next)));
      if (trial >= base - kMeritNoise * std::max(1.0, std::abs(base)) && next_pg < 0.5 * pg) {
        accepted = true;
        trace.push_back(trial);
      }
    }
    if (!accepted || inf_norm(next - x) == 0.0) {
      break;
    }
    x = next;
  }
  return trace;
}

DecisionMatrix to_matrix(const HorizonProblem& problem, const VectorXd& v) {
  Grid g(problem.sensor_count(), problem.horizon_T);
  for (std::size_t e = 0; e < g.size(); ++e) {
    g.flat()[e] = std::clamp(v[static_cast<Eigen::Index>(e)], 0.0, 1.0);
  }
  return DecisionMatrix(std::move(g));
}

KktMultipliers map_multipliers(const HorizonProblem& problem, const Model& model,
                               const VectorXd& x, const VectorXd& mu) {
  const double scale = model.objective_scale();
  KktMultipliers out = KktMultipliers::zeros(problem);
  for (std::size_t k = 0; k < model.rows().size(); ++k) {
    const Row& row = model.rows()[k];
    const double lambda = mu[static_cast<Eigen::Index>(k)] * scale / row.scale;
    const std::size_t e = model.index(row.n, row.i);
    switch (row.family) {
      case ConstraintFamily::Delay: out.lambda1[e] = lambda; break;
      case ConstraintFamily::Reliability: {
        const double u = model.arrival(e) * (1.0 - x[static_cast<Eigen::Index>(e)]);
        out.lambda2[e] = lambda / success_prob(u, problem.p_b);
        break;
      }
      case ConstraintFamily::ResourceBudget: out.lambda3[0] = lambda; break;
      case ConstraintFamily::TerminalSet: out.terminal[0] = lambda; break;
      default: break;
    }
  }
  // Upper-bound multipliers from the remaining stationarity gradient.
  const VectorXd g = scale * (model.grad(x) - model.a().transpose() * mu);
  for (std::size_t e = 0; e < model.count(); ++e) {
    const auto ei = static_cast<Eigen::Index>(e);
    if (x[ei] == 1.0 && model.upper()[ei] == 1.0 && g[ei] > 0.0) {
      out.lambda4[e] = g[ei];
    }
  }
  return out;
}

// KKT residual on the restricted box, in the units of the original problem.
double internal_residual(const Model& model, const VectorXd& x, const VectorXd& mu) {
  const double scale = model.objective_scale();
  const VectorXd g = scale * (model.grad(x) - model.a().transpose() * mu);
  double res = inf_norm(x - model.project(x + g));
  const VectorXd values = model.a() * x - model.b();
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    const double row_scale = model.rows()[static_cast<std::size_t>(k)].scale;
    res = std::max(res, std::max(0.0, values[k]) * row_scale);
    res = std::max(res, std::abs(mu[k] * values[k]) * scale);
  }
  return res;
}

// Active-set polish: Newton on the equality KKT system of the rows with a
// positive multiplier, with variables at a bound held fixed. Returns false if
// the result leaves the box or needs a negative multiplier.
bool polish(const Model& model, VectorXd& x, VectorXd& mu) {
  const auto n = static_cast<Eigen::Index>(model.count());
  std::vector<Eigen::Index> free;
  std::vector<Eigen::Index> rows;
  for (Eigen::Index e = 0; e < n; ++e) {
    if (x[e] > model.lower()[e] && x[e] < model.upper()[e]) {
      free.push_back(e);
    }
  }
  for (Eigen::Index k = 0; k < mu.size(); ++k) {
    if (mu[k] > 0.0) {
      rows.push_back(k);
    }
  }
  const auto nf = static_cast<Eigen::Index>(free.size());
  const auto nr = static_cast<Eigen::Index>(rows.size());
  if (nf + nr == 0) {
    return false;
  }

  VectorXd y = x;
  VectorXd lambda(nr);
  for (Eigen::Index r = 0; r < nr; ++r) {
    lambda[r] = mu[rows[static_cast<std::size_t>(r)]];
  }
  for (int it = 0; it < 20; ++it) {
    const VectorXd g = model.grad(y);
    const VectorXd curv = model.curvature(y);
    MatrixXd jac = MatrixXd::Zero(nf + nr, nf + nr);
    VectorXd res(nf + nr);
    for (Eigen::Index i = 0; i < nf; ++i) {
      const Eigen::Index e = free[static_cast<std::size_t>(i)];
      res[i] = g[e];
      jac(i, i) = curv[e];
      for (Eigen::Index r = 0; r < nr; ++r) {
        const double coef = model.a()(rows[static_cast<std::size_t>(r)], e);
        res[i] -= coef * lambda[r];
        jac(i, nf + r) = -coef;
        jac(nf + r, i) = coef;
      }
    }
    const VectorXd values = model.a() * y - model.b();
    for (Eigen::Index r = 0; r < nr; ++r) {
      res[nf + r] = values[rows[static_cast<std::size_t>(r)]];
    }
    if (inf_norm(res) == 0.0) {
      break;
    }
    const VectorXd step = jac.completeOrthogonalDecomposition().solve(-res);
    if (!step.allFinite()) {
      return false;
    }
    for (Eigen::Index i = 0; i < nf; ++i) {
      y[free[static_cast<std::size_t>(i)]] += step[i];
    }
    lambda += step.tail(nr);
    if (inf_norm(step) <= 1e-15) {
      break;
    }
  }

  for (Eigen::Index i = 0; i < nf; ++i) {
    const Eigen::Index e = free[static_cast<std::size_t>(i)];
    if (y[e] < model.lower()[e] || y[e] > model.upper()[e]) {
      return false;
    }
  }
  if (nr > 0 && lambda.minCoeff() < 0.0) {
    return false;
  }
  x = y;
  mu.setZero();
  for (Eigen::Index r = 0; r < nr; ++r) {
    mu[rows[static_cast<std::size_t>(r)]] = lambda[r];
  }
  return true;
}

// Largest violation in original units and the row that attains it.
std::pair<double, std::size_t> worst_violation(const Model& model, const VectorXd& x) {
  const VectorXd values = model.a() * x - model.b();
  std::pair<double, std::size_t> worst{0.0, 0};
  for (Eigen::Index k = 0; k < values.size(); ++k) {
    const double v = values[k] * model.rows()[static_cast<std::size_t>(k)].scale;
    if (v > worst.first) {
      worst = {v, static_cast<std::size_t>(k)};
    }
  }
  return worst;
}

}  // namespace

InfeasibleError::InfeasibleError(ConstraintFamily family, double violation)
    : std::runtime_error("infeasible: constraint family " + std::string(family_name(family)) +
                         " violated by " + std::to_string(violation)),
      family_(family),
      violation_(violation) {}

VariableBounds VariableBounds::unit(std::size_t count) {
  return {std::vector<double>(count, 0.0), std::vector<double>(count, 1.0)};
}

RelaxSolution solve_relaxation(const HorizonProblem& problem, const RelaxConfig& cfg) {
  return solve_relaxation(problem, cfg,
                          VariableBounds::unit(problem.sensor_count() * problem.horizon_T));
}

RelaxSolution solve_relaxation(const HorizonProblem& problem, const RelaxConfig& cfg,
                               const VariableBounds& bounds) {
  problem.validate();
  const std::size_t count = problem.sensor_count() * problem.horizon_T;
  if (bounds.lower.size() != count || bounds.upper.size() != count) {
    throw InvalidArgument("variable bounds do not match the problem dimensions");
  }
  for (std::size_t e = 0; e < count; ++e) {
    if (!(0.0 <= bounds.lower[e] && bounds.lower[e] <= bounds.upper[e] && bounds.upper[e] <= 1.0)) {
      throw InvalidArgument("variable bounds must satisfy 0 <= lower <= upper <= 1");
    }
  }

  const Model model(problem, bounds);
  model.check_box_consistency();
  const bool unit = model.unit_box();
  const VectorXd start = model.project(VectorXd::Constant(static_cast<Eigen::Index>(count), 0.5));

  // Phase one: least-squares violation over the box decides feasibility.
  {
    VectorXd probe = start;
    maximize_inner(model, ViolationMerit(model), probe, cfg.max_inner, 0.0);
    const auto [violation, row] = worst_violation(model, probe);
    if (violation > kInfeasibleViolation) {
      throw InfeasibleError(model.rows()[row].family, violation);
    }
  }

  VectorXd x = start;
  VectorXd mu = VectorXd::Zero(model.b().size());
  double rho = std::max(1.0, inf_norm(model.grad(x)));

  RelaxSolution sol;
  double prev_violation = std::numeric_limits<double>::infinity();
  double residual = std::numeric_limits<double>::infinity();

  auto report_residual = [&](const VectorXd& point, const VectorXd& multipliers) {
    if (!unit) {
      return internal_residual(model, point, multipliers);
    }
    return kkt_residual(problem, to_matrix(problem, point),
                        map_multipliers(problem, model, point, multipliers));
  };

  for (int outer = 1; outer <= cfg.max_outer; ++outer) {
    sol.iterations = outer;
    const AugmentedLagrangian merit(model, mu, rho);
    // Complementarity error grows with mu times the displacement in x.
    const double inner_tol =
        0.1 * cfg.kkt_tol / (model.objective_scale() * std::max(1.0, inf_norm(mu)));
    auto trace = maximize_inner(model, merit, x, cfg.max_inner, inner_tol);
    if (cfg.record_merit) {
      sol.merit_trace.push_back(std::move(trace));
    }

    const VectorXd values = model.a() * x - model.b();
    const double violation = values.size() == 0 ? 0.0 : std::max(0.0, values.maxCoeff());
    mu = merit.shifted_multipliers(x);

    residual = report_residual(x, mu);
    if (residual > cfg.kkt_tol) {
      VectorXd px = x;
      VectorXd pmu = mu;
      if (polish(model, px, pmu)) {
        const double polished = report_residual(px, pmu);
        if (polished < residual) {
          x = px;
          mu = pmu;
          residual = polished;
        }
      }
    }
    if (residual <= cfg.kkt_tol) {
      sol.converged = true;
      break;
    }
    if (violation > 0.25 * prev_violation) {
      rho = std::min(rho * cfg.penalty_growth, cfg.penalty_max);
    }
    prev_violation = violation;
  }

  sol.x_relax = to_matrix(problem, x);
  sol.z_relax = objective(problem, sol.x_relax);
  sol.multipliers = map_multipliers(problem, model, x, mu);
  sol.kkt_residual = residual;
  return sol;
}

double kkt_residual(const HorizonProblem& problem, const DecisionMatrix& x,
                    const KktMultipliers& multipliers) {
  const std::size_t count = problem.sensor_count() * problem.horizon_T;
  const bool shapes_ok = x.size() == count && multipliers.lambda1.size() == count &&
                         multipliers.lambda2.size() == count && multipliers.lambda3.size() == 1 &&
                         multipliers.lambda4.size() == count &&
                         multipliers.terminal.size() == (problem.terminal.enforce ? 1u : 0u);
  if (!shapes_ok) {
    throw InvalidArgument("multiplier or decision dimensions do not match the problem");
  }

  // Lagrangian gradient of the maximization: grad TP - sum lambda grad h.
  Grid g = gradient(problem, x);
  const Grid budget = h3_gradient(problem);
  const Grid terminal = terminal_gradient(problem);
  double worst = 0.0;
  double most_negative = 0.0;
  auto note_multiplier = [&](double lambda, double h) {
    most_negative = std::min(most_negative, lambda);
    worst = std::max(worst, std::abs(lambda * h));
    worst = std::max(worst, h);
  };

  for (std::size_t n = 0; n < problem.sensor_count(); ++n) {
    for (std::size_t i = 0; i < problem.horizon_T; ++i) {
      const std::size_t e = n * problem.horizon_T + i;
      const double l1 = multipliers.lambda1[e];
      if (l1 != 0.0) {
        const Grid row = h1_gradient(problem, n, i);
        for (std::size_t f = 0; f < count; ++f) {
          g.flat()[f] -= l1 * row.flat()[f];
        }
      }
      g.flat()[e] -= multipliers.lambda2[e] * h2_derivative(problem, x, n, i);
      g.flat()[e] -= multipliers.lambda4[e];

      note_multiplier(l1, constraint_h1(problem, x, n, i));
      note_multiplier(multipliers.lambda2[e], constraint_h2(problem, x, n, i));
      note_multiplier(multipliers.lambda4[e], constraint_h4(x, n, i));
    }
  }
  for (std::size_t f = 0; f < count; ++f) {
    g.flat()[f] -= multipliers.lambda3[0] * budget.flat()[f];
    if (problem.terminal.enforce) {
      g.flat()[f] -= multipliers.terminal[0] * terminal.flat()[f];
    }
  }
  note_multiplier(multipliers.lambda3[0], constraint_h3(problem, x));
  if (problem.terminal.enforce) {
    note_multiplier(multipliers.terminal[0], constraint_terminal(problem, x));
  }

  for (std::size_t f = 0; f < count; ++f) {
    const double xv = x.values().flat()[f];
    worst = std::max(worst, std::abs(xv - std::clamp(xv + g.flat()[f], 0.0, 1.0)));
  }
  return std::max(worst, -most_negative);
}

}  // namespace hetsched
