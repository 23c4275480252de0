#pragma once

#include <cmath>
#include <vector>

#include "hetsched/horizon_problem.hpp"
#include "hetsched/system_model.hpp"

namespace fixtures {

inline bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

/// Radio of the default scenario, with the gain calibrated to 4e-7 at 100 m.
inline hetsched::RadioParams calibrated_radio() {
  hetsched::RadioParams r;
  r.gain_db = hetsched::calibrate_gain(4e-7, 100.0, r);
  return r;
}

/// N x T problem over the given arrival rows, generous bounds unless changed.
inline hetsched::HorizonProblem make_problem(std::vector<std::vector<std::int64_t>> rows,
                                             double p_b = 4e-7) {
  hetsched::HorizonProblem p;
  const std::size_t n = rows.size();
  p.window = hetsched::TrafficTrace(std::move(rows));
  p.horizon_T = p.window.steps();
  for (std::size_t i = 0; i < n; ++i) {
    p.sensors.push_back({i, 10.0, 0.0});
  }
  p.rb_remaining = 1e6;
  p.p_b = p_b;
  p.terminal.weight = 1e-6;
  p.terminal.alpha = 8.0;
  p.terminal.enforce = true;
  return p;
}

}  // namespace fixtures
