// One PASS/FAIL line per acceptance criterion. Exit status is non-zero when
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "hetsched/commands.hpp"
#include "hetsched/config.hpp"
#include "hetsched/oracle_suite.hpp"
#include "hetsched/sim_harness.hpp"

using namespace hetsched;

namespace {

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("%s %2d %s: %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  failures += pass ? 0 : 1;
}

double final_value(const std::vector<double>& v) { return v.empty() ? 0.0 : v.back(); }

double variance(const std::vector<double>& v) {
  const double sd = series_stddev(v);
  return sd * sd;
}

std::string suite_detail(const SuiteReport& r) {
  std::string s = fmt::format("{}/{} passed", r.passed, r.passed + r.failed);
  if (!r.ok()) {
    s += "; first failure " + r.first_failure;
  }
  return s;
}

}  // namespace

int main() {
  const ExperimentConfig cfg;  // defaults
  const std::vector<double> rates = cfg.sweep.rates_bytes_per_s;

  std::map<std::pair<double, PolicyKind>, RunMetrics> runs;
  const auto t0 = std::chrono::steady_clock::now();
  for (double d : rates) {
    const Scenario sc = cfg.to_scenario(d);
    for (PolicyKind p : kAllPolicies) {
      runs[{d, p}] = run_simulation(sc, p);
    }
  }
  const double sweep_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  auto tp = [&](double d, PolicyKind p) {
    return final_value(runs.at({d, p}).cumulative_throughput_bits);
  };

  {
    bool ok = sweep_s < 300.0;
    std::string detail;
    for (double d : rates) {
      const double mpc = tp(d, PolicyKind::Mpc);
      const double greedy = tp(d, PolicyKind::Greedy);
      const double lte = tp(d, PolicyKind::SingleLte);
      const bool strict = d != 200.0;
      const bool row = strict ? (mpc > greedy && greedy > lte) : (mpc >= greedy && greedy >= lte);
      ok = ok && row;
      detail += fmt::format("d={} mpc={} greedy={} lte={} ({}{}); ", d, mpc, greedy, lte,
                            strict ? "strict " : "", row ? "ok" : "violated");
    }
    detail += fmt::format("sweep {:.2f} s", sweep_s);
    report(1, "throughput ordering", ok, detail);
  }

  {
    bool ok = true;
    std::string detail;
    for (double d : rates) {
      const double mpc = series_stddev(runs.at({d, PolicyKind::Mpc}).buffer_depth_bits);
      const double greedy = series_stddev(runs.at({d, PolicyKind::Greedy}).buffer_depth_bits);
      const double plc = series_stddev(runs.at({d, PolicyKind::SinglePlc}).buffer_depth_bits);
      ok = ok && mpc <= greedy && mpc <= plc;
      detail += fmt::format("d={} sd mpc={:.6g} greedy={:.6g} plc={:.6g}; ", d, mpc, greedy, plc);
    }
    report(2, "buffer stability", ok, detail);
  }

  {
    bool ok = true;
    std::string detail;
    for (double d : rates) {
      const RunMetrics& lte = runs.at({d, PolicyKind::SingleLte});
      const double var = variance(lte.packet_loss_rate);
      const double mpc = final_value(runs.at({d, PolicyKind::Mpc}).packet_loss_rate);
      const double single = final_value(lte.packet_loss_rate);
      ok = ok && var < 1e-12 && mpc <= single;
      detail += fmt::format("d={} lte var={:.3g} final mpc={:.6g} lte={:.6g}; ", d, var, mpc,
                            single);
    }
    report(3, "packet loss", ok, detail);
  }

  SuiteSettings oracle;
  oracle.instances = 200;
  oracle.seed = cfg.oracle.seed;
  oracle.max_sensors = 3;
  oracle.max_steps = 4;
  oracle.bnb = cfg.to_scenario().bnb;
  {
    const SuiteReport r = bnb_oracle_suite(oracle);
    report(4, "oracle equivalence", r.ok() && r.passed == 200, suite_detail(r));
  }
  {
    const SuiteReport r = relaxation_bound_suite(oracle);
    report(5, "relaxation bound", r.ok() && r.passed == 200, suite_detail(r));
  }
  SuiteSettings hundred = oracle;
  hundred.instances = 100;
  {
    const SuiteReport r = kkt_suite(hundred);
    report(6, "KKT certification", r.ok() && r.passed == 100, suite_detail(r));
  }
  {
    const SuiteReport r = gradient_suite(hundred);
    report(7, "gradient check", r.ok() && r.passed == 100, suite_detail(r));
  }

  {
    bool ok = true;
    std::string detail;
    for (double d : rates) {
      const FeasibilityCheck c = recursive_feasibility_check(runs.at({d, PolicyKind::Mpc}).mpc_trace);
      ok = ok && c.ok;
      detail += fmt::format("d={} {}; ", d, c.ok ? "feasible" : "failed");
    }
    // Negative control: the PLC rate drops to a quarter at step 10, so the
    // plan made at step 9 no longer meets the delay bound of sensor 0.
    const Scenario sc = cfg.to_scenario(2000.0);
    const FeasibilityCheck clean = recursive_feasibility_check(run_simulation(sc, PolicyKind::Mpc).mpc_trace);
    const RunMetrics hit = run_simulation(sc, PolicyKind::Mpc, [](std::size_t k, SchedulerParams& p) {
      if (k == 10) {
        p.link.plc_rate_bps /= 4.0;
      }
    });
    const FeasibilityCheck disturbed = recursive_feasibility_check(hit.mpc_trace);
    ok = ok && clean.ok && !disturbed.ok;
    detail += fmt::format("control without disturbance {}; with PLC rate cut at step 10 {} (first failure {})",
                          clean.ok ? "feasible" : "failed", disturbed.ok ? "feasible" : "failed",
                          disturbed.first_failure ? fmt::format("{}", *disturbed.first_failure) : "none");
    report(8, "recursive feasibility", ok, detail);
  }

  {
    RadioParams r = cfg.to_scenario().link.radio;
    double lo = NAN, hi = NAN;
    bool contiguous = true;
    bool left = false;
    for (int k = 1000; k <= 20000; ++k) {
      r.distance_m = k * 0.01;
      const double ber = bit_error_rate(r);
      const bool in = ber >= 3e-7 && ber <= 5e-7;
      if (in && left) {
        contiguous = false;
      }
      if (in) {
        if (std::isnan(lo)) {
          lo = r.distance_m;
        }
        hi = r.distance_m;
      } else if (!std::isnan(lo)) {
        left = true;
      }
    }
    const bool ok = !std::isnan(lo) && contiguous;
    report(9, "BER calibration", ok,
           fmt::format("K={:.12g} dB; P_b in [3e-7, 5e-7] for d in [{:.2f}, {:.2f}] m{}",
                       r.gain_db, lo, hi, contiguous ? "" : " (not contiguous)"));
  }

  {
    bool identical = true;
    bool conserved = true;
    std::size_t count = 0;
    for (double d : rates) {
      const Scenario sc = cfg.to_scenario(d);
      for (PolicyKind p : kAllPolicies) {
        const RunMetrics& first = runs.at({d, p});
        identical = identical && metrics_csv(first) == metrics_csv(run_simulation(sc, p));
        conserved = conserved && conserves_bits(first);
        ++count;
      }
    }
    ExperimentConfig mc = cfg;
    mc.scenario.loss_mode = LossMode::MonteCarlo;
    mc.scenario.distribution = TrafficDistribution::Uniform;
    mc.scenario.spread = 0.2;
    for (double d : rates) {
      const Scenario sc = mc.to_scenario(d);
      for (PolicyKind p : kAllPolicies) {
        const RunMetrics a = run_simulation(sc, p);
        identical = identical && metrics_csv(a) == metrics_csv(run_simulation(sc, p));
        conserved = conserved && conserves_bits(a);
        ++count;
      }
    }
    report(10, "determinism and conservation", identical && conserved,
           fmt::format("{} runs, CSVs {}, conservation {}", count,
                       identical ? "byte-identical" : "differ", conserved ? "exact" : "broken"));
  }

  return failures == 0 ? 0 : 1;
}
