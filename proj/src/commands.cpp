#include "hetsched/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "hetsched/oracle_suite.hpp"
#include "hetsched/svg_plot.hpp"

namespace hetsched {

namespace fs = std::filesystem;

namespace {

struct Metric {
  const char* key;
  const char* column;
  const char* title;
  const char* y_label;
};

constexpr Metric kMetrics[] = {
    {"throughput", "throughput_cum_bits", "Cumulative throughput", "bits"},
    {"buffer", "buffer_bits", "PLC buffer depth", "bits"},
    {"loss", "loss_rate", "Wireless packet loss rate", "lost / offered bits"},
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) {
    throw std::runtime_error("cannot write " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    throw std::runtime_error("cannot read " + path.string());
  }
  std::stringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

std::string compare_csv_name(const Metric& m, double rate) {
  return fmt::format("compare_{}_d{}.csv", m.key, rate);
}

std::string plot_name(const Metric& m, double rate) {
  return fmt::format("{}_d{}.svg", m.key, rate);
}

std::size_t column_index(const CsvTable& t, const std::string& name) {
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (t.header[c] == name) {
      return c;
    }
  }
  throw std::runtime_error("csv has no column " + name);
}

// One column per policy for the given metric, keyed by step.
std::string comparison_csv(const Metric& m, const std::vector<CsvTable>& runs) {
  std::string s = "step";
  for (PolicyKind p : kAllPolicies) {
    s += fmt::format(",{}", policy_name(p));
  }
  s += "\n";
  const std::size_t rows = runs.front().rows.size();
  for (const auto& r : runs) {
    if (r.rows.size() != rows) {
      throw std::runtime_error("run CSVs differ in length");
    }
  }
  for (std::size_t k = 0; k < rows; ++k) {
    s += fmt::format("{}", runs.front().rows[k][0]);
    for (const auto& r : runs) {
      s += fmt::format(",{}", r.rows[k][column_index(r, m.column)]);
    }
    s += "\n";
  }
  return s;
}

int run_suites(const SuiteSettings& settings, std::ostream& out, std::ostream& err,
               const ObjectiveFn& oracle_objective) {
  const SuiteReport reports[] = {
      bnb_oracle_suite(settings, oracle_objective),
      relaxation_bound_suite(settings),
      kkt_suite(settings),
      gradient_suite(settings),
  };
  bool ok = true;
  for (const auto& r : reports) {
    out << fmt::format("{}: {} passed, {} failed\n", r.name, r.passed, r.failed);
    if (!r.ok()) {
      ok = false;
      err << fmt::format("{}: first failing instance {}\n", r.name, r.first_failure);
    }
  }
  return ok ? kExitOk : kExitPropertyFailure;
}

}  // namespace

fs::path resolve_out_dir(const ExperimentConfig& cfg,
                         const std::optional<std::string>& override_dir) {
  if (override_dir) {
    return *override_dir;
  }
  if (cfg.output.directory) {
    return *cfg.output.directory;
  }
  if (const char* env = std::getenv(kOutDirEnv); env && *env) {
    return env;
  }
  return "out";
}

std::string run_csv_name(PolicyKind policy, double rate_bytes_per_s, std::uint64_t seed) {
  return fmt::format("{}_d{}_seed{}.csv", policy_name(policy), rate_bytes_per_s, seed);
}

std::string metrics_csv(const RunMetrics& m) {
  std::string s = "step,throughput_cum_bits,buffer_bits,loss_rate,rb_consumed,violations\n";
  for (std::size_t k = 0; k < m.cumulative_throughput_bits.size(); ++k) {
    s += fmt::format("{},{},{},{},{},{}\n", k + 1, m.cumulative_throughput_bits[k],
                     m.buffer_depth_bits[k], m.packet_loss_rate[k], m.rb_consumed[k],
                     m.violations[k]);
  }
  return s;
}

int cmd_run(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& out,
            std::ostream& err) {
  Scenario scenario = cfg.to_scenario();
  if (opts.seed) {
    scenario.seed = *opts.seed;
  }
  const fs::path dir = resolve_out_dir(cfg, opts.out_dir);
  try {
    const RunMetrics m = run_simulation(scenario, opts.policy);
    fs::create_directories(dir);
    const fs::path path =
        dir / run_csv_name(opts.policy, scenario.traffic.mean_rate_bytes_per_s, scenario.seed);
    write_file(path, metrics_csv(m));
    out << path.string() << "\n";
  } catch (const InfeasibleScenarioError& e) {
    err << "infeasible scenario: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitOk;
}

int regenerate_plots(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& err) {
  const std::uint64_t seed = cfg.scenario.seed;
  int code = kExitOk;
  for (double rate : cfg.sweep.rates_bytes_per_s) {
    std::vector<CsvTable> runs;
    try {
      for (PolicyKind p : kAllPolicies) {
        runs.push_back(parse_csv(read_file(dir / run_csv_name(p, rate, seed))));
      }
    } catch (const std::exception& e) {
      err << fmt::format("d={}: {}\n", rate, e.what());
      code = kExitConfigError;
      continue;
    }
    for (const Metric& m : kMetrics) {
      const std::string csv = comparison_csv(m, runs);
      write_file(dir / compare_csv_name(m, rate), csv);
      if (cfg.output.plots) {
        // The plot is drawn from the file just written, not from memory.
        const CsvTable table = parse_csv(read_file(dir / compare_csv_name(m, rate)));
        write_file(dir / plot_name(m, rate),
                   render_line_chart(table, fmt::format("{}, d = {} B/s", m.title, rate),
                                     m.y_label));
      }
    }
  }
  return code;
}

int cmd_sweep(const ExperimentConfig& cfg, const SweepOptions& opts, std::ostream& out,
              std::ostream& err) {
  const fs::path dir = resolve_out_dir(cfg, opts.out_dir);
  fs::create_directories(dir);
  if (opts.plots_only) {
    return regenerate_plots(cfg, dir, err);
  }

  const std::uint64_t seed = cfg.scenario.seed;
  nlohmann::json artifacts = nlohmann::json::array();
  std::vector<double> complete_rates;
  int code = kExitOk;
  for (double rate : cfg.sweep.rates_bytes_per_s) {
    const Scenario scenario = cfg.to_scenario(rate);
    bool complete = true;
    for (PolicyKind p : kAllPolicies) {
      nlohmann::json entry = {{"file", run_csv_name(p, rate, seed)},
                              {"kind", "run"},
                              {"policy", std::string(policy_name(p))},
                              {"rate_bytes_per_s", rate},
                              {"seed", seed}};
      try {
        const RunMetrics m = run_simulation(scenario, p);
        write_file(dir / run_csv_name(p, rate, seed), metrics_csv(m));
        entry["status"] = "ok";
      } catch (const InfeasibleScenarioError& e) {
        entry["status"] = "failed";
        entry["error"] = e.what();
        err << fmt::format("{} d={}: infeasible scenario: {}\n", policy_name(p), rate, e.what());
        complete = false;
        code = kExitInfeasible;
      }
      artifacts.push_back(entry);
    }
    if (complete) {
      complete_rates.push_back(rate);
    }
  }

  ExperimentConfig plot_cfg = cfg;
  plot_cfg.sweep.rates_bytes_per_s = complete_rates;
  if (!complete_rates.empty()) {
    const int plot_code = regenerate_plots(plot_cfg, dir, err);
    if (code == kExitOk) {
      code = plot_code;
    }
  }
  for (double rate : cfg.sweep.rates_bytes_per_s) {
    const bool ok =
        std::find(complete_rates.begin(), complete_rates.end(), rate) != complete_rates.end();
    for (const Metric& m : kMetrics) {
      nlohmann::json base = {{"rate_bytes_per_s", rate},
                             {"seed", seed},
                             {"metric", m.key},
                             {"status", ok ? "ok" : "failed"}};
      nlohmann::json csv = base;
      csv["file"] = compare_csv_name(m, rate);
      csv["kind"] = "comparison";
      artifacts.push_back(csv);
      if (cfg.output.plots) {
        nlohmann::json plot = base;
        plot["file"] = plot_name(m, rate);
        plot["kind"] = "plot";
        artifacts.push_back(plot);
      }
    }
  }
  const nlohmann::json manifest = {{"seed", seed},
                                   {"rates_bytes_per_s", cfg.sweep.rates_bytes_per_s},
                                   {"artifacts", artifacts}};
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  out << fmt::format("wrote {} artifacts to {}\n", artifacts.size(), dir.string());
  return code;
}

int cmd_oracle_check(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err,
                     const ObjectiveFn& oracle_objective) {
  SuiteSettings s;
  s.instances = cfg.oracle.instances;
  s.seed = cfg.oracle.seed;
  s.max_sensors = cfg.oracle.max_sensors;
  s.max_steps = cfg.oracle.max_steps;
  s.bnb = cfg.to_scenario().bnb;
  return run_suites(s, out, err, oracle_objective);
}

}  // namespace hetsched
