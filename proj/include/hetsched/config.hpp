#pragma once

// Experiment configuration: YAML schema, defaults, validation and
// re-serialization. Sizes are given in bytes and converted to bits.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hetsched/receding_scheduler.hpp"
#include "hetsched/sim_harness.hpp"

namespace hetsched {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class MissingFileError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

class ParseError : public ConfigError {
public:
  ParseError(const std::string& what, int line, int column)
      : ConfigError(what), line_(line), column_(column) {}
  int line() const noexcept { return line_; }  ///< 1-based
  int column() const noexcept { return column_; }

private:
  int line_;
  int column_;
};

class UnknownKeyError : public ConfigError {
public:
  explicit UnknownKeyError(std::string path)
      : ConfigError("unknown key " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

class RangeError : public ConfigError {
public:
  RangeError(std::string field, const std::string& accepted)
      : ConfigError(field + " out of range, accepted: " + accepted), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

struct SensorConfig {
  double delay_bound_s = 1.0;
  double min_success_prob = 0.0;

  bool operator==(const SensorConfig&) const = default;
};

struct RadioConfig {
  double tx_power_db = 20.0;
  std::optional<double> gain_db;  ///< absent: calibrated
  double noise_db = 1.0;
  double ref_distance_m = 1.0;
  double distance_m = 100.0;
  double pathloss_exp = 2.0;
  double snr_threshold_db = 11.5;
  double sigma_db = 2.0;
  double calibration_target_ber = 4e-7;
  double calibration_distance_m = 100.0;

  bool operator==(const RadioConfig&) const = default;
};

struct ScenarioConfig {
  std::vector<SensorConfig> sensors{{0.5, 0.99}, {1.5, 0.999}, {3.0, 0.95}};
  double plc_rate_bytes_per_s = 1e4;
  double rb_rate_bps = 240.0;
  double rb_budget = 100.0;
  RadioConfig radio;
  double mean_rate_bytes_per_s = 200.0;
  TrafficDistribution distribution = TrafficDistribution::Constant;
  double spread = 0.5;
  std::size_t duration_steps = 100;
  double dt_s = 1.0;
  std::uint64_t seed = 1;
  LossMode loss_mode = LossMode::Expected;
  double initial_depth_bytes = 1e4;
  double buffer_capacity_bytes = 1e6;

  bool operator==(const ScenarioConfig&) const = default;
};

struct SolverConfig {
  double kkt_tol = 1e-6;
  int max_outer = 100;
  int max_inner = 500;
  double epsilon = 0.5;
  std::size_t node_limit = 100000;
  double gap_tol = 1e-6;
  std::size_t horizon_T = 5;
  double terminal_weight = 1e-6;
  std::optional<double> terminal_alpha;  ///< absent: weight * capacity
  bool enforce_terminal_set = true;
  bool literal_dive = false;

  bool operator==(const SolverConfig&) const = default;
};

struct OutputConfig {
  std::optional<std::string> directory;  ///< absent: environment, then "out"
  bool plots = true;

  bool operator==(const OutputConfig&) const = default;
};

struct SweepConfig {
  std::vector<double> rates_bytes_per_s{200.0, 2000.0, 4000.0};

  bool operator==(const SweepConfig&) const = default;
};

struct OracleConfig {
  std::size_t instances = 200;
  std::uint64_t seed = 1;
  std::size_t max_sensors = 3;
  std::size_t max_steps = 4;

  bool operator==(const OracleConfig&) const = default;
};

inline constexpr std::size_t kOracleMaxSize = 12;

struct ExperimentConfig {
  ScenarioConfig scenario;
  SolverConfig solver;
  OutputConfig output;
  SweepConfig sweep;
  OracleConfig oracle;

  bool operator==(const ExperimentConfig&) const = default;

  /// Scenario at the configured traffic rate, with K calibrated if unset.
  Scenario to_scenario() const;
  Scenario to_scenario(double mean_rate_bytes_per_s) const;
};

ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

/// YAML text that parses back to an equal config.
std::string serialize_config(const ExperimentConfig& cfg);

void validate_config(const ExperimentConfig& cfg);

}  // namespace hetsched
