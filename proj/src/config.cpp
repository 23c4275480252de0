#include "hetsched/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace hetsched {

namespace {

ParseError parse_error_at(const YAML::Mark& mark, const std::string& what) {
  return ParseError(fmt::format("line {}, column {}: {}", mark.line + 1, mark.column + 1, what),
                    mark.line + 1, mark.column + 1);
}

// Map node plus its dotted path; every key read is recorded so leftovers can
// be reported as unknown.
class Section {
public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) {
      throw parse_error_at(node_.Mark(), fmt::format("{} must be a mapping", display()));
    }
    if (node_ && node_.IsMap()) {
      std::set<std::string> seen;
      for (const auto& kv : node_) {
        const std::string key = kv.first.Scalar();
        if (!seen.insert(key).second) {
          throw parse_error_at(kv.first.Mark(),
                               fmt::format("duplicate key {}", child_path(key)));
        }
      }
    }
  }

  std::string child_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  YAML::Node get(const std::string& key) {
    known_.insert(key);
    if (!node_ || !node_.IsMap()) {
      return YAML::Node();
    }
    for (const auto& kv : node_) {
      if (kv.first.Scalar() == key) {
        return kv.second;
      }
    }
    return YAML::Node();
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    YAML::Node v = get(key);
    if (!v || v.IsNull()) {
      return;
    }
    if (!v.IsScalar()) {
      throw parse_error_at(v.Mark(), fmt::format("{} must be a scalar", child_path(key)));
    }
    try {
      out = v.as<T>();
    } catch (const YAML::BadConversion&) {
      throw parse_error_at(v.Mark(),
                           fmt::format("{}: cannot read '{}'", child_path(key), v.Scalar()));
    }
  }

  template <typename T>
  void read(const std::string& key, std::optional<T>& out) {
    YAML::Node v = get(key);
    if (!v || v.IsNull()) {
      return;
    }
    T value{};
    read(key, value);
    out = value;
  }

  Section sub(const std::string& key) { return Section(get(key), child_path(key)); }

  void reject_unknown() const {
    if (!node_ || !node_.IsMap()) {
      return;
    }
    for (const auto& kv : node_) {
      if (!known_.count(kv.first.Scalar())) {
        throw UnknownKeyError(child_path(kv.first.Scalar()));
      }
    }
  }

private:
  std::string display() const { return path_.empty() ? "document" : path_; }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> known_;
};

template <typename T>
T read_enum(Section& sec, const std::string& key, T fallback,
            std::initializer_list<std::pair<const char*, T>> names) {
  std::optional<std::string> text;
  sec.read(key, text);
  if (!text) {
    return fallback;
  }
  std::string accepted;
  for (const auto& [name, value] : names) {
    if (*text == name) {
      return value;
    }
    accepted += accepted.empty() ? name : std::string("|") + name;
  }
  throw RangeError(sec.child_path(key), accepted);
}

void read_sensors(Section& sec, std::vector<SensorConfig>& out) {
  YAML::Node list = sec.get("sensors");
  if (!list || list.IsNull()) {
    return;
  }
  if (!list.IsSequence()) {
    throw parse_error_at(list.Mark(), "scenario.sensors must be a list");
  }
  out.clear();
  for (std::size_t i = 0; i < list.size(); ++i) {
    Section s(list[i], fmt::format("scenario.sensors[{}]", i));
    SensorConfig c;
    s.read("delay_bound_s", c.delay_bound_s);
    s.read("min_success_prob", c.min_success_prob);
    s.reject_unknown();
    out.push_back(c);
  }
}

void read_rates(Section& sec, std::vector<double>& out) {
  YAML::Node list = sec.get("rates_bytes_per_s");
  if (!list || list.IsNull()) {
    return;
  }
  if (!list.IsSequence()) {
    throw parse_error_at(list.Mark(), "sweep.rates_bytes_per_s must be a list");
  }
  out.clear();
  for (const auto& v : list) {
    try {
      out.push_back(v.as<double>());
    } catch (const YAML::BadConversion&) {
      throw parse_error_at(v.Mark(), "sweep.rates_bytes_per_s entries must be numbers");
    }
  }
}

ExperimentConfig from_root(const YAML::Node& root) {
  ExperimentConfig cfg;
  Section top(root, "");

  {
    Section sc = top.sub("scenario");
    ScenarioConfig& s = cfg.scenario;
    read_sensors(sc, s.sensors);
    sc.read("plc_rate_bytes_per_s", s.plc_rate_bytes_per_s);
    sc.read("rb_rate_bps", s.rb_rate_bps);
    sc.read("rb_budget", s.rb_budget);

    Section radio = sc.sub("radio");
    RadioConfig& r = s.radio;
    radio.read("tx_power_db", r.tx_power_db);
    radio.read("gain_db", r.gain_db);
    radio.read("noise_db", r.noise_db);
    radio.read("ref_distance_m", r.ref_distance_m);
    radio.read("distance_m", r.distance_m);
    radio.read("pathloss_exp", r.pathloss_exp);
    radio.read("snr_threshold_db", r.snr_threshold_db);
    radio.read("sigma_db", r.sigma_db);
    radio.reject_unknown();

    Section cal = sc.sub("calibration");
    cal.read("target_ber", r.calibration_target_ber);
    cal.read("at_distance_m", r.calibration_distance_m);
    cal.reject_unknown();

    Section traffic = sc.sub("traffic");
    traffic.read("mean_rate_bytes_per_s", s.mean_rate_bytes_per_s);
    s.distribution = read_enum(traffic, "distribution", s.distribution,
                               {{"constant", TrafficDistribution::Constant},
                                {"uniform", TrafficDistribution::Uniform}});
    traffic.read("spread", s.spread);
    traffic.reject_unknown();

    sc.read("duration_steps", s.duration_steps);
    sc.read("dt_s", s.dt_s);
    sc.read("seed", s.seed);
    s.loss_mode = read_enum(sc, "loss_mode", s.loss_mode,
                            {{"expected", LossMode::Expected},
                             {"monte_carlo", LossMode::MonteCarlo}});
    sc.read("initial_depth_bytes", s.initial_depth_bytes);
    sc.read("buffer_capacity_bytes", s.buffer_capacity_bytes);
    sc.reject_unknown();
  }
  {
    Section so = top.sub("solver");
    SolverConfig& s = cfg.solver;
    so.read("kkt_tol", s.kkt_tol);
    so.read("max_outer", s.max_outer);
    so.read("max_inner", s.max_inner);
    so.read("epsilon", s.epsilon);
    so.read("node_limit", s.node_limit);
    so.read("gap_tol", s.gap_tol);
    so.read("horizon_T", s.horizon_T);
    so.read("terminal_weight", s.terminal_weight);
    so.read("terminal_alpha", s.terminal_alpha);
    so.read("enforce_terminal_set", s.enforce_terminal_set);
    so.read("literal_dive", s.literal_dive);
    so.reject_unknown();
  }
  {
    Section out = top.sub("output");
    out.read("directory", cfg.output.directory);
    out.read("plots", cfg.output.plots);
    out.reject_unknown();
  }
  {
    Section sw = top.sub("sweep");
    read_rates(sw, cfg.sweep.rates_bytes_per_s);
    sw.reject_unknown();
  }
  {
    Section orc = top.sub("oracle");
    orc.read("instances", cfg.oracle.instances);
    orc.read("seed", cfg.oracle.seed);
    orc.read("max_sensors", cfg.oracle.max_sensors);
    orc.read("max_steps", cfg.oracle.max_steps);
    orc.reject_unknown();
  }
  top.reject_unknown();
  validate_config(cfg);
  return cfg;
}

void check(bool ok, const std::string& field, const std::string& accepted) {
  if (!ok) {
    throw RangeError(field, accepted);
  }
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void validate_config(const ExperimentConfig& cfg) {
  const ScenarioConfig& s = cfg.scenario;
  check(!s.sensors.empty(), "scenario.sensors", "at least one sensor");
  for (std::size_t i = 0; i < s.sensors.size(); ++i) {
    const auto& c = s.sensors[i];
    check(finite(c.delay_bound_s) && c.delay_bound_s > 0.0,
          fmt::format("scenario.sensors[{}].delay_bound_s", i), "(0, inf)");
    check(c.min_success_prob >= 0.0 && c.min_success_prob <= 1.0,
          fmt::format("scenario.sensors[{}].min_success_prob", i), "[0, 1]");
  }
  check(finite(s.plc_rate_bytes_per_s) && s.plc_rate_bytes_per_s > 0.0,
        "scenario.plc_rate_bytes_per_s", "(0, inf)");
  check(finite(s.rb_rate_bps) && s.rb_rate_bps > 0.0, "scenario.rb_rate_bps", "(0, inf)");
  check(finite(s.rb_budget) && s.rb_budget >= 0.0, "scenario.rb_budget", "[0, inf)");

  const RadioConfig& r = s.radio;
  check(finite(r.tx_power_db), "scenario.radio.tx_power_db", "finite");
  check(!r.gain_db || finite(*r.gain_db), "scenario.radio.gain_db", "finite");
  check(finite(r.noise_db), "scenario.radio.noise_db", "finite");
  check(finite(r.ref_distance_m) && r.ref_distance_m > 0.0, "scenario.radio.ref_distance_m",
        "(0, inf)");
  check(finite(r.distance_m) && r.distance_m >= r.ref_distance_m, "scenario.radio.distance_m",
        "[ref_distance_m, inf)");
  check(finite(r.pathloss_exp) && r.pathloss_exp > 0.0, "scenario.radio.pathloss_exp",
        "(0, inf)");
  check(finite(r.snr_threshold_db), "scenario.radio.snr_threshold_db", "finite");
  check(finite(r.sigma_db) && r.sigma_db > 0.0, "scenario.radio.sigma_db", "(0, inf)");
  check(r.calibration_target_ber > 0.0 && r.calibration_target_ber <= 0.5,
        "scenario.calibration.target_ber", "(0, 0.5]");
  check(finite(r.calibration_distance_m) && r.calibration_distance_m >= r.ref_distance_m,
        "scenario.calibration.at_distance_m", "[ref_distance_m, inf)");

  check(finite(s.mean_rate_bytes_per_s) && s.mean_rate_bytes_per_s >= 0.0,
        "scenario.traffic.mean_rate_bytes_per_s", "[0, inf)");
  check(s.spread >= 0.0 && s.spread <= 1.0, "scenario.traffic.spread", "[0, 1]");
  check(s.duration_steps >= 1, "scenario.duration_steps", "[1, inf)");
  check(finite(s.dt_s) && s.dt_s > 0.0, "scenario.dt_s", "(0, inf)");
  check(finite(s.buffer_capacity_bytes) && s.buffer_capacity_bytes >= 0.0,
        "scenario.buffer_capacity_bytes", "[0, inf)");
  check(s.initial_depth_bytes >= 0.0 && s.initial_depth_bytes <= s.buffer_capacity_bytes,
        "scenario.initial_depth_bytes", "[0, buffer_capacity_bytes]");

  const SolverConfig& so = cfg.solver;
  check(so.kkt_tol > 0.0, "solver.kkt_tol", "(0, inf)");
  check(so.max_outer >= 1, "solver.max_outer", "[1, inf)");
  check(so.max_inner >= 1, "solver.max_inner", "[1, inf)");
  check(so.epsilon > 0.0 && so.epsilon < 1.0, "solver.epsilon", "(0, 1)");
  check(so.node_limit >= 1, "solver.node_limit", "[1, inf)");
  check(so.gap_tol >= 0.0, "solver.gap_tol", "[0, inf)");
  check(so.horizon_T >= 1 && so.horizon_T <= 8, "solver.horizon_T", "[1, 8]");
  check(finite(so.terminal_weight) && so.terminal_weight > 0.0, "solver.terminal_weight",
        "(0, inf)");
  check(!so.terminal_alpha || (finite(*so.terminal_alpha) && *so.terminal_alpha >= 0.0),
        "solver.terminal_alpha", "[0, inf)");

  check(!cfg.output.directory || !cfg.output.directory->empty(), "output.directory",
        "non-empty path");

  check(!cfg.sweep.rates_bytes_per_s.empty(), "sweep.rates_bytes_per_s", "non-empty list");
  for (double d : cfg.sweep.rates_bytes_per_s) {
    check(finite(d) && d >= 0.0, "sweep.rates_bytes_per_s", "entries in [0, inf)");
  }

  const OracleConfig& o = cfg.oracle;
  check(o.instances >= 1, "oracle.instances", "[1, inf)");
  check(o.max_sensors >= 1, "oracle.max_sensors", "[1, inf)");
  check(o.max_steps >= 1, "oracle.max_steps", "[1, inf)");
  check(o.max_sensors * o.max_steps <= kOracleMaxSize, "oracle.max_sensors*max_steps",
        fmt::format("[1, {}]", kOracleMaxSize));
}

ExperimentConfig parse_config_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.what(), e.mark.line + 1, e.mark.column + 1);
  }
  return from_root(root);
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw MissingFileError("cannot read config file " + path);
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

Scenario ExperimentConfig::to_scenario() const {
  return to_scenario(scenario.mean_rate_bytes_per_s);
}

Scenario ExperimentConfig::to_scenario(double mean_rate_bytes_per_s) const {
  const ScenarioConfig& s = scenario;
  Scenario out;
  for (std::size_t i = 0; i < s.sensors.size(); ++i) {
    out.sensors.push_back({i, s.sensors[i].delay_bound_s, s.sensors[i].min_success_prob});
  }
  out.link.plc_rate_bps = 8.0 * s.plc_rate_bytes_per_s;
  out.link.rb_rate_bps = s.rb_rate_bps;
  out.link.rb_budget = s.rb_budget;

  RadioParams& r = out.link.radio;
  r.tx_power_db = s.radio.tx_power_db;
  r.noise_db = s.radio.noise_db;
  r.ref_distance_m = s.radio.ref_distance_m;
  r.distance_m = s.radio.distance_m;
  r.pathloss_exp = s.radio.pathloss_exp;
  r.snr_threshold_db = s.radio.snr_threshold_db;
  r.sigma_db = s.radio.sigma_db;
  r.gain_db = s.radio.gain_db ? *s.radio.gain_db
                              : calibrate_gain(s.radio.calibration_target_ber,
                                               s.radio.calibration_distance_m, r);

  out.traffic.mean_rate_bytes_per_s = mean_rate_bytes_per_s;
  out.traffic.distribution = s.distribution;
  out.traffic.spread = s.spread;
  out.duration_steps = s.duration_steps;
  out.dt_s = s.dt_s;
  out.seed = s.seed;
  out.loss_mode = s.loss_mode;
  out.initial_depth_bits = 8.0 * s.initial_depth_bytes;
  out.capacity_bits = 8.0 * s.buffer_capacity_bytes;

  out.horizon_T = solver.horizon_T;
  out.terminal.weight = solver.terminal_weight;
  out.terminal.alpha = solver.terminal_alpha ? *solver.terminal_alpha
                                             : solver.terminal_weight * out.capacity_bits;
  out.terminal.enforce = solver.enforce_terminal_set;
  out.bnb.epsilon = solver.epsilon;
  out.bnb.node_limit = solver.node_limit;
  out.bnb.gap_tol = solver.gap_tol;
  out.bnb.literal_dive = solver.literal_dive;
  out.bnb.relax.kkt_tol = solver.kkt_tol;
  out.bnb.relax.max_outer = solver.max_outer;
  out.bnb.relax.max_inner = solver.max_inner;
  return out;
}

std::string serialize_config(const ExperimentConfig& cfg) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  const ScenarioConfig& s = cfg.scenario;
  const RadioConfig& r = s.radio;

  e << YAML::BeginMap;
  e << YAML::Key << "scenario" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "sensors" << YAML::Value << YAML::BeginSeq;
  for (const auto& c : s.sensors) {
    e << YAML::Flow << YAML::BeginMap << YAML::Key << "delay_bound_s" << YAML::Value
      << c.delay_bound_s << YAML::Key << "min_success_prob" << YAML::Value
      << c.min_success_prob << YAML::EndMap;
  }
  e << YAML::EndSeq;
  e << YAML::Key << "plc_rate_bytes_per_s" << YAML::Value << s.plc_rate_bytes_per_s;
  e << YAML::Key << "rb_rate_bps" << YAML::Value << s.rb_rate_bps;
  e << YAML::Key << "rb_budget" << YAML::Value << s.rb_budget;
  e << YAML::Key << "radio" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "tx_power_db" << YAML::Value << r.tx_power_db;
  if (r.gain_db) {
    e << YAML::Key << "gain_db" << YAML::Value << *r.gain_db;
  }
  e << YAML::Key << "noise_db" << YAML::Value << r.noise_db;
  e << YAML::Key << "ref_distance_m" << YAML::Value << r.ref_distance_m;
  e << YAML::Key << "distance_m" << YAML::Value << r.distance_m;
  e << YAML::Key << "pathloss_exp" << YAML::Value << r.pathloss_exp;
  e << YAML::Key << "snr_threshold_db" << YAML::Value << r.snr_threshold_db;
  e << YAML::Key << "sigma_db" << YAML::Value << r.sigma_db;
  e << YAML::EndMap;
  e << YAML::Key << "calibration" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "target_ber" << YAML::Value << r.calibration_target_ber;
  e << YAML::Key << "at_distance_m" << YAML::Value << r.calibration_distance_m;
  e << YAML::EndMap;
  e << YAML::Key << "traffic" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "mean_rate_bytes_per_s" << YAML::Value << s.mean_rate_bytes_per_s;
  e << YAML::Key << "distribution" << YAML::Value
    << (s.distribution == TrafficDistribution::Uniform ? "uniform" : "constant");
  e << YAML::Key << "spread" << YAML::Value << s.spread;
  e << YAML::EndMap;
  e << YAML::Key << "duration_steps" << YAML::Value << s.duration_steps;
  e << YAML::Key << "dt_s" << YAML::Value << s.dt_s;
  e << YAML::Key << "seed" << YAML::Value << s.seed;
  e << YAML::Key << "loss_mode" << YAML::Value
    << (s.loss_mode == LossMode::MonteCarlo ? "monte_carlo" : "expected");
  e << YAML::Key << "initial_depth_bytes" << YAML::Value << s.initial_depth_bytes;
  e << YAML::Key << "buffer_capacity_bytes" << YAML::Value << s.buffer_capacity_bytes;
  e << YAML::EndMap;

  const SolverConfig& so = cfg.solver;
  e << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kkt_tol" << YAML::Value << so.kkt_tol;
  e << YAML::Key << "max_outer" << YAML::Value << so.max_outer;
  e << YAML::Key << "max_inner" << YAML::Value << so.max_inner;
  e << YAML::Key << "epsilon" << YAML::Value << so.epsilon;
  e << YAML::Key << "node_limit" << YAML::Value << so.node_limit;
  e << YAML::Key << "gap_tol" << YAML::Value << so.gap_tol;
  e << YAML::Key << "horizon_T" << YAML::Value << so.horizon_T;
  e << YAML::Key << "terminal_weight" << YAML::Value << so.terminal_weight;
  if (so.terminal_alpha) {
    e << YAML::Key << "terminal_alpha" << YAML::Value << *so.terminal_alpha;
  }
  e << YAML::Key << "enforce_terminal_set" << YAML::Value << so.enforce_terminal_set;
  e << YAML::Key << "literal_dive" << YAML::Value << so.literal_dive;
  e << YAML::EndMap;

  e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  if (cfg.output.directory) {
    e << YAML::Key << "directory" << YAML::Value << YAML::DoubleQuoted << *cfg.output.directory;
  }
  e << YAML::Key << "plots" << YAML::Value << cfg.output.plots;
  e << YAML::EndMap;

  e << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "rates_bytes_per_s" << YAML::Value << YAML::Flow
    << cfg.sweep.rates_bytes_per_s;
  e << YAML::EndMap;

  e << YAML::Key << "oracle" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "instances" << YAML::Value << cfg.oracle.instances;
  e << YAML::Key << "seed" << YAML::Value << cfg.oracle.seed;
  e << YAML::Key << "max_sensors" << YAML::Value << cfg.oracle.max_sensors;
  e << YAML::Key << "max_steps" << YAML::Value << cfg.oracle.max_steps;
  e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace hetsched
