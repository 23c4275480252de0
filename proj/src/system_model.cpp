#include "hetsched/system_model.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace hetsched {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) {
    throw InvalidArgument(what);
  }
}

}  // namespace

void RadioParams::validate() const {
  require(ref_distance_m > 0.0, "ref_distance_m must be > 0");
  require(distance_m >= ref_distance_m, "distance_m must be >= ref_distance_m");
  require(pathloss_exp > 0.0, "pathloss_exp must be > 0");
  require(sigma_db > 0.0, "sigma_db must be > 0");
}

void LinkParams::validate() const {
  require(plc_rate_bps > 0.0, "plc_rate_bps must be > 0");
  require(rb_rate_bps > 0.0, "rb_rate_bps must be > 0");
  require(rb_budget >= 0.0, "rb_budget must be >= 0");
  radio.validate();
}

void SensorSpec::validate() const {
  require(delay_bound_s > 0.0, "delay_bound_s must be > 0");
  require(min_success_prob >= 0.0 && min_success_prob <= 1.0,
          "min_success_prob must lie in [0, 1]");
}

TrafficTrace::TrafficTrace(std::size_t sensors, std::size_t steps)
    : sensors_(sensors), steps_(steps), bits_(sensors * steps, 0) {}

TrafficTrace::TrafficTrace(std::vector<std::vector<std::int64_t>> rows) {
  sensors_ = rows.size();
  steps_ = rows.empty() ? 0 : rows.front().size();
  bits_.reserve(sensors_ * steps_);
  for (const auto& row : rows) {
    require(row.size() == steps_, "traffic trace must be rectangular");
    for (auto b : row) {
      require(b >= 0, "traffic entries must be >= 0");
      bits_.push_back(b);
    }
  }
}

void TrafficTrace::set(std::size_t n, std::size_t i, std::int64_t bits) {
  require(bits >= 0, "traffic entries must be >= 0");
  bits_.at(n * steps_ + i) = bits;
}

std::vector<std::int64_t> TrafficTrace::column(std::size_t i) const {
  std::vector<std::int64_t> col(sensors_);
  for (std::size_t n = 0; n < sensors_; ++n) {
    col[n] = at(n, i);
  }
  return col;
}

TrafficTrace TrafficTrace::window(std::size_t first, std::size_t count) const {
  TrafficTrace w(sensors_, count);
  for (std::size_t n = 0; n < sensors_; ++n) {
    for (std::size_t j = 0; j < count && first + j < steps_; ++j) {
      w.bits_[n * count + j] = at(n, first + j);
    }
  }
  return w;
}

std::int64_t TrafficTrace::total() const noexcept {
  std::int64_t sum = 0;
  for (auto b : bits_) {
    sum += b;
  }
  return sum;
}

BufferState::BufferState(double depth, double capacity)
    : depth_bits(depth), capacity_bits(capacity) {
  require(capacity >= 0.0, "buffer capacity must be >= 0");
  require(depth >= 0.0 && depth <= capacity, "buffer depth must lie in [0, capacity]");
}

double avg_snr_db(const RadioParams& radio) {
  const double path_loss_db =
      10.0 * radio.pathloss_exp * std::log10(radio.distance_m / radio.ref_distance_m);
  return radio.tx_power_db + radio.gain_db - path_loss_db - radio.noise_db;
}

double bit_error_rate_at_snr(double snr_db, double snr_threshold_db, double sigma_db) {
  // 1/2 [1 + erf((th - snr) / (sigma sqrt 2))], written with erfc so the
  // far tail keeps its relative precision.
  const double z = (snr_db - snr_threshold_db) / (sigma_db * std::numbers::sqrt2);
  return 0.5 * std::erfc(z);
}

double bit_error_rate(const RadioParams& radio) {
  return bit_error_rate_at_snr(avg_snr_db(radio), radio.snr_threshold_db, radio.sigma_db);
}

double success_prob(double size_bits, double p_b) {
  if (size_bits <= 0.0) {
    return 1.0;
  }
  if (p_b >= 1.0) {
    return 0.0;
  }
  return std::exp(size_bits * std::log1p(-p_b));
}

double queue_delay_s(const BufferState& buffer, double plc_rate_bps) {
  return buffer.depth_bits / plc_rate_bps;
}

BufferStepResult buffer_step(const BufferState& buffer,
                             std::span<const std::int64_t> arrivals_row,
                             std::span<const double> decisions_row,
                             double plc_rate_bps,
                             double dt_s) {
  require(arrivals_row.size() == decisions_row.size(),
          "arrivals and decisions rows differ in length");
  double admitted = 0.0;
  double drain_capacity = 0.0;
  for (std::size_t n = 0; n < arrivals_row.size(); ++n) {
    const double x = decisions_row[n];
    require(x >= 0.0 && x <= 1.0, "decisions must lie in [0, 1]");
    admitted += static_cast<double>(arrivals_row[n]) * x;
    drain_capacity += plc_rate_bps * x * dt_s;
  }

  BufferStepResult out;
  out.admitted_bits = admitted;
  out.state.capacity_bits = buffer.capacity_bits;
  const double available = buffer.depth_bits + admitted;
  if (drain_capacity >= available) {
    out.drained_bits = available;
    out.state.depth_bits = 0.0;
  } else {
    out.drained_bits = drain_capacity;
    out.state.depth_bits = available - drain_capacity;
  }
  if (out.state.depth_bits > buffer.capacity_bits) {
    out.overflow_bits = out.state.depth_bits - buffer.capacity_bits;
    out.state.depth_bits = buffer.capacity_bits;
  }
  return out;
}

double calibrate_gain(double target_pb, double at_distance_m, const RadioParams& radio) {
  require(target_pb > 0.0 && target_pb <= 0.5, "target_pb must lie in (0, 0.5]");
  RadioParams probe = radio;
  probe.distance_m = at_distance_m;
  probe.validate();

  // BER is strictly decreasing in K; bisect on K until the bracket stops
  // shrinking in double precision.
  double lo = -500.0;
  double hi = 500.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) {
      break;
    }
    probe.gain_db = mid;
    if (bit_error_rate(probe) > target_pb) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace hetsched
