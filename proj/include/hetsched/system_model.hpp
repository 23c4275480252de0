#pragma once

// Physical and queueing model of the heterogeneous PLC/LTE uplink platform.
//
// All data sizes are in bits and all rates in bits per second. Radio
// quantities are in dB; SNR arithmetic happens in the dB domain.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hetsched {

/// Thrown when a value type is constructed with arguments outside its domain.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct RadioParams {
  double tx_power_db = 20.0;
  double gain_db = 0.0;  ///< system gain constant K
  double noise_db = 1.0;
  double ref_distance_m = 1.0;
  double distance_m = 100.0;
  double pathloss_exp = 2.0;
  double snr_threshold_db = 11.5;
  double sigma_db = 2.0;

  void validate() const;
};

struct LinkParams {
  double plc_rate_bps = 8.0e4;
  double rb_rate_bps = 240.0;
  double rb_budget = 100.0;  ///< Y, resource blocks available over the run
  RadioParams radio;

  void validate() const;
};

struct SensorSpec {
  std::size_t id = 0;
  double delay_bound_s = 1.0;     ///< T_c,n
  double min_success_prob = 0.0;  ///< P_e,n

  void validate() const;
};

/// Per-sensor, per-timestep arrival sizes in bits. Row-major [sensor][step].
class TrafficTrace {
public:
  TrafficTrace() = default;
  TrafficTrace(std::size_t sensors, std::size_t steps);
  explicit TrafficTrace(std::vector<std::vector<std::int64_t>> rows);

  std::size_t sensors() const noexcept { return sensors_; }
  std::size_t steps() const noexcept { return steps_; }

  std::int64_t at(std::size_t n, std::size_t i) const { return bits_[n * steps_ + i]; }
  void set(std::size_t n, std::size_t i, std::int64_t bits);

  /// Arrivals of every sensor at step i.
  std::vector<std::int64_t> column(std::size_t i) const;

  /// Columns [first, first + count); columns past the end are zero.
  TrafficTrace window(std::size_t first, std::size_t count) const;

  std::int64_t total() const noexcept;

  bool operator==(const TrafficTrace&) const = default;

private:
  std::size_t sensors_ = 0;
  std::size_t steps_ = 0;
  std::vector<std::int64_t> bits_;
};

struct BufferState {
  double depth_bits = 0.0;
  double capacity_bits = 0.0;

  BufferState() = default;
  BufferState(double depth, double capacity);

  bool operator==(const BufferState&) const = default;
};

/// Outcome of one buffer update. new_depth + drained + overflow equals
/// old depth + admitted exactly for integer-valued inputs.
struct BufferStepResult {
  BufferState state;
  double admitted_bits = 0.0;
  double drained_bits = 0.0;
  double overflow_bits = 0.0;
};

/// Average received SNR in dB: P_t + K - 10*lambda*log10(d_n/d_0) - N_0.
double avg_snr_db(const RadioParams& radio);

/// BER from the log-normal threshold model; falls as the average SNR rises.
double bit_error_rate(const RadioParams& radio);

/// Same formula, for a precomputed average SNR.
double bit_error_rate_at_snr(double snr_db, double snr_threshold_db, double sigma_db);

/// Probability that all size_bits bits survive independent bit errors.
double success_prob(double size_bits, double p_b);

/// Time the head of the FIFO waits before the wire picks it up.
double queue_delay_s(const BufferState& buffer, double plc_rate_bps);

/// One step of the PLC buffer recursion
///   m' = m + sum_n x_n * (D_n - r * dt)
/// clamped to [0, M]. The excess above M is reported as overflow.
BufferStepResult buffer_step(const BufferState& buffer,
                             std::span<const std::int64_t> arrivals_row,
                             std::span<const double> decisions_row,
                             double plc_rate_bps,
                             double dt_s);

/// Back-solves the system gain K so that the BER at at_distance_m equals
/// target_pb. All other radio fields are taken from `radio`.
double calibrate_gain(double target_pb, double at_distance_m, const RadioParams& radio);

}  // namespace hetsched
