#include <doctest.h>

#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "hetsched/system_model.hpp"

using namespace hetsched;
using fixtures::rel_close;

TEST_SUITE("system_model") {
  TEST_CASE("avg_snr_db") {
    RadioParams r;
    r.distance_m = r.ref_distance_m;
    CHECK(avg_snr_db(r) == doctest::Approx(19.0).epsilon(1e-15));

    r.distance_m = 50.0;
    const double near = avg_snr_db(r);
    r.distance_m = 100.0;
    CHECK(near - avg_snr_db(r) == doctest::Approx(6.0205999132796239).epsilon(1e-13));

    r.noise_db = 3.0;
    CHECK(avg_snr_db(r) < near);
  }

  TEST_CASE("calibrated gain reproduces the target error rate") {
    const RadioParams r = fixtures::calibrated_radio();
    CHECK(rel_close(r.gain_db, 42.370734889438848, 1e-12));
    CHECK(rel_close(avg_snr_db(r), 21.370734889438848, 1e-12));
    CHECK(rel_close(bit_error_rate(r), 4e-7, 1e-9));
  }

  TEST_CASE("calibrate_gain at 0.5 puts the average SNR on the threshold") {
    RadioParams r;
    r.gain_db = calibrate_gain(0.5, 70.0, r);
    r.distance_m = 70.0;
    CHECK(avg_snr_db(r) == doctest::Approx(r.snr_threshold_db).epsilon(1e-9));
  }

  TEST_CASE("calibrate_gain grows as the target falls") {
    RadioParams r;
    CHECK(calibrate_gain(1e-8, 100.0, r) > calibrate_gain(1e-6, 100.0, r));
    CHECK_THROWS_AS(calibrate_gain(0.0, 100.0, r), InvalidArgument);
  }

  TEST_CASE("bit_error_rate limits and tail value") {
    CHECK(bit_error_rate_at_snr(11.5, 11.5, 2.0) == 0.5);
    CHECK(bit_error_rate_at_snr(1e4, 11.5, 2.0) == 0.0);
    CHECK(bit_error_rate_at_snr(-1e4, 11.5, 2.0) == 1.0);
    const double snr = 11.5 + 3.5 * 2.0 * std::sqrt(2.0);
    CHECK(rel_close(bit_error_rate_at_snr(snr, 11.5, 2.0), 3.7154918617070637e-7, 1e-12));
  }

  TEST_CASE("bit_error_rate by distance with the calibrated gain") {
    RadioParams r = fixtures::calibrated_radio();
    const struct {
      double d;
      double ber;
    } table[] = {{50.0, 9.657e-16}, {90.0, 3.4657e-8}, {95.0, 1.2471e-7},
                 {105.0, 1.1592e-6}, {110.0, 3.0710e-6}, {150.0, 7.506e-4},
                 {200.0, 0.02711}};
    for (const auto& row : table) {
      r.distance_m = row.d;
      CHECK(rel_close(bit_error_rate(r), row.ber, 5e-4));
    }
    r.distance_m = 10.0;
    CHECK(rel_close(bit_error_rate(r), 9.7000881467185846e-51, 1e-9));
  }

  TEST_CASE("error-rate band edges") {
    RadioParams r = fixtures::calibrated_radio();
    r.distance_m = 98.722246722;
    CHECK(rel_close(bit_error_rate(r), 3e-7, 1e-8));
    r.distance_m = 101.011982984;
    CHECK(rel_close(bit_error_rate(r), 5e-7, 1e-8));
  }

  TEST_CASE("bit_error_rate strictly decreasing over a grid of SNR values") {
    double prev = 2.0;
    for (int k = 0; k < 200; ++k) {
      const double v = bit_error_rate_at_snr(5.0 + 0.1 * k, 11.5, 2.0);
      CHECK(v < prev);
      prev = v;
    }
  }

  TEST_CASE("success_prob") {
    CHECK(success_prob(12345.0, 0.0) == 1.0);
    CHECK(success_prob(0.0, 0.3) == 1.0);
    CHECK(success_prob(10.0, 1.0) == 0.0);
    CHECK(rel_close(success_prob(16000.0, 4e-7), 0.99362043510731452, 1e-14));
    CHECK(rel_close(success_prob(1600.0, 4e-7), 0.99936020462839818, 1e-14));
    CHECK(rel_close(success_prob(32000.0, 4e-7), 0.98728156906284903, 1e-14));
    for (double a : {0.0, 17.0, 1600.0, 40000.0}) {
      for (double b : {3.0, 999.0, 16000.0}) {
        CHECK(rel_close(success_prob(a + b, 3e-6), success_prob(a, 3e-6) * success_prob(b, 3e-6),
                        1e-12));
      }
    }
  }

  TEST_CASE("queue_delay_s") {
    CHECK(queue_delay_s(BufferState(0.0, 1e6), 8e4) == 0.0);
    CHECK(queue_delay_s(BufferState(8e4, 1e6), 8e4) == 1.0);
    CHECK(queue_delay_s(BufferState(4e4, 1e6), 8e4) == 0.5);
  }

  TEST_CASE("buffer_step") {
    const std::int64_t d[] = {4000};
    const double one[] = {1.0};
    const double zero[] = {0.0};
    auto s = buffer_step(BufferState(8e4, 8e6), d, one, 8e4, 1.0);
    CHECK(s.state.depth_bits == 4000.0);

    s = buffer_step(BufferState(8e4, 8e6), d, zero, 8e4, 1.0);
    CHECK(s.state.depth_bits == 8e4);

    const std::int64_t none[] = {0};
    s = buffer_step(BufferState(0.0, 8e6), none, one, 8e4, 1.0);
    CHECK(s.state.depth_bits == 0.0);
    CHECK(s.drained_bits == 0.0);
  }

  TEST_CASE("buffer_step overflow and conservation") {
    const std::int64_t d[] = {700, 900, 50};
    const double x[] = {1.0, 1.0, 0.0};
    const BufferState start(500.0, 1000.0);
    const auto s = buffer_step(start, d, x, 100.0, 1.0);
    CHECK(s.state.depth_bits == 1000.0);
    CHECK(s.overflow_bits > 0.0);
    CHECK(s.state.depth_bits + s.drained_bits + s.overflow_bits ==
          start.depth_bits + s.admitted_bits);
  }

  TEST_CASE("draining never increases the queue delay") {
    const std::int64_t none[] = {0, 0};
    for (double depth : {0.0, 100.0, 8e4, 5e5}) {
      for (double x0 : {0.0, 0.3, 1.0}) {
        const double x[] = {x0, 1.0 - x0};
        const BufferState b(depth, 1e6);
        const auto s = buffer_step(b, none, x, 8e4, 1.0);
        CHECK(queue_delay_s(s.state, 8e4) <= queue_delay_s(b, 8e4));
      }
    }
  }

  TEST_CASE("value types reject out-of-domain arguments") {
    CHECK_THROWS_AS(BufferState(-1.0, 10.0), InvalidArgument);
    CHECK_THROWS_AS(BufferState(11.0, 10.0), InvalidArgument);
    TrafficTrace t(2, 3);
    CHECK_THROWS_AS(t.set(0, 0, -5), InvalidArgument);
    CHECK_THROWS_AS(TrafficTrace({{1, 2}, {3}}), InvalidArgument);
    RadioParams r;
    r.sigma_db = 0.0;
    CHECK_THROWS_AS(r.validate(), InvalidArgument);
    LinkParams l;
    l.rb_budget = -1.0;
    CHECK_THROWS_AS(l.validate(), InvalidArgument);
    SensorSpec s{0, 1.0, 1.5};
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
  }

  TEST_CASE("traffic window pads past the end with zeros") {
    TrafficTrace t({{1, 2, 3}, {4, 5, 6}});
    const TrafficTrace w = t.window(2, 3);
    CHECK(w.steps() == 3);
    CHECK(w.at(0, 0) == 3);
    CHECK(w.at(1, 0) == 6);
    CHECK(w.at(0, 1) == 0);
    CHECK(w.at(1, 2) == 0);
    CHECK(t.total() == 21);
  }
}
