#include <cmath>

#include "doctest.h"
#include "spikelink/channel/channel.hpp"

using namespace spikelink;
using namespace spikelink::channel;

namespace {

SpikeRaster raster_with_density(int channels, int horizon, double density) {
  SpikeRaster r(channels, horizon);
  const long want = std::lround(density * channels * horizon);
  long placed = 0;
  for (int c = 0; c < channels && placed < want; ++c)
    for (int t = 0; t < horizon && placed < want; ++t) {
      r.set(c, t, true);
      ++placed;
    }
  return r;
}

}  // namespace

TEST_SUITE_BEGIN("channel");

TEST_CASE("measured_snr: direct substitution") {
  SpikeRaster r = raster_with_density(10, 40, 0.25);
  CHECK(measured_snr(r, 0.5) == doctest::Approx(1.0).epsilon(1e-12));  // 0 dB
  CHECK(linear_to_db(measured_snr(r, 0.5)) == doctest::Approx(0.0));

  SpikeRaster ones = raster_with_density(4, 4, 1.0);
  CHECK(measured_snr(ones, 1.0) == doctest::Approx(1.0));

  SpikeRaster zeros(4, 4);
  CHECK(measured_snr(zeros, 1.0) == 0.0);

  // sigma^2 for -8 dB at density 0.25
  const double sigma = calibrate_sigma(0.25, -8.0);
  CHECK(sigma * sigma == doctest::Approx(1.5774).epsilon(1e-3));
  CHECK(measured_snr(r, sigma) ==
        doctest::Approx(db_to_linear(-8.0)).epsilon(1e-12));
}

TEST_CASE("calibrate_sigma: unit case and reference values") {
  CHECK(calibrate_sigma(1.0, 0.0) == doctest::Approx(1.0));
  CHECK(calibrate_sigma(0.25, 0.0) == doctest::Approx(0.5));
  CHECK(calibrate_sigma(0.25, -6.0) == doctest::Approx(0.99763).epsilon(1e-4));
  CHECK_THROWS_AS(calibrate_sigma(0.0, 0.0), ConfigError);

  // round trip at 1e-9 relative accuracy
  for (double snr_db : {-12.0, -6.0, 0.0, 6.0}) {
    SpikeRaster r = raster_with_density(25, 40, 0.3);
    const double sigma = calibrate_sigma(r.density(), snr_db);
    const double lin = measured_snr(r, sigma);
    CHECK(std::abs(lin - db_to_linear(snr_db)) <=
          1e-9 * db_to_linear(snr_db));
  }
}

TEST_CASE("transmit: noiseless limit is the identity") {
  RngStream seed_rng(2);
  SpikeRaster x(8, 50);
  for (int c = 0; c < 8; ++c)
    for (int t = 0; t < 50; ++t) x.set(c, t, seed_rng.bernoulli(0.4));
  ChannelConfig cfg;
  cfg.noise_sigma = 1e-9;
  cfg.parallel_lanes = 8;
  RngStream rng(3);
  CHECK(transmit(x, cfg, rng) == x);
}

TEST_CASE("transmit: empirical flip rates match the gaussian tail") {
  ChannelConfig cfg;
  cfg.noise_sigma = 0.5;
  cfg.parallel_lanes = 100;
  const double q1 = q_function(1.0);
  CHECK(q1 == doctest::Approx(0.15865525393).epsilon(1e-9));

  SpikeRaster zeros(100, 5000);
  SpikeRaster ones = raster_with_density(100, 5000, 1.0);
  RngStream rng(17);
  const SpikeRaster y0 = transmit(zeros, cfg, rng);
  const SpikeRaster y1 = transmit(ones, cfg, rng);
  const double n = 100.0 * 5000.0;
  const double rate01 = static_cast<double>(y0.ones()) / n;
  const double rate10 = 1.0 - static_cast<double>(y1.ones()) / n;
  const double sigma3 = 3.0 * std::sqrt(q1 * (1 - q1) / n);
  CHECK(std::abs(rate01 - q1) < std::max(0.002, sigma3));
  CHECK(std::abs(rate10 - q1) < std::max(0.002, sigma3));
}

TEST_CASE("transmit: symmetric flips at threshold 0.5") {
  CHECK(flip_probability(0, 0.7, 0.5) ==
        doctest::Approx(flip_probability(1, 0.7, 0.5)));
  CHECK(flip_probability(0, 0.25, 0.5) == doctest::Approx(q_function(2.0)));
}

TEST_CASE("transmit: distortion is monotone in sigma under matched seeds") {
  RngStream data_rng(5);
  SpikeRaster x(16, 200);
  for (int c = 0; c < 16; ++c)
    for (int t = 0; t < 200; ++t) x.set(c, t, data_rng.bernoulli(0.3));
  long prev = -1;
  for (double sigma : {0.1, 0.2, 0.4, 0.8, 1.6}) {
    ChannelConfig cfg;
    cfg.noise_sigma = sigma;
    cfg.parallel_lanes = 16;
    RngStream rng(99);  // matched noise realization
    const SpikeRaster y = transmit(x, cfg, rng);
    long hamming = 0;
    for (int c = 0; c < 16; ++c)
      for (int t = 0; t < 200; ++t) hamming += x.at(c, t) != y.at(c, t);
    CHECK(hamming >= prev);
    prev = hamming;
  }
}

TEST_CASE("transmit: memoryless, one input bit flips at most its own output") {
  RngStream data_rng(6);
  SpikeRaster x(4, 20);
  for (int c = 0; c < 4; ++c)
    for (int t = 0; t < 20; ++t) x.set(c, t, data_rng.bernoulli(0.5));
  ChannelConfig cfg;
  cfg.noise_sigma = 0.5;
  cfg.parallel_lanes = 4;
  RngStream rng_a(42), rng_b(42);
  SpikeRaster x2 = x;
  x2.set(2, 7, !x2.at(2, 7));
  const SpikeRaster ya = transmit(x, cfg, rng_a);
  const SpikeRaster yb = transmit(x2, cfg, rng_b);
  for (int c = 0; c < 4; ++c)
    for (int t = 0; t < 20; ++t)
      if (c != 2 || t != 7) CHECK(ya.at(c, t) == yb.at(c, t));
}

TEST_CASE("transmit: deterministic under a fixed seed") {
  SpikeRaster x = raster_with_density(8, 30, 0.4);
  ChannelConfig cfg;
  cfg.noise_sigma = 0.8;
  cfg.parallel_lanes = 8;
  RngStream a(7), b(7);
  CHECK(transmit(x, cfg, a) == transmit(x, cfg, b));
}

TEST_CASE("uncoded_link: rate 1 delegation") {
  RngStream data_rng(8);
  SpikeRaster o(12, 25);
  for (int c = 0; c < 12; ++c)
    for (int t = 0; t < 25; ++t) o.set(c, t, data_rng.bernoulli(0.2));
  ChannelConfig cfg;
  cfg.noise_sigma = 0.5;
  cfg.parallel_lanes = 1;  // uncoded_link adapts lanes to the raster
  RngStream a(13), b(13);
  const SpikeRaster y = uncoded_link(o, cfg, a);
  CHECK(y.channels() == o.channels());  // r = 1
  cfg.parallel_lanes = 12;
  CHECK(y == transmit(o, cfg, b));

  cfg.noise_sigma = 1e-9;
  RngStream c(14);
  CHECK(uncoded_link(o, cfg, c) == o);
}

TEST_SUITE_END();
