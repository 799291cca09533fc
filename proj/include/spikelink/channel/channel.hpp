#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "spikelink/errors.hpp"
#include "spikelink/raster.hpp"
#include "spikelink/rng.hpp"

namespace spikelink::channel {

// Gaussian tail probability P(N(0,1) > z).
inline double q_function(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

// Memoryless binary-input channel: per-lane OOK with additive Gaussian noise
// and a hard threshold back to bits.
struct ChannelConfig {
  double snr_db = 0.0;
  double noise_sigma = 1.0;
  double threshold = 0.5;
  int parallel_lanes = 1;

  void validate() const {
    if (noise_sigma <= 0.0) throw ConfigError("channel noise sigma must be > 0");
    if (threshold <= 0.0 || threshold >= 1.0)
      throw ConfigError("channel threshold must lie in (0,1)");
    if (parallel_lanes < 1) throw ConfigError("channel needs >= 1 lane");
  }
};

// Per-symbol SNR of a transmitted raster: (ones / (d*T)) / sigma^2, as a
// linear ratio. All-zero rasters report 0 (no signal power).
double measured_snr(const SpikeRaster& x, double sigma);

// Noise level that puts a raster of the given spike density at the target
// per-symbol SNR: sigma = sqrt(density / 10^(snr_db/10)).
double calibrate_sigma(double density, double target_snr_db);

// Probability that a transmitted bit value flips under (sigma, threshold).
inline double flip_probability(int bit, double sigma, double threshold) {
  return bit ? q_function((1.0 - threshold) / sigma)
             : q_function(threshold / sigma);
}

// One lane column through the channel: y = 1 iff x + n > threshold.
void transmit_step(std::span<const std::uint8_t> x, std::span<std::uint8_t> y,
                   const ChannelConfig& config, RngStream& rng);

SpikeRaster transmit(const SpikeRaster& x, const ChannelConfig& config,
                     RngStream& rng);

// OOK pass-through of the raw sensor raster (rate r = 1, d_x = d_o).
SpikeRaster uncoded_link(const SpikeRaster& o, const ChannelConfig& config,
                         RngStream& rng);

}  // namespace spikelink::channel
