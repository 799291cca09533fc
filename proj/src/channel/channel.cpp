#include "spikelink/channel/channel.hpp"

namespace spikelink::channel {

double measured_snr(const SpikeRaster& x, double sigma) {
  if (x.size() == 0) throw ConfigError("measured_snr: empty raster");
  if (sigma <= 0.0) throw ConfigError("measured_snr: sigma must be > 0");
  const std::size_t ones = x.ones();
  if (ones == 0) return 0.0;
  const double density = static_cast<double>(ones) / x.size();
  return density / (sigma * sigma);
}

double calibrate_sigma(double density, double target_snr_db) {
  if (density <= 0.0)
    throw ConfigError("calibrate_sigma: spike density must be > 0");
  return std::sqrt(density / db_to_linear(target_snr_db));
}

void transmit_step(std::span<const std::uint8_t> x, std::span<std::uint8_t> y,
                   const ChannelConfig& config, RngStream& rng) {
  if (static_cast<int>(x.size()) != config.parallel_lanes)
    throw ConfigError("transmit_step: lane count mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double amplitude = x[i] + config.noise_sigma * rng.normal();
    y[i] = amplitude > config.threshold ? 1 : 0;
  }
}

SpikeRaster transmit(const SpikeRaster& x, const ChannelConfig& config,
                     RngStream& rng) {
  config.validate();
  if (x.channels() != config.parallel_lanes)
    throw ConfigError("transmit: raster lanes do not match channel config");
  SpikeRaster y(x.channels(), x.horizon());
  for (int t = 0; t < x.horizon(); ++t)
    transmit_step(x.column(t), y.column(t), config, rng);
  return y;
}

SpikeRaster uncoded_link(const SpikeRaster& o, const ChannelConfig& config,
                         RngStream& rng) {
  ChannelConfig c = config;
  c.parallel_lanes = o.channels();  // d_x = d_o
  return transmit(o, c, rng);
}

}  // namespace spikelink::channel
