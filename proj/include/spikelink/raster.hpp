#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spikelink/errors.hpp"

namespace spikelink {

// d x T binary spike trains: the universal signal type for sensor streams,
// channel inputs/outputs, and network targets. Stored time-major so that
// column(t) -- all channels at one step -- is contiguous.
class SpikeRaster {
 public:
  SpikeRaster() = default;

  SpikeRaster(int channels, int horizon)
      : channels_(channels), horizon_(horizon) {
    if (channels < 1 || horizon < 1)
      throw ConfigError("SpikeRaster requires channels >= 1 and horizon >= 1");
    bits_.assign(static_cast<std::size_t>(channels) * horizon, 0);
  }

  int channels() const { return channels_; }
  int horizon() const { return horizon_; }

  std::uint8_t at(int channel, int t) const {
    return bits_[static_cast<std::size_t>(t) * channels_ + channel];
  }

  void set(int channel, int t, bool value) {
    bits_[static_cast<std::size_t>(t) * channels_ + channel] = value ? 1 : 0;
  }

  std::span<const std::uint8_t> column(int t) const {
    return {bits_.data() + static_cast<std::size_t>(t) * channels_,
            static_cast<std::size_t>(channels_)};
  }

  std::span<std::uint8_t> column(int t) {
    return {bits_.data() + static_cast<std::size_t>(t) * channels_,
            static_cast<std::size_t>(channels_)};
  }

  std::size_t ones() const {
    std::size_t n = 0;
    for (auto b : bits_) n += b;
    return n;
  }

  double density() const {
    return bits_.empty() ? 0.0 : static_cast<double>(ones()) / bits_.size();
  }

  std::size_t size() const { return bits_.size(); }

  bool operator==(const SpikeRaster&) const = default;

 private:
  int channels_ = 0;
  int horizon_ = 0;
  std::vector<std::uint8_t> bits_;  // [t * channels_ + channel]
};

// Fixture helper: builds a raster from per-channel rows of 0/1 values.
inline SpikeRaster raster_from_rows(
    const std::vector<std::vector<int>>& rows) {
  if (rows.empty() || rows.front().empty())
    throw ConfigError("raster_from_rows needs at least one channel and step");
  SpikeRaster r(static_cast<int>(rows.size()),
                static_cast<int>(rows.front().size()));
  for (int c = 0; c < r.channels(); ++c) {
    if (static_cast<int>(rows[c].size()) != r.horizon())
      throw ConfigError("raster_from_rows: ragged rows");
    for (int t = 0; t < r.horizon(); ++t) r.set(c, t, rows[c][t] != 0);
  }
  return r;
}

}  // namespace spikelink
