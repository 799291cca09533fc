#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "spikelink/raster.hpp"
#include "spikelink/rng.hpp"

namespace spikelink::data {

struct LabeledSpikeSet {
  std::vector<SpikeRaster> rasters;
  std::vector<int> labels;
  int channels = 0;
  int horizon = 0;
  int class_count = 0;

  std::size_t size() const { return rasters.size(); }
  void add(SpikeRaster raster, int label);
  void validate() const;
};

// Synthetic two-class stand-in for event-camera recordings: each class owns
// a fixed prototype set of active channels; examples fire Bernoulli spikes
// on them and are lightly corrupted.
struct SyntheticSpec {
  int channels = 64;
  int horizon = 40;
  int class_count = 2;
  int count = 200;
  double pattern_density = 0.2;   // fraction of channels active per class
  double active_rate = 0.5;       // spike rate on active channels
  double background_rate = 0.02;  // spike rate elsewhere
  double noise_flip = 0.05;       // per-bit flip probability
  std::uint64_t seed = 1;
  // Examples are numbered (offset .. offset+count); the class prototypes
  // depend on the seed alone, so a held-out file drawn with the same seed
  // and a disjoint offset range shares the task but not the examples.
  std::uint64_t example_offset = 0;

  void validate() const;
};

// Deterministic per seed; classes are interleaved so any prefix stays
// balanced to within one example.
LabeledSpikeSet generate_synthetic(const SyntheticSpec& spec);

// SPKT v1 container: 16-byte header ("SPKT", u32le channels, u32le horizon,
// u32le example count), then per example one label byte followed by
// ceil(d*T/8) channel-major packed bits, most significant bit first.
// Unlabeled files (no label bytes) are recognized by their exact size and
// load with label 0.
void save_spkt(const LabeledSpikeSet& set, const std::string& path);
LabeledSpikeSet load_spkt(const std::string& path, int expected_class_count = 0);

// Hand-written fixture format: one CSV row of 0/1 entries per channel.
SpikeRaster load_raster_csv(std::istream& in);

// Non-IID split: device_of_class[c] names the device holding every example
// of class c. The shards partition the input set.
std::vector<LabeledSpikeSet> federated_split(
    const LabeledSpikeSet& set, const std::vector<int>& device_of_class,
    int device_count);

// Read-out target for a labeled example: rate-encoded label over
// `visible_count` target channels (defaults 0.9 on the class row, 0.01 off).
SpikeRaster to_fl_target(int label, int visible_count, int horizon,
                         RngStream& rng);

inline constexpr double kTargetHighRate = 0.9;
inline constexpr double kTargetLowRate = 0.01;

}  // namespace spikelink::data
