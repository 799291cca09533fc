#pragma once

#include <cstdint>
#include <string>

#include "spikelink/jscc/pipeline.hpp"

namespace spikelink::jscc {

// Versioned parameter container: "NJSC", one version byte, then the
// little-endian float64 parameters of encoder and decoder in declared
// topology order (per neuron: synaptic weights, feedback weight, bias).
// A line-text manifest sidecar at <path>.manifest records the config, the
// channel settings, and the seeds needed to rebuild the wiring.
void save_pipeline(const Pipeline& pipeline, const std::string& path,
                   std::uint64_t seed);

Pipeline load_pipeline(const std::string& path);

}  // namespace spikelink::jscc
