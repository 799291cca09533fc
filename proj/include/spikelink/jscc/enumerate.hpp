#pragma once

#include "spikelink/jscc/pipeline.hpp"

namespace spikelink::jscc {

// Exact value of the end-to-end bound
//   E[ sum_t sum_{i in V} l(v_it, sigmoid(u_it)) ]
// by enumerating every configuration of encoder spikes, channel outputs,
// and decoder hidden spikes, using the analytic per-bit flip probabilities
// for the channel term. Test oracle; refuses when the per-run stochastic
// bit count (d_x + |H^E| + d_y + |H^D|) * T exceeds 18.
double enumerate_pipeline_bound(const Pipeline& pipeline, const SpikeRaster& o,
                                const SpikeRaster& v_target);

}  // namespace spikelink::jscc
