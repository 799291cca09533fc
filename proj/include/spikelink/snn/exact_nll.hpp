#pragma once

#include <cstdint>

#include "spikelink/raster.hpp"
#include "spikelink/snn/network.hpp"

namespace spikelink::snn {

// Exact negative log-likelihood -log p(target | exogenous) by enumerating
// every hidden spike pattern. Test oracle; refuses when |H| * T > 16.
double exact_nll_oracle(const NetworkParams& params,
                        const SpikeRaster& exogenous,
                        const SpikeRaster& target);

// Exact value of the marginal-loss bound
//   E_{p(h || x)} [ sum_t sum_{i in X} l(x_it, sigmoid(u_it)) ]
// by the same enumeration. Same |H| * T <= 16 limit.
double enumerate_network_bound(const NetworkParams& params,
                               const SpikeRaster& exogenous,
                               const SpikeRaster& target);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// Monte-Carlo estimate of the bound: clamped forward passes, averaging the
// summed read-out loss.
McEstimate mc_bound_estimate(const NetworkParams& params,
                             const SpikeRaster& exogenous,
                             const SpikeRaster& target, int samples,
                             std::uint64_t seed);

// Monte-Carlo estimate of the likelihood E_{p(h||x)}[p(x||h)] from the same
// sampling scheme; exp(-exact_nll_oracle) in expectation.
McEstimate mc_likelihood_estimate(const NetworkParams& params,
                                  const SpikeRaster& exogenous,
                                  const SpikeRaster& target, int samples,
                                  std::uint64_t seed);

}  // namespace spikelink::snn
