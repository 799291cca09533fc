#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spikelink/errors.hpp"

namespace spikelink::snn {

// Causal synaptic response kernel a_1..a_K. The trace of a spike train s at
// step t is sum_{tau=1..K} a_tau * s_{t-tau}: a spike never contributes to
// potentials at its own step.
class SynapticFilter {
 public:
  // a_k = exp(-(k-1)/tau), truncated at `taps` terms. Geometric taps admit
  // an O(1) recursive trace update.
  static SynapticFilter exponential(double tau, int taps = 10) {
    if (tau <= 0.0 || taps < 1)
      throw ConfigError("exponential filter needs tau > 0 and taps >= 1");
    SynapticFilter f;
    const double lambda = std::exp(-1.0 / tau);
    f.taps_.resize(taps);
    double a = 1.0;
    for (int k = 0; k < taps; ++k, a *= lambda) f.taps_[k] = a;
    f.decay_ = lambda;
    return f;
  }

  static SynapticFilter from_taps(std::vector<double> taps) {
    if (taps.empty()) throw ConfigError("filter needs at least one tap");
    for (double a : taps)
      if (!std::isfinite(a)) throw ConfigError("filter taps must be finite");
    SynapticFilter f;
    f.taps_ = std::move(taps);
    return f;
  }

  const std::vector<double>& taps() const { return taps_; }
  int length() const { return static_cast<int>(taps_.size()); }
  std::optional<double> decay() const { return decay_; }

 private:
  std::vector<double> taps_;
  std::optional<double> decay_;
};

// Trace state for a bank of spike sources sharing one filter. Keeps the last
// K steps of spikes in a ring so the truncated-kernel convolution is exact;
// geometric kernels advance in O(1) per source with a drop-off correction.
class TraceBank {
 public:
  TraceBank() = default;

  TraceBank(SynapticFilter filter, int sources)
      : filter_(std::move(filter)), sources_(sources) {
    if (sources < 0) throw ConfigError("TraceBank needs sources >= 0");
    trace_.assign(sources_, 0.0);
    history_.assign(static_cast<std::size_t>(filter_.length()) * sources_, 0);
    slot_ = 0;
  }

  void reset() {
    std::fill(trace_.begin(), trace_.end(), 0.0);
    std::fill(history_.begin(), history_.end(), 0);
    slot_ = 0;
  }

  // Push the spikes of the step just executed; value() afterwards returns the
  // trace seen by the next step.
  void advance(std::span<const std::uint8_t> spikes) {
    if (static_cast<int>(spikes.size()) != sources_)
      throw ConfigError("TraceBank::advance: spike vector size mismatch");
    if (sources_ == 0) return;
    const auto& taps = filter_.taps();
    const int k = filter_.length();
    std::uint8_t* oldest = &history_[static_cast<std::size_t>(slot_) * sources_];
    if (filter_.decay()) {
      const double lambda = *filter_.decay();
      const double drop = taps[k - 1] * lambda;  // weight falling off the kernel
      for (int i = 0; i < sources_; ++i)
        trace_[i] = lambda * trace_[i] + taps[0] * spikes[i] - drop * oldest[i];
      std::copy(spikes.begin(), spikes.end(), oldest);
      slot_ = (slot_ + 1) % k;
    } else {
      std::copy(spikes.begin(), spikes.end(), oldest);
      slot_ = (slot_ + 1) % k;
      std::fill(trace_.begin(), trace_.end(), 0.0);
      for (int age = 0; age < k; ++age) {
        const int row = (slot_ - 1 - age + k + k) % k;
        const std::uint8_t* s =
            &history_[static_cast<std::size_t>(row) * sources_];
        const double a = taps[age];
        for (int i = 0; i < sources_; ++i) trace_[i] += a * s[i];
      }
    }
  }

  double value(int source) const { return trace_[source]; }
  std::span<const double> values() const { return trace_; }
  int sources() const { return sources_; }
  const SynapticFilter& filter() const { return filter_; }

 private:
  SynapticFilter filter_ = SynapticFilter::exponential(3.0);
  int sources_ = 0;
  std::vector<double> trace_;
  std::vector<std::uint8_t> history_;  // K x sources ring, slot-major
  int slot_ = 0;
};

// Reference trace: direct convolution of the truncated kernel with a full
// spike history. Test oracle for TraceBank.
inline double convolve_trace(const SynapticFilter& filter,
                             std::span<const std::uint8_t> history, int t) {
  // history[i] is the spike at step i+1; trace is evaluated at step t.
  double acc = 0.0;
  const auto& taps = filter.taps();
  for (int tau = 1; tau <= filter.length(); ++tau) {
    const int step = t - tau;  // spike at this step index (1-based)
    if (step >= 1 && step <= static_cast<int>(history.size()))
      acc += taps[tau - 1] * history[step - 1];
  }
  return acc;
}

}  // namespace spikelink::snn
