#pragma once

#include <cstdint>
#include <vector>

#include "spikelink/snn/network.hpp"

namespace spikelink::snn {

// Parameter-shaped accumulator (synaptic weights, feedback weight, bias per
// neuron).
struct ParamDelta {
  struct PerNeuron {
    std::vector<double> weights;
    double feedback = 0.0;
    double bias = 0.0;
  };
  std::vector<PerNeuron> neurons;

  static ParamDelta zeros_like(const NetworkParams& params);
  void clear();
  void add_scaled(const ParamDelta& other, double scale);
  double max_abs() const;
};

// params += scale * delta.
void apply_delta(NetworkParams& params, const ParamDelta& delta, double scale);

struct LearnerOptions {
  // Encoder mode: every neuron, read-out included, takes the error-signal
  // rule (the channel-facing outputs are latent from the decoder's view).
  bool all_error_driven = false;
  // Moving-average baseline subtracted from the error signal. Off by
  // default; the plain rule is the reference behaviour. The baseline is
  // frozen for the duration of an example and updated from the example's
  // mean error at its end, which keeps the subtracted term independent of
  // the within-example scores (a baseline tracking the running error inside
  // the example would correlate with the eligibility and bias the update).
  bool use_baseline = false;
  double baseline_rho = 0.2;
};

// Accumulates the per-step three-factor updates for one network.
//
// Visible (clamped read-out) neurons take the direct term
//   (target_i,t - sigmoid(u_i,t)) * trace,
// which summed over an interval is the exact descent direction of the
// clamped loss. Error-driven neurons take
//   -(e_t - b) * c_{i,t-1},
// where e_t is the summed read-out loss at step t, b the optional baseline,
// and c the per-parameter score accumulated since the start of the example:
//   c_{i,t} = sum_{tau<=t} (s_i,tau - sigmoid(u_i,tau)) * trace_tau.
// Pairing each e_t with the *strictly earlier* cumulative score makes the
// summed update an unbiased estimate of the negative gradient of the
// marginal-loss bound; the same-step product has zero conditional mean and
// would only add variance.
class OnlineLearner {
 public:
  explicit OnlineLearner(const NetworkParams& shape, LearnerOptions opt = {});

  // Clears the eligibility scores (call at example boundaries).
  void begin_example();

  // Record one executed step. Call after GlmNetwork::sample and before
  // advance so the traces still belong to the step. `clamp` is the target
  // column given to sample (may be null in all_error_driven mode);
  // `error_signal` is e_t.
  void observe(const GlmNetwork& net, const StepResult& step,
               const std::uint8_t* clamp, double error_signal);

  // Apply the pending window to the parameters and clear it. Eligibility is
  // kept; it spans update windows within an example.
  void apply(NetworkParams& params, double learning_rate);

  const ParamDelta& pending() const { return window_; }
  const ParamDelta& eligibility() const { return eligibility_; }
  void clear_window() { window_.clear(); }
  double baseline() const { return baseline_; }

 private:
  LearnerOptions opt_;
  ParamDelta window_;
  ParamDelta eligibility_;
  std::vector<char> error_driven_;  // per neuron
  double baseline_ = 0.0;
  bool baseline_primed_ = false;
  double example_error_sum_ = 0.0;
  long example_steps_ = 0;
};

}  // namespace spikelink::snn
