#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "spikelink/errors.hpp"
#include "spikelink/rng.hpp"
#include "spikelink/snn/filter.hpp"

namespace spikelink::snn {

inline constexpr double kProbFloor = 1e-12;

// Logistic function, clamped into the open interval so downstream logs stay
// finite. Stable for |a| far beyond 500.
inline double sigmoid(double a) {
  double p;
  if (a >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-a));
  } else {
    const double e = std::exp(a);
    p = e / (1.0 + e);
  }
  return std::clamp(p, kProbFloor, 1.0 - kProbFloor);
}

// Binary cross-entropy -t*log(p) - (1-t)*log(1-p) with the same probability
// guard as sigmoid().
inline double bce_loss(int target, double prob) {
  const double p = std::clamp(prob, kProbFloor, 1.0 - kProbFloor);
  return target ? -std::log(p) : -std::log(1.0 - p);
}

struct NeuronParams {
  std::vector<double> weights;  // aligned with the neuron's source list
  double feedback_weight = 0.0;
  double bias = 0.0;
};

struct Partition {
  std::vector<int> visible;  // read-out neurons, clamped during training
  std::vector<int> hidden;
};

// Network parameters plus wiring. Source indices 0..E-1 are exogenous
// inputs; E+j is the output of neuron j. Neurons with feedback disabled
// have no self-history term in their potential (their feedback weight is a
// dead parameter with zero gradient).
struct NetworkParams {
  int exogenous_count = 0;
  std::vector<std::vector<int>> topology;  // per neuron: its source indices
  Partition partition;
  std::vector<NeuronParams> neurons;
  std::vector<char> feedback_enabled;  // per neuron; empty means all enabled
  SynapticFilter synapse_filter = SynapticFilter::exponential(3.0);
  SynapticFilter feedback_filter = SynapticFilter::exponential(1.0);

  bool has_feedback(int neuron) const {
    return feedback_enabled.empty() || feedback_enabled[neuron];
  }

  int neuron_count() const { return static_cast<int>(neurons.size()); }
  int source_count() const { return exogenous_count + neuron_count(); }
  int visible_count() const { return static_cast<int>(partition.visible.size()); }

  void validate() const;
};

// Dense wiring: every neuron sees all exogenous inputs and all other neurons
// (self-history runs through the feedback filter instead). Visible neurons
// take indices [0, visible) and hidden the rest.
NetworkParams make_dense_network(int exogenous, int hidden, int visible,
                                 SynapticFilter synapse_filter =
                                     SynapticFilter::exponential(3.0),
                                 SynapticFilter feedback_filter =
                                     SynapticFilter::exponential(1.0));

// Feedforward wiring: exogenous inputs fan in to `outputs` neurons, all
// visible, with no lateral connections. The encoder-side layout.
NetworkParams make_feedforward_network(int exogenous, int outputs,
                                       SynapticFilter synapse_filter =
                                           SynapticFilter::exponential(3.0),
                                       SynapticFilter feedback_filter =
                                           SynapticFilter::exponential(1.0));

// Classifier wiring: hidden neurons are driven by the exogenous inputs and
// recurrently by each other; read-out neurons see the exogenous inputs and
// the hidden layer, with no self-history and no read-out re-entry anywhere.
// Rate targets are class-conditionally independent across steps, so any
// route from a clamped read-out row back into a potential lets training
// saturate the loss without consulting the input; this wiring removes every
// such route.
NetworkParams make_classifier_network(int exogenous, int hidden, int visible,
                                      SynapticFilter synapse_filter =
                                          SynapticFilter::exponential(3.0),
                                      SynapticFilter feedback_filter =
                                          SynapticFilter::exponential(1.0));

// Uniform [-range, range] weights, fixed bias, one sub-seed per neuron.
void init_params(NetworkParams& params, std::uint64_t seed,
                 double weight_range = 0.1, double bias_init = 0.0);

struct NetworkState {
  TraceBank synaptic;  // over exogenous + neuron sources
  TraceBank feedback;  // each neuron's own spike history
  std::vector<double> potentials;
  std::vector<std::uint8_t> last_spikes;
  long clock = 0;

  void reset() {
    synaptic.reset();
    feedback.reset();
    std::fill(potentials.begin(), potentials.end(), 0.0);
    std::fill(last_spikes.begin(), last_spikes.end(), 0);
    clock = 0;
  }
};

// u_i = sum_k w_{i,k} * trace_k + w_fb * feedback_trace_i + bias.
double membrane_potential(const NetworkParams& params,
                          const NetworkState& state, int neuron);

struct StepResult {
  std::vector<std::uint8_t> spikes;    // per neuron
  std::vector<double> visible_losses;  // per visible neuron; clamped steps only
};

// GLM spiking network: each neuron fires Bernoulli(sigmoid(u_i)). Single
// writer; all randomness comes through the caller's stream.
class GlmNetwork {
 public:
  explicit GlmNetwork(NetworkParams params);

  const NetworkParams& params() const { return params_; }
  NetworkParams& params() { return params_; }
  const NetworkState& state() const { return state_; }

  void reset_state() { state_.reset(); }

  // Fill state potentials from the current traces (clock's step).
  void compute_potentials();

  // Sample every neuron from its potential. Clamped visible neurons emit
  // clamp[v] instead and report the step loss l(clamp[v], sigmoid(u)).
  // Every neuron consumes exactly one uniform draw, clamped or not, so
  // streams stay aligned between clamped and free runs.
  StepResult sample(const std::uint8_t* clamp, RngStream& rng);

  // Feed the executed step's spikes into the trace state. `exogenous` is the
  // input column for the step that just ran.
  void advance(std::span<const std::uint8_t> exogenous,
               std::span<const std::uint8_t> spikes);

  // compute_potentials + sample + advance.
  StepResult step(std::span<const std::uint8_t> exogenous,
                  const std::uint8_t* clamp, RngStream& rng);

 private:
  NetworkParams params_;
  NetworkState state_;
  std::vector<std::uint8_t> scratch_sources_;
};

// Raw per-step three-factor pieces for the step just sampled (call before
// advance). errors[i] = (s*_i - sigmoid(u_i)) with s* the clamp target for
// clamped visibles and the emitted spike otherwise. Multiply by the stored
// traces to get the synaptic/feedback/bias terms; the hidden-neuron error
// signal is applied by the caller.
struct StepTerms {
  std::vector<double> errors;
  std::vector<double> source_traces;
  std::vector<double> feedback_traces;

  double synaptic(const NetworkParams& p, int neuron, int slot) const {
    return errors[neuron] * source_traces[p.topology[neuron][slot]];
  }
  double feedback(int neuron) const {
    return errors[neuron] * feedback_traces[neuron];
  }
  double bias(int neuron) const { return errors[neuron]; }
};

StepTerms gradient_terms(const GlmNetwork& net,
                         std::span<const std::uint8_t> spikes,
                         const std::uint8_t* visible_targets);

}  // namespace spikelink::snn
