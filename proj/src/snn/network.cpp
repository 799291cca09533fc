#include "spikelink/snn/network.hpp"

#include <numeric>

namespace spikelink::snn {

void NetworkParams::validate() const {
  const int n = neuron_count();
  if (n < 1) throw ConfigError("network needs at least one neuron");
  if (exogenous_count < 0) throw ConfigError("negative exogenous count");
  if (static_cast<int>(topology.size()) != n)
    throw ConfigError("topology size does not match neuron count");
  std::vector<int> seen(n, 0);
  for (int i : partition.visible) {
    if (i < 0 || i >= n) throw ConfigError("partition index out of range");
    ++seen[i];
  }
  for (int i : partition.hidden) {
    if (i < 0 || i >= n) throw ConfigError("partition index out of range");
    ++seen[i];
  }
  for (int c : seen)
    if (c != 1) throw ConfigError("partition must cover each neuron exactly once");
  if (!feedback_enabled.empty() &&
      static_cast<int>(feedback_enabled.size()) != n)
    throw ConfigError("feedback_enabled size does not match neuron count");
  for (int i = 0; i < n; ++i) {
    if (neurons[i].weights.size() != topology[i].size())
      throw ConfigError("weight vector does not match source list");
    for (int src : topology[i])
      if (src < 0 || src >= source_count())
        throw ConfigError("topology references an unknown source");
    if (!std::isfinite(neurons[i].bias) ||
        !std::isfinite(neurons[i].feedback_weight))
      throw ConfigError("non-finite neuron parameter");
    for (double w : neurons[i].weights)
      if (!std::isfinite(w)) throw ConfigError("non-finite synaptic weight");
  }
}

NetworkParams make_dense_network(int exogenous, int hidden, int visible,
                                 SynapticFilter synapse_filter,
                                 SynapticFilter feedback_filter) {
  if (visible < 1) throw ConfigError("dense network needs >= 1 visible neuron");
  if (hidden < 0 || exogenous < 0) throw ConfigError("negative layer size");
  NetworkParams p;
  p.exogenous_count = exogenous;
  const int n = hidden + visible;
  p.topology.resize(n);
  p.neurons.resize(n);
  for (int i = 0; i < n; ++i) {
    auto& sources = p.topology[i];
    for (int e = 0; e < exogenous; ++e) sources.push_back(e);
    for (int j = 0; j < n; ++j)
      if (j != i) sources.push_back(exogenous + j);
    p.neurons[i].weights.assign(sources.size(), 0.0);
  }
  for (int i = 0; i < visible; ++i) p.partition.visible.push_back(i);
  for (int i = visible; i < n; ++i) p.partition.hidden.push_back(i);
  p.synapse_filter = std::move(synapse_filter);
  p.feedback_filter = std::move(feedback_filter);
  p.validate();
  return p;
}

NetworkParams make_classifier_network(int exogenous, int hidden, int visible,
                                      SynapticFilter synapse_filter,
                                      SynapticFilter feedback_filter) {
  if (visible < 1) throw ConfigError("classifier needs >= 1 read-out neuron");
  if (hidden < 0 || exogenous < 1) throw ConfigError("bad classifier shape");
  NetworkParams p;
  p.exogenous_count = exogenous;
  const int n = hidden + visible;
  p.topology.resize(n);
  p.neurons.resize(n);
  p.feedback_enabled.assign(n, 0);
  // read-outs first (indices [0, visible)), hidden after
  for (int i = 0; i < n; ++i) {
    auto& sources = p.topology[i];
    for (int e = 0; e < exogenous; ++e) sources.push_back(e);
    for (int h = 0; h < hidden; ++h) {
      const int j = visible + h;
      if (j != i) sources.push_back(exogenous + j);
    }
    p.feedback_enabled[i] = i >= visible;  // hidden only
    p.neurons[i].weights.assign(sources.size(), 0.0);
  }
  for (int i = 0; i < visible; ++i) p.partition.visible.push_back(i);
  for (int i = visible; i < n; ++i) p.partition.hidden.push_back(i);
  p.synapse_filter = std::move(synapse_filter);
  p.feedback_filter = std::move(feedback_filter);
  p.validate();
  return p;
}

NetworkParams make_feedforward_network(int exogenous, int outputs,
                                       SynapticFilter synapse_filter,
                                       SynapticFilter feedback_filter) {
  if (outputs < 1) throw ConfigError("feedforward network needs >= 1 output");
  if (exogenous < 1) throw ConfigError("feedforward network needs inputs");
  NetworkParams p;
  p.exogenous_count = exogenous;
  p.topology.resize(outputs);
  p.neurons.resize(outputs);
  for (int i = 0; i < outputs; ++i) {
    for (int e = 0; e < exogenous; ++e) p.topology[i].push_back(e);
    p.neurons[i].weights.assign(p.topology[i].size(), 0.0);
    p.partition.visible.push_back(i);
  }
  p.synapse_filter = std::move(synapse_filter);
  p.feedback_filter = std::move(feedback_filter);
  p.validate();
  return p;
}

void init_params(NetworkParams& params, std::uint64_t seed,
                 double weight_range, double bias_init) {
  for (int i = 0; i < params.neuron_count(); ++i) {
    RngStream rng(derive_seed(seed, seed_tags::neuron_init,
                              static_cast<std::uint64_t>(i)));
    auto& n = params.neurons[i];
    for (double& w : n.weights)
      w = (2.0 * rng.uniform() - 1.0) * weight_range;
    n.feedback_weight =
        params.has_feedback(i) ? (2.0 * rng.uniform() - 1.0) * weight_range
                               : 0.0;
    n.bias = bias_init;
  }
}

double membrane_potential(const NetworkParams& params,
                          const NetworkState& state, int neuron) {
  const auto& sources = params.topology[neuron];
  const auto& weights = params.neurons[neuron].weights;
  double u = params.neurons[neuron].bias;
  if (params.has_feedback(neuron))
    u += params.neurons[neuron].feedback_weight * state.feedback.value(neuron);
  for (std::size_t k = 0; k < sources.size(); ++k)
    u += weights[k] * state.synaptic.value(sources[k]);
  return u;
}

GlmNetwork::GlmNetwork(NetworkParams params) : params_(std::move(params)) {
  params_.validate();
  state_.synaptic = TraceBank(params_.synapse_filter, params_.source_count());
  state_.feedback = TraceBank(params_.feedback_filter, params_.neuron_count());
  state_.potentials.assign(params_.neuron_count(), 0.0);
  state_.last_spikes.assign(params_.neuron_count(), 0);
  scratch_sources_.assign(params_.source_count(), 0);
}

void GlmNetwork::compute_potentials() {
  for (int i = 0; i < params_.neuron_count(); ++i)
    state_.potentials[i] = membrane_potential(params_, state_, i);
}

StepResult GlmNetwork::sample(const std::uint8_t* clamp, RngStream& rng) {
  const int n = params_.neuron_count();
  StepResult result;
  result.spikes.resize(n);
  for (int i = 0; i < n; ++i) {
    const double draw = rng.uniform();
    result.spikes[i] = draw < sigmoid(state_.potentials[i]) ? 1 : 0;
  }
  if (clamp != nullptr) {
    result.visible_losses.resize(params_.visible_count());
    for (int v = 0; v < params_.visible_count(); ++v) {
      const int i = params_.partition.visible[v];
      result.spikes[i] = clamp[v] ? 1 : 0;
      result.visible_losses[v] =
          bce_loss(clamp[v], sigmoid(state_.potentials[i]));
    }
  }
  state_.last_spikes = result.spikes;
  return result;
}

void GlmNetwork::advance(std::span<const std::uint8_t> exogenous,
                         std::span<const std::uint8_t> spikes) {
  if (static_cast<int>(exogenous.size()) != params_.exogenous_count)
    throw ConfigError("exogenous input size does not match network");
  if (static_cast<int>(spikes.size()) != params_.neuron_count())
    throw ConfigError("spike vector size does not match network");
  std::copy(exogenous.begin(), exogenous.end(), scratch_sources_.begin());
  std::copy(spikes.begin(), spikes.end(),
            scratch_sources_.begin() + params_.exogenous_count);
  state_.synaptic.advance(scratch_sources_);
  state_.feedback.advance(spikes);
  ++state_.clock;
}

StepResult GlmNetwork::step(std::span<const std::uint8_t> exogenous,
                            const std::uint8_t* clamp, RngStream& rng) {
  compute_potentials();
  StepResult result = sample(clamp, rng);
  advance(exogenous, result.spikes);
  return result;
}

StepTerms gradient_terms(const GlmNetwork& net,
                         std::span<const std::uint8_t> spikes,
                         const std::uint8_t* visible_targets) {
  const auto& params = net.params();
  const auto& state = net.state();
  StepTerms terms;
  terms.errors.resize(params.neuron_count());
  for (int i = 0; i < params.neuron_count(); ++i)
    terms.errors[i] = spikes[i] - sigmoid(state.potentials[i]);
  if (visible_targets != nullptr) {
    for (int v = 0; v < params.visible_count(); ++v) {
      const int i = params.partition.visible[v];
      terms.errors[i] =
          visible_targets[v] - sigmoid(state.potentials[i]);
    }
  }
  terms.source_traces.assign(state.synaptic.values().begin(),
                             state.synaptic.values().end());
  terms.feedback_traces.assign(state.feedback.values().begin(),
                               state.feedback.values().end());
  // neurons without a self-history term have no feedback gradient
  for (int i = 0; i < params.neuron_count(); ++i)
    if (!params.has_feedback(i)) terms.feedback_traces[i] = 0.0;
  return terms;
}

}  // namespace spikelink::snn
