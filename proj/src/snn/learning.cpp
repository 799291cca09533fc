#include "spikelink/snn/learning.hpp"

#include <algorithm>
#include <cmath>

namespace spikelink::snn {

ParamDelta ParamDelta::zeros_like(const NetworkParams& params) {
  ParamDelta d;
  d.neurons.resize(params.neuron_count());
  for (int i = 0; i < params.neuron_count(); ++i)
    d.neurons[i].weights.assign(params.topology[i].size(), 0.0);
  return d;
}

void ParamDelta::clear() {
  for (auto& n : neurons) {
    std::fill(n.weights.begin(), n.weights.end(), 0.0);
    n.feedback = 0.0;
    n.bias = 0.0;
  }
}

void ParamDelta::add_scaled(const ParamDelta& other, double scale) {
  for (std::size_t i = 0; i < neurons.size(); ++i) {
    auto& a = neurons[i];
    const auto& b = other.neurons[i];
    for (std::size_t k = 0; k < a.weights.size(); ++k)
      a.weights[k] += scale * b.weights[k];
    a.feedback += scale * b.feedback;
    a.bias += scale * b.bias;
  }
}

double ParamDelta::max_abs() const {
  double m = 0.0;
  for (const auto& n : neurons) {
    for (double w : n.weights) m = std::max(m, std::abs(w));
    m = std::max(m, std::abs(n.feedback));
    m = std::max(m, std::abs(n.bias));
  }
  return m;
}

void apply_delta(NetworkParams& params, const ParamDelta& delta, double scale) {
  for (int i = 0; i < params.neuron_count(); ++i) {
    auto& n = params.neurons[i];
    const auto& d = delta.neurons[i];
    for (std::size_t k = 0; k < n.weights.size(); ++k)
      n.weights[k] += scale * d.weights[k];
    n.feedback_weight += scale * d.feedback;
    n.bias += scale * d.bias;
  }
}

OnlineLearner::OnlineLearner(const NetworkParams& shape, LearnerOptions opt)
    : opt_(opt),
      window_(ParamDelta::zeros_like(shape)),
      eligibility_(ParamDelta::zeros_like(shape)) {
  error_driven_.assign(shape.neuron_count(), 1);
  if (!opt_.all_error_driven)
    for (int v : shape.partition.visible) error_driven_[v] = 0;
}

void OnlineLearner::begin_example() {
  eligibility_.clear();
  if (opt_.use_baseline && example_steps_ > 0) {
    const double mean_error = example_error_sum_ / example_steps_;
    if (!baseline_primed_) {
      baseline_ = mean_error;
      baseline_primed_ = true;
    } else {
      baseline_ += opt_.baseline_rho * (mean_error - baseline_);
    }
  }
  example_error_sum_ = 0.0;
  example_steps_ = 0;
}

void OnlineLearner::observe(const GlmNetwork& net, const StepResult& step,
                            const std::uint8_t* clamp, double error_signal) {
  const auto& params = net.params();
  const auto& state = net.state();
  const auto syn = state.synaptic.values();
  const auto fb = state.feedback.values();

  example_error_sum_ += error_signal;
  ++example_steps_;
  const double signal =
      opt_.use_baseline && baseline_primed_ ? error_signal - baseline_
                                            : error_signal;

  for (int i = 0; i < params.neuron_count(); ++i) {
    const auto& sources = params.topology[i];
    auto& w = window_.neurons[i];
    if (error_driven_[i]) {
      auto& c = eligibility_.neurons[i];
      // window += -signal * c_{t-1}
      if (signal != 0.0) {
        for (std::size_t k = 0; k < sources.size(); ++k)
          w.weights[k] -= signal * c.weights[k];
        w.feedback -= signal * c.feedback;
        w.bias -= signal * c.bias;
      }
      // c += (s_t - sigmoid(u_t)) * trace_t
      const double err = step.spikes[i] - sigmoid(state.potentials[i]);
      for (std::size_t k = 0; k < sources.size(); ++k)
        c.weights[k] += err * syn[sources[k]];
      if (params.has_feedback(i)) c.feedback += err * fb[i];
      c.bias += err;
    }
  }
  if (!opt_.all_error_driven && clamp != nullptr) {
    for (int v = 0; v < params.visible_count(); ++v) {
      const int i = params.partition.visible[v];
      const double err = clamp[v] - sigmoid(state.potentials[i]);
      auto& w = window_.neurons[i];
      const auto& sources = params.topology[i];
      for (std::size_t k = 0; k < sources.size(); ++k)
        w.weights[k] += err * syn[sources[k]];
      if (params.has_feedback(i)) w.feedback += err * fb[i];
      w.bias += err;
    }
  }
}

void OnlineLearner::apply(NetworkParams& params, double learning_rate) {
  apply_delta(params, window_, learning_rate);
  window_.clear();
}

}  // namespace spikelink::snn
