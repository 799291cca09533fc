#include "spikelink/jscc/enumerate.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace spikelink::jscc {

namespace {

double log_bit_prob(int bit, double p_one) {
  // p_one guarded the same way as sigmoid outputs
  const double p = std::clamp(p_one, snn::kProbFloor, 1.0 - snn::kProbFloor);
  return bit ? std::log(p) : std::log(1.0 - p);
}

}  // namespace

double enumerate_pipeline_bound(const Pipeline& pipeline, const SpikeRaster& o,
                                const SpikeRaster& v_target) {
  const auto& cfg = pipeline.config;
  if (o.channels() != cfg.d_o || v_target.channels() != cfg.d_v ||
      o.horizon() != v_target.horizon())
    throw ConfigError("enumerate_pipeline_bound: shape mismatch");
  const int enc_hidden =
      pipeline.encoder
          ? static_cast<int>(pipeline.encoder->params().partition.hidden.size())
          : 0;
  const int enc_outputs = pipeline.encoder ? cfg.d_x : 0;
  const int dec_hidden =
      static_cast<int>(pipeline.decoder.params().partition.hidden.size());
  const long bits_per_step = enc_outputs + enc_hidden + cfg.d_y + dec_hidden;
  if (bits_per_step * o.horizon() > 18)
    throw ConfigError("enumerate_pipeline_bound: state space too large");

  pipeline.channel.validate();
  const double flip0 = channel::flip_probability(0, pipeline.channel.noise_sigma,
                                                 pipeline.channel.threshold);
  const double flip1 = channel::flip_probability(1, pipeline.channel.noise_sigma,
                                                 pipeline.channel.threshold);

  double bound = 0.0;

  // Iterative DFS with explicit stack of (states, t, log_p, loss_so_far).
  struct Node {
    std::optional<snn::GlmNetwork> enc;
    snn::GlmNetwork dec;
    int t;
    double log_p;
    double loss;
  };
  std::vector<Node> stack;
  {
    std::optional<snn::GlmNetwork> enc;
    if (pipeline.encoder) {
      enc.emplace(*pipeline.encoder);
      enc->reset_state();
    }
    snn::GlmNetwork dec = pipeline.decoder;
    dec.reset_state();
    stack.push_back({std::move(enc), std::move(dec), 1, 0.0, 0.0});
  }

  const auto& dec_params = pipeline.decoder.params();
  std::vector<std::uint8_t> x_col(cfg.d_x), y_col(cfg.d_y);
  std::vector<std::uint8_t> enc_spikes(
      pipeline.encoder ? pipeline.encoder->params().neuron_count() : 0);
  std::vector<std::uint8_t> dec_spikes(dec_params.neuron_count());

  while (!stack.empty()) {
    Node node = std::move(stack.back());
    stack.pop_back();
    if (node.t > o.horizon()) {
      bound += std::exp(node.log_p) * node.loss;
      continue;
    }
    const int t0 = node.t - 1;
    if (node.enc) node.enc->compute_potentials();
    node.dec.compute_potentials();

    const unsigned n_enc_bits = static_cast<unsigned>(enc_outputs + enc_hidden);
    const unsigned n_chan_bits = static_cast<unsigned>(cfg.d_y);
    const unsigned n_dech_bits = static_cast<unsigned>(dec_hidden);
    const unsigned total_bits = n_enc_bits + n_chan_bits + n_dech_bits;

    // decoder read-out loss at this step is pattern-independent
    double step_loss = 0.0;
    for (int v = 0; v < cfg.d_v; ++v) {
      const int i = dec_params.partition.visible[v];
      step_loss += snn::bce_loss(v_target.at(v, t0),
                                 snn::sigmoid(node.dec.state().potentials[i]));
    }

    for (unsigned pat = 0; pat < (1u << total_bits); ++pat) {
      double lp = node.log_p;
      unsigned cursor = pat;

      // encoder spikes (outputs first, then encoder hidden)
      if (node.enc) {
        const auto& ep = node.enc->params();
        for (int k = 0; k < enc_outputs; ++k) {
          const int i = ep.partition.visible[k];
          const int bit = cursor & 1u;
          cursor >>= 1;
          enc_spikes[i] = static_cast<std::uint8_t>(bit);
          x_col[k] = static_cast<std::uint8_t>(bit);
          lp += log_bit_prob(bit,
                             snn::sigmoid(node.enc->state().potentials[i]));
        }
        for (int h = 0; h < enc_hidden; ++h) {
          const int i = ep.partition.hidden[h];
          const int bit = cursor & 1u;
          cursor >>= 1;
          enc_spikes[i] = static_cast<std::uint8_t>(bit);
          lp += log_bit_prob(bit,
                             snn::sigmoid(node.enc->state().potentials[i]));
        }
      } else {
        for (int k = 0; k < cfg.d_x; ++k) x_col[k] = o.at(k, t0);
      }

      // channel outputs
      for (int k = 0; k < cfg.d_y; ++k) {
        const int bit = cursor & 1u;
        cursor >>= 1;
        y_col[k] = static_cast<std::uint8_t>(bit);
        const double flip = x_col[k] ? flip1 : flip0;
        const double p_one = x_col[k] ? 1.0 - flip : flip;
        lp += log_bit_prob(bit, p_one);
      }

      // decoder spikes: read-outs clamped, hidden enumerated
      for (int v = 0; v < cfg.d_v; ++v)
        dec_spikes[dec_params.partition.visible[v]] = v_target.at(v, t0);
      for (int h = 0; h < dec_hidden; ++h) {
        const int i = dec_params.partition.hidden[h];
        const int bit = cursor & 1u;
        cursor >>= 1;
        dec_spikes[i] = static_cast<std::uint8_t>(bit);
        lp += log_bit_prob(bit,
                           snn::sigmoid(node.dec.state().potentials[i]));
      }

      Node child{node.enc, node.dec, node.t + 1, lp, node.loss + step_loss};
      if (child.enc) child.enc->advance(o.column(t0), enc_spikes);
      child.dec.advance(y_col, dec_spikes);
      stack.push_back(std::move(child));
    }
  }
  return bound;
}

}  // namespace spikelink::jscc
