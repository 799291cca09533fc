#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spikelink/channel/channel.hpp"
#include "spikelink/data/dataset.hpp"
#include "spikelink/raster.hpp"
#include "spikelink/snn/learning.hpp"
#include "spikelink/snn/network.hpp"

namespace spikelink::jscc {

// End-to-end layout: d_o sensor channels -> encoder SNN with d_x outputs ->
// binary channel -> decoder SNN (d_y = d_x inputs, decoder_hidden latent,
// d_v read-outs).
struct PipelineConfig {
  int d_o = 64;
  double rate = 1.0;  // r = d_x / d_o; r * d_o must be an integer
  int d_x = 64;
  int d_y = 64;
  int encoder_hidden = 0;
  int decoder_hidden = 64;  // N_H^D, defaults to d_x
  int d_v = 2;
  int horizon = 40;
  double target_high = data::kTargetHighRate;
  double target_low = data::kTargetLowRate;
  double encoder_bias_init = 0.0;
  // Encoder synaptic response; a short kernel makes the code track the
  // current input instead of its smoothed occupancy.
  double encoder_tau = 3.0;
  int encoder_taps = 10;
  // "random": uniform weights. "repeater": a soft pass-through (strong
  // weight from input k to the lanes covering k, negative bias), so the
  // untrained code starts out OOK-like and the error-driven rule refines it
  // instead of having to bootstrap a random projection through the noise.
  std::string encoder_init = "random";
  bool uncoded = false;  // pass-through x = o, no learnable encoder

  static PipelineConfig from_rate(int d_o, double rate, int d_v, int horizon,
                                  int decoder_hidden = -1);
  void validate() const;
};

struct Pipeline {
  PipelineConfig config;
  std::optional<snn::GlmNetwork> encoder;  // absent when config.uncoded
  snn::GlmNetwork decoder;
  channel::ChannelConfig channel;

  void reset_states();
};

Pipeline make_pipeline(const PipelineConfig& config, std::uint64_t seed);

// Stochastic rate target for a class label: Bernoulli(high) on the class
// row, Bernoulli(low) elsewhere.
SpikeRaster rate_target(int cls, int d_v, int horizon, double high, double low,
                        RngStream& rng);

struct ForwardResult {
  SpikeRaster x;  // encoder outputs / channel inputs
  SpikeRaster y;  // channel outputs
  SpikeRaster v;  // decoder read-out spikes (the clamp when clamped)
  std::vector<double> step_losses;  // per step, summed over read-outs; clamped runs only

  double bound() const {
    double b = 0.0;
    for (double l : step_losses) b += l;
    return b;
  }
};

// One sampled trajectory of the full system, stepped jointly one time step
// at a time. With clamp_v the decoder read-outs are clamped and per-step
// losses recorded.
ForwardResult forward_pipeline(Pipeline& pipeline, const SpikeRaster& o,
                               const SpikeRaster* clamp_v, RngStream& rng);

// One online training pass over an example: clamped forward with per-step
// (delta_t = 1) updates of encoder and decoder. Returns the bound estimate
// (summed clamped loss).
double train_step(Pipeline& pipeline, const SpikeRaster& o,
                  const SpikeRaster& v_target, double learning_rate,
                  RngStream& rng, bool use_baseline = false);

// Learner state that persists across examples (needed for the optional
// error-signal baseline, which updates at example boundaries).
struct JsccTrainer {
  std::optional<snn::OnlineLearner> encoder_learner;
  std::optional<snn::OnlineLearner> decoder_learner;

  JsccTrainer(const Pipeline& pipeline, bool use_baseline);
  double train_example(Pipeline& pipeline, const SpikeRaster& o,
                       const SpikeRaster& v_target, double learning_rate,
                       RngStream& rng, double encoder_lr_scale = 1.0);
};

// Frozen-parameter gradient accumulation over one example; the updates are
// collected but not applied. Test and diagnostics path.
struct PipelineGrads {
  snn::ParamDelta encoder;
  snn::ParamDelta decoder;
  double bound = 0.0;
};
PipelineGrads accumulate_gradients(Pipeline& pipeline, const SpikeRaster& o,
                                   const SpikeRaster& v_target,
                                   RngStream& rng);

// Mean encoder-output spike density over (a prefix of) a dataset.
double measure_output_density(Pipeline& pipeline,
                              const data::LabeledSpikeSet& inputs,
                              int max_examples, std::uint64_t seed);

struct TrainOptions {
  int epochs = 3;
  double learning_rate = 0.01;
  // encoder steps run at learning_rate * encoder_lr_scale; a slower encoder
  // keeps the code stable while the decoder catches up
  double encoder_lr_scale = 1.0;
  double train_snr_db = 0.0;
  int calibration_examples = 32;
  double density_floor = 0.005;
  bool use_baseline = false;
};

struct EpochStats {
  int epoch = 0;
  double mean_bound = 0.0;
  double density = 0.0;
  double sigma = 0.0;
};

// Online training with per-epoch SNR recalibration from the encoder's own
// measured output density.
std::vector<EpochStats> train_pipeline(Pipeline& pipeline,
                                       const data::LabeledSpikeSet& train,
                                       const TrainOptions& options,
                                       std::uint64_t seed);

// Accuracy of rate decoding as a function of observation steps 1..T,
// averaged over the test set.
std::vector<double> evaluate_accuracy_vs_time(Pipeline& pipeline,
                                              const data::LabeledSpikeSet& test,
                                              std::uint64_t seed);

// Final-step accuracy over an SNR grid, recalibrating sigma per grid point
// from the measured output density and averaging `repetitions` seeded runs.
std::vector<double> evaluate_accuracy_vs_snr(Pipeline& pipeline,
                                             const data::LabeledSpikeSet& test,
                                             std::span<const double> snr_grid_db,
                                             int repetitions,
                                             std::uint64_t seed);

}  // namespace spikelink::jscc
