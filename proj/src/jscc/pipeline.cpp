#include "spikelink/jscc/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "spikelink/fl/protocol.hpp"

namespace spikelink::jscc {

PipelineConfig PipelineConfig::from_rate(int d_o, double rate, int d_v,
                                         int horizon, int decoder_hidden) {
  PipelineConfig c;
  c.d_o = d_o;
  c.rate = rate;
  const double dx_exact = rate * d_o;
  const int dx = static_cast<int>(std::llround(dx_exact));
  if (std::abs(dx_exact - dx) > 1e-9 || dx < 1)
    throw ConfigError("rate * d_o must be a positive integer, got " +
                      std::to_string(dx_exact));
  c.d_x = dx;
  c.d_y = dx;
  c.decoder_hidden = decoder_hidden < 0 ? dx : decoder_hidden;
  c.d_v = d_v;
  c.horizon = horizon;
  c.validate();
  return c;
}

void PipelineConfig::validate() const {
  if (d_o < 1 || d_x < 1 || d_v < 1 || horizon < 1)
    throw ConfigError("pipeline: sizes must be >= 1");
  if (encoder_init != "random" && encoder_init != "repeater")
    throw ConfigError("pipeline: encoder_init must be 'random' or 'repeater'");
  if (encoder_tau <= 0.0 || encoder_taps < 1)
    throw ConfigError("pipeline: bad encoder filter");
  if (d_y != d_x) throw ConfigError("pipeline: d_y must equal d_x");
  if (encoder_hidden < 0 || decoder_hidden < 0)
    throw ConfigError("pipeline: negative hidden count");
  const double dx_exact = rate * d_o;
  if (std::abs(dx_exact - d_x) > 1e-9)
    throw ConfigError("pipeline: d_x must equal rate * d_o exactly");
  if (target_high <= target_low)
    throw ConfigError("pipeline: target_high must exceed target_low");
  if (uncoded && d_x != d_o)
    throw ConfigError("pipeline: uncoded requires d_x = d_o");
}

void Pipeline::reset_states() {
  if (encoder) encoder->reset_state();
  decoder.reset_state();
}

Pipeline make_pipeline(const PipelineConfig& config, std::uint64_t seed) {
  config.validate();
  std::optional<snn::GlmNetwork> encoder;
  if (!config.uncoded) {
    const auto enc_filter =
        snn::SynapticFilter::exponential(config.encoder_tau,
                                         config.encoder_taps);
    snn::NetworkParams enc_params =
        config.encoder_hidden == 0
            ? snn::make_feedforward_network(config.d_o, config.d_x, enc_filter)
            : snn::make_dense_network(config.d_o, config.encoder_hidden,
                                      config.d_x, enc_filter);
    snn::init_params(enc_params, derive_seed(seed, seed_tags::neuron_init, 1),
                     0.1, config.encoder_bias_init);
    if (config.encoder_init == "repeater") {
      // lane j repeats the inputs it covers; one fresh trace (~1) crosses
      // the bias, so the untrained code tracks the source one step late
      for (int j = 0; j < config.d_x; ++j) {
        auto& n = enc_params.neurons[j];
        const int covers = j * config.d_o / config.d_x;
        for (int k = 0; k < config.d_o && k < (int)n.weights.size(); ++k)
          if (k == covers) n.weights[k] += 12.0;
        n.bias = -6.0;
      }
    }
    encoder.emplace(std::move(enc_params));
  }
  snn::NetworkParams dec_params = snn::make_classifier_network(
      config.d_y, config.decoder_hidden, config.d_v);
  snn::init_params(dec_params, derive_seed(seed, seed_tags::neuron_init, 2));

  channel::ChannelConfig chan;
  chan.parallel_lanes = config.d_x;
  chan.noise_sigma = 1.0;
  chan.threshold = 0.5;

  return Pipeline{config, std::move(encoder), snn::GlmNetwork(dec_params),
                  chan};
}

SpikeRaster rate_target(int cls, int d_v, int horizon, double high, double low,
                        RngStream& rng) {
  if (cls < 0 || cls >= d_v) throw ConfigError("rate_target: class out of range");
  if (high <= low) throw ConfigError("rate_target: high rate must exceed low");
  SpikeRaster target(d_v, horizon);
  for (int t = 0; t < horizon; ++t)
    for (int ch = 0; ch < d_v; ++ch)
      target.set(ch, t, rng.bernoulli(ch == cls ? high : low));
  return target;
}

namespace {

// Per-step plumbing shared by forward, training, and gradient accumulation.
struct StepDriver {
  Pipeline& p;
  const SpikeRaster& o;
  const SpikeRaster* clamp_v;
  RngStream& rng;
  std::vector<std::uint8_t> x_col;
  std::vector<std::uint8_t> y_col;

  StepDriver(Pipeline& p_, const SpikeRaster& o_, const SpikeRaster* clamp,
             RngStream& rng_)
      : p(p_), o(o_), clamp_v(clamp), rng(rng_) {
    if (o.channels() != p.config.d_o)
      throw ConfigError("forward_pipeline: sensor raster has wrong channels");
    if (clamp_v && (clamp_v->channels() != p.config.d_v ||
                    clamp_v->horizon() != o.horizon()))
      throw ConfigError("forward_pipeline: clamp raster has wrong shape");
    x_col.resize(p.config.d_x);
    y_col.resize(p.config.d_y);
    p.channel.validate();
  }

  // Runs stage sampling for step t (0-based); advance() must be called on
  // both networks afterwards via finish(). Returns the decoder step result.
  snn::StepResult sample_step(int t, snn::StepResult* enc_result) {
    if (p.encoder) {
      p.encoder->compute_potentials();
      snn::StepResult er = p.encoder->sample(nullptr, rng);
      const auto& vis = p.encoder->params().partition.visible;
      for (int k = 0; k < p.config.d_x; ++k) x_col[k] = er.spikes[vis[k]];
      if (enc_result) *enc_result = std::move(er);
    } else {
      auto col = o.column(t);
      std::copy(col.begin(), col.end(), x_col.begin());
    }
    channel::transmit_step(x_col, y_col, p.channel, rng);
    p.decoder.compute_potentials();
    const std::uint8_t* clamp_ptr =
        clamp_v ? clamp_v->column(t).data() : nullptr;
    return p.decoder.sample(clamp_ptr, rng);
  }

  void finish(int t, const snn::StepResult& enc_result,
              const snn::StepResult& dec_result) {
    if (p.encoder) p.encoder->advance(o.column(t), enc_result.spikes);
    p.decoder.advance(y_col, dec_result.spikes);
  }
};

}  // namespace

ForwardResult forward_pipeline(Pipeline& pipeline, const SpikeRaster& o,
                               const SpikeRaster* clamp_v, RngStream& rng) {
  StepDriver drv(pipeline, o, clamp_v, rng);
  pipeline.reset_states();
  const int horizon = o.horizon();
  ForwardResult result{SpikeRaster(pipeline.config.d_x, horizon),
                       SpikeRaster(pipeline.config.d_y, horizon),
                       SpikeRaster(pipeline.config.d_v, horizon),
                       {}};
  if (clamp_v) result.step_losses.reserve(horizon);
  const auto& dec_vis = pipeline.decoder.params().partition.visible;
  for (int t = 0; t < horizon; ++t) {
    snn::StepResult enc;
    snn::StepResult dec = drv.sample_step(t, &enc);
    for (int k = 0; k < pipeline.config.d_x; ++k)
      result.x.set(k, t, drv.x_col[k]);
    for (int k = 0; k < pipeline.config.d_y; ++k)
      result.y.set(k, t, drv.y_col[k]);
    for (int v = 0; v < pipeline.config.d_v; ++v)
      result.v.set(v, t, dec.spikes[dec_vis[v]]);
    if (clamp_v)
      result.step_losses.push_back(fl::error_signal(dec.visible_losses));
    drv.finish(t, enc, dec);
  }
  return result;
}

namespace {

double run_learning_pass(Pipeline& pipeline, const SpikeRaster& o,
                         const SpikeRaster& v_target, RngStream& rng,
                         snn::OnlineLearner* enc_learner,
                         snn::OnlineLearner& dec_learner,
                         double learning_rate, bool apply_updates,
                         double encoder_lr_scale = 1.0) {
  StepDriver drv(pipeline, o, &v_target, rng);
  pipeline.reset_states();
  if (enc_learner) enc_learner->begin_example();
  dec_learner.begin_example();
  double bound = 0.0;
  for (int t = 0; t < o.horizon(); ++t) {
    snn::StepResult enc;
    snn::StepResult dec = drv.sample_step(t, &enc);
    const double e = fl::error_signal(dec.visible_losses);
    bound += e;
    const std::uint8_t* clamp_ptr = v_target.column(t).data();
    dec_learner.observe(pipeline.decoder, dec, clamp_ptr, e);
    if (enc_learner) enc_learner->observe(*pipeline.encoder, enc, nullptr, e);
    drv.finish(t, enc, dec);
    if (apply_updates) {
      dec_learner.apply(pipeline.decoder.params(), learning_rate);
      if (enc_learner)
        enc_learner->apply(pipeline.encoder->params(),
                           learning_rate * encoder_lr_scale);
    }
  }
  return bound;
}

}  // namespace

double train_step(Pipeline& pipeline, const SpikeRaster& o,
                  const SpikeRaster& v_target, double learning_rate,
                  RngStream& rng, bool use_baseline) {
  snn::LearnerOptions enc_opt;
  enc_opt.all_error_driven = true;
  enc_opt.use_baseline = use_baseline;
  snn::LearnerOptions dec_opt;
  dec_opt.use_baseline = use_baseline;
  std::optional<snn::OnlineLearner> enc_learner;
  if (pipeline.encoder)
    enc_learner.emplace(pipeline.encoder->params(), enc_opt);
  snn::OnlineLearner dec_learner(pipeline.decoder.params(), dec_opt);
  return run_learning_pass(pipeline, o, v_target, rng,
                           enc_learner ? &*enc_learner : nullptr, dec_learner,
                           learning_rate, true);
}

JsccTrainer::JsccTrainer(const Pipeline& pipeline, bool use_baseline) {
  snn::LearnerOptions enc_opt;
  enc_opt.all_error_driven = true;
  enc_opt.use_baseline = use_baseline;
  snn::LearnerOptions dec_opt;
  dec_opt.use_baseline = use_baseline;
  if (pipeline.encoder)
    encoder_learner.emplace(pipeline.encoder->params(), enc_opt);
  decoder_learner.emplace(pipeline.decoder.params(), dec_opt);
}

double JsccTrainer::train_example(Pipeline& pipeline, const SpikeRaster& o,
                                  const SpikeRaster& v_target,
                                  double learning_rate, RngStream& rng,
                                  double encoder_lr_scale) {
  return run_learning_pass(pipeline, o, v_target, rng,
                           encoder_learner ? &*encoder_learner : nullptr,
                           *decoder_learner, learning_rate, true,
                           encoder_lr_scale);
}

PipelineGrads accumulate_gradients(Pipeline& pipeline, const SpikeRaster& o,
                                   const SpikeRaster& v_target,
                                   RngStream& rng) {
  snn::LearnerOptions enc_opt;
  enc_opt.all_error_driven = true;
  std::optional<snn::OnlineLearner> enc_learner;
  if (pipeline.encoder)
    enc_learner.emplace(pipeline.encoder->params(), enc_opt);
  snn::OnlineLearner dec_learner(pipeline.decoder.params(), {});
  PipelineGrads grads;
  grads.bound = run_learning_pass(pipeline, o, v_target, rng,
                                  enc_learner ? &*enc_learner : nullptr,
                                  dec_learner, 0.0, false);
  if (enc_learner) grads.encoder = enc_learner->pending();
  grads.decoder = dec_learner.pending();
  return grads;
}

double measure_output_density(Pipeline& pipeline,
                              const data::LabeledSpikeSet& inputs,
                              int max_examples, std::uint64_t seed) {
  if (inputs.size() == 0) throw DataError("measure_output_density: empty set");
  if (!pipeline.encoder) {
    // pass-through: the source density is the transmitted density
    double acc = 0.0;
    const std::size_t n = std::min<std::size_t>(inputs.size(), max_examples);
    for (std::size_t i = 0; i < n; ++i) acc += inputs.rasters[i].density();
    return acc / n;
  }
  const std::size_t n = std::min<std::size_t>(inputs.size(), max_examples);
  std::size_t ones = 0, total = 0;
  const auto& vis = pipeline.encoder->params().partition.visible;
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng(derive_seed(seed, seed_tags::calibration, i));
    pipeline.encoder->reset_state();
    const SpikeRaster& o = inputs.rasters[i];
    for (int t = 0; t < o.horizon(); ++t) {
      snn::StepResult r = pipeline.encoder->step(o.column(t), nullptr, rng);
      for (int k : vis) ones += r.spikes[k];
      total += vis.size();
    }
  }
  return total ? static_cast<double>(ones) / total : 0.0;
}

std::vector<EpochStats> train_pipeline(Pipeline& pipeline,
                                       const data::LabeledSpikeSet& train,
                                       const TrainOptions& options,
                                       std::uint64_t seed) {
  if (train.size() == 0) throw DataError("train_pipeline: empty training set");
  if (train.horizon != pipeline.config.horizon)
    throw ConfigError("train_pipeline: dataset horizon mismatch");
  std::vector<EpochStats> stats;
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  JsccTrainer trainer(pipeline, options.use_baseline);

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const double density = std::max(
        options.density_floor,
        measure_output_density(pipeline, train, options.calibration_examples,
                               derive_seed(seed, seed_tags::calibration,
                                           static_cast<std::uint64_t>(epoch))));
    pipeline.channel.noise_sigma =
        channel::calibrate_sigma(density, options.train_snr_db);
    pipeline.channel.snr_db = options.train_snr_db;

    RngStream order_rng(derive_seed(seed, seed_tags::order,
                                    static_cast<std::uint64_t>(epoch)));
    order_rng.shuffle(order);
    RngStream rng(derive_seed(seed, seed_tags::train,
                              static_cast<std::uint64_t>(epoch)));
    double bound_sum = 0.0;
    for (std::size_t idx : order) {
      SpikeRaster target =
          rate_target(train.labels[idx], pipeline.config.d_v,
                      pipeline.config.horizon, pipeline.config.target_high,
                      pipeline.config.target_low, rng);
      bound_sum += trainer.train_example(pipeline, train.rasters[idx], target,
                                         options.learning_rate, rng,
                                         options.encoder_lr_scale);
    }
    stats.push_back({epoch, bound_sum / train.size(), density,
                     pipeline.channel.noise_sigma});
  }
  return stats;
}

std::vector<double> evaluate_accuracy_vs_time(Pipeline& pipeline,
                                              const data::LabeledSpikeSet& test,
                                              std::uint64_t seed) {
  if (test.size() == 0) throw DataError("evaluate_accuracy_vs_time: empty set");
  const int horizon = test.horizon;
  std::vector<long> correct(horizon, 0);
  std::vector<long> counts(pipeline.config.d_v);
  for (std::size_t n = 0; n < test.size(); ++n) {
    RngStream rng(derive_seed(seed, seed_tags::eval, n));
    ForwardResult fwd =
        forward_pipeline(pipeline, test.rasters[n], nullptr, rng);
    std::fill(counts.begin(), counts.end(), 0);
    for (int t = 0; t < horizon; ++t) {
      int best = 0;
      for (int v = 0; v < pipeline.config.d_v; ++v) {
        counts[v] += fwd.v.at(v, t);
        if (counts[v] > counts[best]) best = v;
      }
      if (best == test.labels[n]) ++correct[t];
    }
  }
  std::vector<double> acc(horizon);
  for (int t = 0; t < horizon; ++t)
    acc[t] = static_cast<double>(correct[t]) / test.size();
  return acc;
}

std::vector<double> evaluate_accuracy_vs_snr(Pipeline& pipeline,
                                             const data::LabeledSpikeSet& test,
                                             std::span<const double> snr_grid_db,
                                             int repetitions,
                                             std::uint64_t seed) {
  if (snr_grid_db.empty()) throw ConfigError("evaluate_accuracy_vs_snr: empty grid");
  if (repetitions < 1) throw ConfigError("evaluate_accuracy_vs_snr: repetitions < 1");
  const double saved_sigma = pipeline.channel.noise_sigma;
  const double saved_snr = pipeline.channel.snr_db;
  std::vector<double> result;
  result.reserve(snr_grid_db.size());
  const double density = std::max(
      1e-4, measure_output_density(pipeline, test, 32,
                                   derive_seed(seed, seed_tags::calibration)));
  for (std::size_t g = 0; g < snr_grid_db.size(); ++g) {
    pipeline.channel.noise_sigma =
        channel::calibrate_sigma(density, snr_grid_db[g]);
    pipeline.channel.snr_db = snr_grid_db[g];
    double acc = 0.0;
    for (int rep = 0; rep < repetitions; ++rep) {
      auto curve = evaluate_accuracy_vs_time(
          pipeline, test,
          derive_seed(seed, seed_tags::repeat,
                      g * 1000 + static_cast<std::uint64_t>(rep)));
      acc += curve.back();
    }
    result.push_back(acc / repetitions);
  }
  pipeline.channel.noise_sigma = saved_sigma;
  pipeline.channel.snr_db = saved_snr;
  return result;
}

}  // namespace spikelink::jscc
