#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "spikelink/jscc/enumerate.hpp"
#include "spikelink/jscc/pipeline.hpp"
#include "spikelink/jscc/serialize.hpp"

using namespace spikelink;
using namespace spikelink::jscc;

namespace {

SpikeRaster random_raster(int channels, int horizon, double density,
                          RngStream& rng) {
  SpikeRaster r(channels, horizon);
  for (int c = 0; c < channels; ++c)
    for (int t = 0; t < horizon; ++t) r.set(c, t, rng.bernoulli(density));
  return r;
}

// Tiny pipeline with every latent enumerable: d_o=1, d_x=1, one decoder
// hidden neuron.
Pipeline tiny_pipeline(std::uint64_t seed, double sigma, double range = 0.5) {
  PipelineConfig cfg = PipelineConfig::from_rate(1, 1.0, 1, 4, 1);
  Pipeline p = make_pipeline(cfg, seed);
  p.channel.noise_sigma = sigma;
  RngStream rng(seed + 1);
  auto jiggle = [&](snn::NetworkParams& params) {
    for (auto& n : params.neurons) {
      for (double& w : n.weights) w = (2 * rng.uniform() - 1) * range;
      n.feedback_weight = (2 * rng.uniform() - 1) * range;
      n.bias = (2 * rng.uniform() - 1) * range;
    }
  };
  jiggle(p.encoder->params());
  jiggle(p.decoder.params());
  return p;
}

data::LabeledSpikeSet synthetic(int channels, int horizon, int count,
                                std::uint64_t seed) {
  data::SyntheticSpec spec;
  spec.channels = channels;
  spec.horizon = horizon;
  spec.count = count;
  spec.seed = seed;
  return data::generate_synthetic(spec);
}

}  // namespace

TEST_SUITE_BEGIN("neurojscc");

TEST_CASE("config: rate must divide the sensor width") {
  CHECK_THROWS_AS(PipelineConfig::from_rate(10, 0.15, 2, 20), ConfigError);
  const PipelineConfig half = PipelineConfig::from_rate(10, 0.5, 2, 20);
  CHECK(half.d_x == 5);
  CHECK(half.d_y == 5);
  CHECK(half.decoder_hidden == 5);  // N_H^D defaults to d_x
  const PipelineConfig twice = PipelineConfig::from_rate(10, 2.0, 2, 20);
  CHECK(twice.d_x == 20);
}

TEST_CASE("rate_target: one-hot limit and decodability") {
  RngStream rng(2);
  const SpikeRaster hard = rate_target(1, 3, 10, 1.0, 0.0, rng);
  for (int t = 0; t < 10; ++t) {
    CHECK(hard.at(1, t) == 1);
    CHECK(hard.at(0, t) == 0);
    CHECK(hard.at(2, t) == 0);
  }
  CHECK_THROWS_AS(rate_target(3, 3, 10, 0.9, 0.01, rng), ConfigError);
  CHECK_THROWS_AS(rate_target(0, 3, 10, 0.5, 0.5, rng), ConfigError);
}

TEST_CASE("forward: uniform pipeline emits ln2 losses per read-out") {
  PipelineConfig cfg = PipelineConfig::from_rate(4, 1.0, 2, 6);
  Pipeline p = make_pipeline(cfg, 3);
  // zero all parameters: every spike probability is 1/2
  for (auto* net : {&*p.encoder, &p.decoder})
    for (auto& n : net->params().neurons) {
      std::fill(n.weights.begin(), n.weights.end(), 0.0);
      n.feedback_weight = 0.0;
      n.bias = 0.0;
    }
  p.channel.noise_sigma = 0.5;
  RngStream data_rng(4), rng(5);
  const SpikeRaster o = random_raster(4, 6, 0.3, data_rng);
  const SpikeRaster target = random_raster(2, 6, 0.5, data_rng);
  ForwardResult fwd = forward_pipeline(p, o, &target, rng);
  REQUIRE(fwd.step_losses.size() == 6);
  for (double l : fwd.step_losses)
    CHECK(l == doctest::Approx(2 * std::log(2.0)).epsilon(1e-12));
  CHECK(fwd.bound() == doctest::Approx(12 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("forward: pass-through encoder reproduces the input one step late") {
  // w=20 from input k to output k, bias -10, one-tap filter: an input spike
  // at t drives the matching output at t+1 through the strictly causal trace
  PipelineConfig cfg = PipelineConfig::from_rate(5, 1.0, 2, 40);
  cfg.decoder_hidden = 2;
  Pipeline p = make_pipeline(cfg, 6);
  // rebuild the encoder with a one-tap synaptic filter
  snn::NetworkParams sharp = snn::make_feedforward_network(
      5, 5, snn::SynapticFilter::from_taps({1.0}));
  for (int i = 0; i < 5; ++i) {
    for (int k = 0; k < 5; ++k)
      sharp.neurons[i].weights[k] = (i == k) ? 20.0 : 0.0;
    sharp.neurons[i].bias = -10.0;
  }
  p.encoder.emplace(sharp);
  p.channel.noise_sigma = 1e-9;  // noiseless limit

  RngStream data_rng(7);
  const SpikeRaster o = random_raster(5, 40, 0.3, data_rng);
  long mismatches = 0, total = 0;
  for (int rep = 0; rep < 600; ++rep) {
    RngStream rng(100 + rep);
    ForwardResult fwd = forward_pipeline(p, o, nullptr, rng);
    CHECK(fwd.y == fwd.x);  // noiseless channel
    for (int k = 0; k < 5; ++k)
      for (int t = 1; t < 40; ++t) {
        mismatches += fwd.x.at(k, t) != o.at(k, t - 1);
        ++total;
      }
  }
  CHECK(static_cast<double>(mismatches) / total < 1e-4);
}

TEST_CASE("forward: deterministic under a fixed seed") {
  Pipeline p = tiny_pipeline(11, 0.6);
  RngStream data_rng(8);
  const SpikeRaster o = random_raster(1, 4, 0.5, data_rng);
  RngStream a(55), b(55);
  ForwardResult fa = forward_pipeline(p, o, nullptr, a);
  ForwardResult fb = forward_pipeline(p, o, nullptr, b);
  CHECK(fa.x == fb.x);
  CHECK(fa.y == fb.y);
  CHECK(fa.v == fb.v);
}

TEST_CASE("train_step: error factors and bound at the uniform point") {
  // visible error factors at sigma=0.5: +0.5 for the clamped-on neuron,
  // -0.5 for the others
  PipelineConfig cfg = PipelineConfig::from_rate(2, 1.0, 2, 1);
  Pipeline p = make_pipeline(cfg, 9);
  for (auto* net : {&*p.encoder, &p.decoder})
    for (auto& n : net->params().neurons) {
      std::fill(n.weights.begin(), n.weights.end(), 0.0);
      n.feedback_weight = 0.0;
      n.bias = 0.0;
    }
  p.channel.noise_sigma = 0.5;
  SpikeRaster o(2, 1);
  SpikeRaster target(2, 1);
  target.set(0, 0, 1);
  RngStream rng(10);
  PipelineGrads g = accumulate_gradients(p, o, target, rng);
  // bias term of the decoder read-outs carries the bare error factor
  const auto& vis = p.decoder.params().partition.visible;
  CHECK(g.decoder.neurons[vis[0]].bias == doctest::Approx(0.5));
  CHECK(g.decoder.neurons[vis[1]].bias == doctest::Approx(-0.5));
  // d_v * ln2 for the single uniform step
  CHECK(g.bound == doctest::Approx(2 * std::log(2.0)));

  // zero-parameter pipeline over T=80, d_v=2: closed form 80 * 2 * ln 2
  PipelineConfig cfg80 = PipelineConfig::from_rate(2, 1.0, 2, 80);
  Pipeline p80 = make_pipeline(cfg80, 12);
  for (auto* net : {&*p80.encoder, &p80.decoder})
    for (auto& n : net->params().neurons) {
      std::fill(n.weights.begin(), n.weights.end(), 0.0);
      n.feedback_weight = 0.0;
      n.bias = 0.0;
    }
  p80.channel.noise_sigma = 0.5;
  RngStream data_rng(13), rng80(14);
  const SpikeRaster o80 = random_raster(2, 80, 0.3, data_rng);
  const SpikeRaster t80 = random_raster(2, 80, 0.5, data_rng);
  PipelineGrads g80 = accumulate_gradients(p80, o80, t80, rng80);
  CHECK(g80.bound == doctest::Approx(160 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("train_step: hidden-style scale follows the error signal") {
  // with 2 read-outs at the uniform point every error signal is 2 ln 2, so
  // each error-driven window delta is -(2 ln 2) times the prior eligibility
  Pipeline p = tiny_pipeline(15, 0.6, 0.0);  // zero weights
  PipelineConfig cfg2 = PipelineConfig::from_rate(1, 1.0, 2, 2);
  Pipeline p2 = make_pipeline(cfg2, 16);
  for (auto* net : {&*p2.encoder, &p2.decoder})
    for (auto& n : net->params().neurons) {
      std::fill(n.weights.begin(), n.weights.end(), 0.0);
      n.feedback_weight = 0.0;
      n.bias = 0.0;
    }
  p2.channel.noise_sigma = 0.7;
  SpikeRaster o(1, 2);
  o.set(0, 0, 1);
  SpikeRaster target(2, 2);
  target.set(0, 0, 1);
  target.set(0, 1, 1);
  RngStream rng(17);
  PipelineGrads g = accumulate_gradients(p2, o, target, rng);
  // encoder bias eligibility after step 1 is (x_1 - 0.5); the step-2 window
  // contribution is -(2 ln 2) * that, and no step-1 contribution exists
  RngStream replay(17);
  ForwardResult fwd = forward_pipeline(p2, o, &target, replay);
  const double elig1 = fwd.x.at(0, 0) - 0.5;
  CHECK(g.encoder.neurons[0].bias ==
        doctest::Approx(-2 * std::log(2.0) * elig1).epsilon(1e-9));
}

TEST_CASE("decoder-visible gradient check under a frozen trajectory") {
  Pipeline p = tiny_pipeline(21, 0.8);
  RngStream data_rng(22);
  const SpikeRaster o = random_raster(1, 4, 0.5, data_rng);
  const SpikeRaster target = random_raster(1, 4, 0.5, data_rng);

  RngStream rng_c(777);
  PipelineGrads center = accumulate_gradients(p, o, target, rng_c);

  const auto& vis = p.decoder.params().partition.visible;
  const int i = vis[0];
  const double eps = 1e-5;
  for (std::size_t k = 0; k < p.decoder.params().neurons[i].weights.size();
       ++k) {
    Pipeline plus = p, minus = p;
    plus.decoder.params().neurons[i].weights[k] += eps;
    minus.decoder.params().neurons[i].weights[k] -= eps;
    RngStream ra(777), rb(777);  // frozen latent trajectory
    const double ba = accumulate_gradients(plus, o, target, ra).bound;
    const double bb = accumulate_gradients(minus, o, target, rb).bound;
    const double fd = (ba - bb) / (2 * eps);
    CHECK(std::abs(center.decoder.neurons[i].weights[k] - (-fd)) <=
          1e-4 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("pipeline unbiasedness: mean update matches the enumerated bound") {
  Pipeline p = tiny_pipeline(31, 0.75);
  RngStream data_rng(32);
  const SpikeRaster o = random_raster(1, 4, 0.5, data_rng);
  const SpikeRaster target = random_raster(1, 4, 0.6, data_rng);

  const double base_bound = enumerate_pipeline_bound(p, o, target);
  CHECK(base_bound > 0.0);

  // sanity: monte-carlo bound agrees with the enumerated bound
  {
    RngStream rng(4000);
    double acc = 0.0;
    const int n = 20000;
    for (int s = 0; s < n; ++s)
      acc += forward_pipeline(p, o, &target, rng).bound();
    CHECK(acc / n == doctest::Approx(base_bound).epsilon(0.02));
  }

  const int samples = 100000;
  const int enc_neuron = 0;
  const int dec_hidden = p.decoder.params().partition.hidden[0];

  double sum_enc = 0, sq_enc = 0, sum_dec = 0, sq_dec = 0;
  RngStream rng(4321);
  for (int s = 0; s < samples; ++s) {
    PipelineGrads g = accumulate_gradients(p, o, target, rng);
    const double de = g.encoder.neurons[enc_neuron].weights[0];
    const double dd = g.decoder.neurons[dec_hidden].bias;
    sum_enc += de;
    sq_enc += de * de;
    sum_dec += dd;
    sq_dec += dd * dd;
  }
  const double mean_enc = sum_enc / samples;
  const double se_enc =
      std::sqrt(std::max(0.0, sq_enc / samples - mean_enc * mean_enc) / samples);
  const double mean_dec = sum_dec / samples;
  const double se_dec =
      std::sqrt(std::max(0.0, sq_dec / samples - mean_dec * mean_dec) / samples);

  const double eps = 1e-4;
  auto fd_for = [&](auto&& mutate) {
    Pipeline plus = p, minus = p;
    mutate(plus, +eps);
    mutate(minus, -eps);
    return (enumerate_pipeline_bound(plus, o, target) -
            enumerate_pipeline_bound(minus, o, target)) /
           (2 * eps);
  };
  const double fd_enc = fd_for([&](Pipeline& q, double d) {
    q.encoder->params().neurons[enc_neuron].weights[0] += d;
  });
  const double fd_dec = fd_for([&](Pipeline& q, double d) {
    q.decoder.params().neurons[dec_hidden].bias += d;
  });

  CHECK(std::abs(mean_enc - (-fd_enc)) <= 3 * se_enc + 1e-6);
  CHECK(std::abs(mean_dec - (-fd_dec)) <= 3 * se_dec + 1e-6);
}

TEST_CASE("training decreases the bound on a separable task at +10 dB") {
  data::SyntheticSpec spec;
  spec.channels = 24;
  spec.horizon = 20;
  spec.count = 200;
  spec.seed = 41;
  const data::LabeledSpikeSet train = data::generate_synthetic(spec);

  PipelineConfig cfg = PipelineConfig::from_rate(24, 1.0, 2, 20);
  cfg.decoder_hidden = 8;
  Pipeline p = make_pipeline(cfg, 42);
  const double density = measure_output_density(p, train, 16, 43);
  p.channel.noise_sigma = channel::calibrate_sigma(std::max(0.01, density), 10.0);

  RngStream rng(44);
  std::vector<double> bounds;
  for (std::size_t n = 0; n < train.size(); ++n) {
    const SpikeRaster target =
        rate_target(train.labels[n], 2, 20, 0.9, 0.01, rng);
    bounds.push_back(train_step(p, train.rasters[n], target, 0.01, rng));
  }
  double first = 0, last = 0;
  for (int i = 0; i < 50; ++i) {
    first += bounds[i];
    last += bounds[150 + i];
  }
  CHECK(last < first);
}

TEST_CASE("channel-degradation ordering for a trained pipeline") {
  data::SyntheticSpec spec;
  spec.channels = 24;
  spec.horizon = 20;
  spec.count = 160;
  spec.seed = 51;
  const data::LabeledSpikeSet train = data::generate_synthetic(spec);
  spec.seed = 52;
  spec.count = 60;
  const data::LabeledSpikeSet test = data::generate_synthetic(spec);

  PipelineConfig cfg = PipelineConfig::from_rate(24, 1.0, 2, 20);
  cfg.decoder_hidden = 8;
  Pipeline p = make_pipeline(cfg, 53);
  TrainOptions opt;
  opt.epochs = 2;
  opt.learning_rate = 0.01;
  opt.train_snr_db = 10.0;
  train_pipeline(p, train, opt, 54);

  double acc_good = 0, acc_bad = 0;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const double grid[2] = {10.0, -10.0};
    const auto acc = evaluate_accuracy_vs_snr(p, test, grid, 1, 60 + s);
    acc_good += acc[0];
    acc_bad += acc[1];
  }
  CHECK(acc_good >= acc_bad);
}

TEST_CASE("accuracy-vs-time: chance level for an untrained pipeline") {
  data::SyntheticSpec spec;
  spec.channels = 16;
  spec.horizon = 15;
  spec.count = 120;
  spec.seed = 61;
  const data::LabeledSpikeSet test = data::generate_synthetic(spec);
  PipelineConfig cfg = PipelineConfig::from_rate(16, 1.0, 2, 15);
  Pipeline p = make_pipeline(cfg, 62);
  for (auto* net : {&*p.encoder, &p.decoder})
    for (auto& n : net->params().neurons) {
      std::fill(n.weights.begin(), n.weights.end(), 0.0);
      n.feedback_weight = 0.0;
      n.bias = 0.0;
    }
  p.channel.noise_sigma = 0.5;
  const auto curve = evaluate_accuracy_vs_time(p, test, 63);
  REQUIRE(curve.size() == 15);
  // 3-sigma binomial band around 0.5 with n = 120
  const double band = 3 * std::sqrt(0.25 / 120.0);
  for (double a : curve) CHECK(std::abs(a - 0.5) <= band + 0.08);
}

TEST_CASE("evaluate_accuracy_vs_snr: high-SNR point matches noiseless run") {
  data::SyntheticSpec spec;
  spec.channels = 16;
  spec.horizon = 15;
  spec.count = 80;
  spec.seed = 71;
  const data::LabeledSpikeSet test = data::generate_synthetic(spec);
  spec.seed = 72;
  spec.count = 120;
  const data::LabeledSpikeSet train = data::generate_synthetic(spec);

  PipelineConfig cfg = PipelineConfig::from_rate(16, 1.0, 2, 15);
  cfg.decoder_hidden = 4;
  Pipeline p = make_pipeline(cfg, 73);
  TrainOptions opt;
  opt.epochs = 2;
  opt.learning_rate = 0.01;
  opt.train_snr_db = 10.0;
  train_pipeline(p, train, opt, 74);

  const double grid[1] = {40.0};
  const auto acc = evaluate_accuracy_vs_snr(p, test, grid, 3, 75);

  // same evaluation with an effectively noiseless channel
  Pipeline q = p;
  q.channel.noise_sigma = 1e-9;
  double noiseless = 0;
  for (std::uint64_t rep = 0; rep < 3; ++rep)
    noiseless +=
        evaluate_accuracy_vs_time(q, test, derive_seed(75, seed_tags::repeat,
                                                       rep))
            .back();
  noiseless /= 3;
  CHECK(std::abs(acc[0] - noiseless) <= 0.02);
}

TEST_CASE("serialization: njsc round trip is lossless") {
  const std::string path = "spikelink_test_model.njsc";
  for (std::uint64_t s = 0; s < 6; ++s) {
    RngStream shape(s);
    const int d_o = 1 + static_cast<int>(shape.below(6));
    const int d_v = 1 + static_cast<int>(shape.below(3));
    const int hid = static_cast<int>(shape.below(4));
    PipelineConfig cfg = PipelineConfig::from_rate(d_o, 1.0, d_v, 5, hid);
    cfg.uncoded = shape.bernoulli(0.3);
    Pipeline p = make_pipeline(cfg, 80 + s);
    p.channel.noise_sigma = 0.3 + shape.uniform();
    p.channel.snr_db = -3.0 + shape.uniform();
    save_pipeline(p, path, 80 + s);
    const Pipeline q = load_pipeline(path);
    CHECK(q.config.d_o == p.config.d_o);
    CHECK(q.config.uncoded == p.config.uncoded);
    CHECK(q.channel.noise_sigma == p.channel.noise_sigma);
    REQUIRE(q.encoder.has_value() == p.encoder.has_value());
    if (p.encoder) {
      for (int i = 0; i < p.encoder->params().neuron_count(); ++i) {
        CHECK(q.encoder->params().neurons[i].weights ==
              p.encoder->params().neurons[i].weights);
        CHECK(q.encoder->params().neurons[i].bias ==
              p.encoder->params().neurons[i].bias);
      }
    }
    for (int i = 0; i < p.decoder.params().neuron_count(); ++i) {
      CHECK(q.decoder.params().neurons[i].weights ==
            p.decoder.params().neurons[i].weights);
      CHECK(q.decoder.params().neurons[i].feedback_weight ==
            p.decoder.params().neurons[i].feedback_weight);
    }
  }
  std::remove(path.c_str());
  std::remove((path + ".manifest").c_str());
}

TEST_SUITE_END();
