#include "spikelink/fl/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace spikelink::fl {

DeviceReplica::DeviceReplica(int id_, snn::NetworkParams params,
                             data::LabeledSpikeSet shard, double lr,
                             std::uint64_t seed_, snn::LearnerOptions opt)
    : id(id_),
      net(std::move(params)),
      dataset(std::move(shard)),
      dataset_weight(static_cast<double>(dataset.size())),
      learner(net.params(), opt),
      learning_rate(lr),
      seed(seed_) {
  if (dataset.size() == 0)
    throw ProtocolError("device " + std::to_string(id_) + " has no data");
}

double error_signal(std::span<const double> visible_losses) {
  double e = 0.0;
  for (double l : visible_losses) e += l;
  return e;
}

GlobalModel global_average(std::span<const DeviceReplica> devices) {
  if (devices.empty()) throw ProtocolError("global_average: no devices");
  double total = 0.0;
  for (const auto& d : devices) total += d.dataset_weight;
  if (total <= 0.0) throw ProtocolError("global_average: zero total weight");

  // Accumulated as base + sum of weighted deviations from the first device,
  // so unanimous parameters survive a round bit-exactly.
  GlobalModel global;
  global.params = devices[0].net.params();
  auto& neurons = global.params.neurons;
  const auto& base = devices[0].net.params().neurons;
  for (const auto& d : devices) {
    const auto& p = d.net.params();
    if (p.neuron_count() != global.params.neuron_count())
      throw ProtocolError("global_average: model shape mismatch");
    const double w = d.dataset_weight / total;
    for (int i = 0; i < p.neuron_count(); ++i) {
      if (p.neurons[i].weights.size() != neurons[i].weights.size())
        throw ProtocolError("global_average: weight shape mismatch");
      for (std::size_t k = 0; k < neurons[i].weights.size(); ++k)
        neurons[i].weights[k] +=
            w * (p.neurons[i].weights[k] - base[i].weights[k]);
      neurons[i].feedback_weight +=
          w * (p.neurons[i].feedback_weight - base[i].feedback_weight);
      neurons[i].bias += w * (p.neurons[i].bias - base[i].bias);
    }
  }
  return global;
}

void broadcast(const GlobalModel& global, std::span<DeviceReplica> devices) {
  for (auto& d : devices) {
    auto& p = d.net.params();
    for (int i = 0; i < p.neuron_count(); ++i) {
      p.neurons[i].weights = global.params.neurons[i].weights;
      p.neurons[i].feedback_weight = global.params.neurons[i].feedback_weight;
      p.neurons[i].bias = global.params.neurons[i].bias;
    }
    d.learner.clear_window();
  }
}

int rate_decode(const SpikeRaster& output, int upto) {
  if (upto < 1 || upto > output.horizon())
    throw ConfigError("rate_decode: upto out of range");
  int best = 0;
  long best_count = -1;
  for (int ch = 0; ch < output.channels(); ++ch) {
    long count = 0;
    for (int t = 0; t < upto; ++t) count += output.at(ch, t);
    if (count > best_count) {
      best_count = count;
      best = ch;
    }
  }
  return best;
}

double evaluate_network_accuracy(const snn::NetworkParams& params,
                                 const data::LabeledSpikeSet& test,
                                 std::uint64_t seed) {
  if (test.size() == 0) return 0.0;
  snn::GlmNetwork net(params);
  const int visible = params.visible_count();
  long correct = 0;
  for (std::size_t n = 0; n < test.size(); ++n) {
    RngStream rng(derive_seed(seed, seed_tags::eval, n));
    net.reset_state();
    SpikeRaster out(visible, test.horizon);
    for (int t = 0; t < test.horizon; ++t) {
      snn::StepResult r = net.step(test.rasters[n].column(t), nullptr, rng);
      for (int v = 0; v < visible; ++v)
        out.set(v, t, r.spikes[params.partition.visible[v]]);
    }
    if (rate_decode(out, test.horizon) == test.labels[n]) ++correct;
  }
  return static_cast<double>(correct) / test.size();
}

namespace {

// Per-device iteration state for the online presentation order.
struct DeviceCursor {
  RngStream sample_stream;
  RngStream order_stream;
  RngStream target_stream;
  std::vector<std::size_t> order;
  std::size_t position = 0;
  SpikeRaster target;
  const SpikeRaster* example = nullptr;
  double loss_sum = 0.0;
  long loss_steps = 0;

  explicit DeviceCursor(std::uint64_t seed)
      : sample_stream(derive_seed(seed, seed_tags::train)),
        order_stream(derive_seed(seed, seed_tags::order)),
        target_stream(derive_seed(seed, seed_tags::target)) {}
};

}  // namespace

std::vector<FLLogRow> run_fl(std::vector<DeviceReplica>& devices,
                             const FLSchedule& schedule,
                             const data::LabeledSpikeSet& test_set,
                             const RunOptions& options) {
  schedule.validate();
  if (devices.empty()) throw ProtocolError("run_fl: no devices");
  const int visible = devices[0].net.params().visible_count();
  for (const auto& d : devices) {
    if (d.net.params().visible_count() != visible)
      throw ProtocolError("run_fl: devices disagree on read-out size");
    if (d.dataset.horizon != static_cast<int>(schedule.horizon_t))
      throw ProtocolError("run_fl: dataset horizon does not match schedule");
  }

  auto eval = options.eval_hook;
  if (!eval) {
    eval = [&test_set](const snn::NetworkParams& p, std::uint64_t s) {
      return evaluate_network_accuracy(p, test_set, s);
    };
  }

  std::vector<DeviceCursor> cursors;
  cursors.reserve(devices.size());
  for (auto& d : devices) cursors.emplace_back(d.seed);

  std::vector<FLLogRow> log;
  const long total_steps = schedule.total_steps();
  const long t_horizon = schedule.horizon_t;

  auto log_phase = [&](long round, long wall_step, const char* phase) {
    for (std::size_t d = 0; d < devices.size(); ++d) {
      FLLogRow row;
      row.round = round;
      row.device = devices[d].id;
      row.wall_step = wall_step;
      row.train_loss = cursors[d].loss_steps
                           ? cursors[d].loss_sum / cursors[d].loss_steps
                           : 0.0;
      const std::uint64_t es =
          derive_seed(options.eval_seed_root, seed_tags::eval,
                      static_cast<std::uint64_t>(round * 2 +
                                                 (phase[1] == 'o' ? 1 : 0)));
      row.test_accuracy = eval(devices[d].net.params(), es);
      row.phase = phase;
      log.push_back(std::move(row));
    }
  };

  for (long step = 1; step <= total_steps; ++step) {
    const long step_in_example = (step - 1) % t_horizon;
    for (std::size_t d = 0; d < devices.size(); ++d) {
      auto& dev = devices[d];
      auto& cur = cursors[d];
      if (step_in_example == 0) {
        // next example: reshuffle at the start of each pass
        if (cur.position % dev.dataset.size() == 0) {
          cur.order.resize(dev.dataset.size());
          for (std::size_t i = 0; i < cur.order.size(); ++i) cur.order[i] = i;
          cur.order_stream.shuffle(cur.order);
          cur.position = 0;
        }
        const std::size_t idx = cur.order[cur.position++];
        cur.example = &dev.dataset.rasters[idx];
        cur.target = data::to_fl_target(dev.dataset.labels[idx], visible,
                                        static_cast<int>(t_horizon),
                                        cur.target_stream);
        dev.net.reset_state();
        dev.learner.begin_example();
      }
      dev.net.compute_potentials();
      const std::uint8_t* clamp_ptr =
          cur.target.column(static_cast<int>(step_in_example)).data();
      snn::StepResult r = dev.net.sample(clamp_ptr, cur.sample_stream);
      const double e = error_signal(r.visible_losses);
      dev.learner.observe(dev.net, r, clamp_ptr, e);
      dev.net.advance(cur.example->column(static_cast<int>(step_in_example)),
                      r.spikes);
      cur.loss_sum += e;
      ++cur.loss_steps;
    }

    if (step % schedule.delta_t == 0) {
      for (auto& dev : devices) dev.learner.apply(dev.net.params(), dev.learning_rate);
      const long local_iter = step / schedule.delta_t;
      if (local_iter % schedule.delta_j == 0) {
        const long round = local_iter / schedule.delta_j;
        log_phase(round, step, "pre_avg");
        GlobalModel global = global_average(devices);
        global.round_counter = round;
        broadcast(global, devices);
        if (options.reset_state_on_broadcast)
          for (auto& dev : devices) dev.net.reset_state();
        log_phase(round, step, "post_avg");
        for (std::size_t d = 0; d < devices.size(); ++d) {
          cursors[d].loss_sum = 0.0;
          cursors[d].loss_steps = 0;
        }
      }
    }
  }
  return log;
}

}  // namespace spikelink::fl
