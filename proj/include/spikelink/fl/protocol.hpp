#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spikelink/data/dataset.hpp"
#include "spikelink/fl/schedule.hpp"
#include "spikelink/snn/learning.hpp"
#include "spikelink/snn/network.hpp"

namespace spikelink::fl {

// One participating device: a local replica of the model, its data shard,
// and the learner accumulating updates for the current interval.
struct DeviceReplica {
  int id = 0;
  snn::GlmNetwork net;
  data::LabeledSpikeSet dataset;
  double dataset_weight = 0.0;  // |D^(d)|
  snn::OnlineLearner learner;
  double learning_rate = 0.05;
  std::uint64_t seed = 1;

  DeviceReplica(int id_, snn::NetworkParams params,
                data::LabeledSpikeSet shard, double lr, std::uint64_t seed_,
                snn::LearnerOptions opt = {});
};

struct GlobalModel {
  snn::NetworkParams params;
  long round_counter = 0;
};

// Summed read-out loss for one step: the scalar broadcast to hidden units.
double error_signal(std::span<const double> visible_losses);

// Dataset-size-weighted parameter mean. Weights are normalized before the
// accumulation so that averaging identical replicas reproduces them
// bit-exactly.
GlobalModel global_average(std::span<const DeviceReplica> devices);

// Replace every device's parameters with the global ones and clear the
// pending update windows.
void broadcast(const GlobalModel& global, std::span<DeviceReplica> devices);

// Class decision by spike count over the read-out rows, restricted to steps
// 1..upto; ties go to the lowest index.
int rate_decode(const SpikeRaster& output, int upto);

// Unclamped accuracy of a parameter set on a labeled test set.
double evaluate_network_accuracy(const snn::NetworkParams& params,
                                 const data::LabeledSpikeSet& test,
                                 std::uint64_t seed);

struct FLLogRow {
  long round = 0;
  int device = 0;
  long wall_step = 0;
  double train_loss = 0.0;
  double test_accuracy = 0.0;
  std::string phase;  // "pre_avg" | "post_avg"
};

struct RunOptions {
  bool reset_state_on_broadcast = false;
  std::ostream* warn = nullptr;
  // Evaluates a parameter snapshot; defaults to rate-decode accuracy on the
  // test set handed to run_fl.
  std::function<double(const snn::NetworkParams&, std::uint64_t eval_seed)>
      eval_hook;
  std::uint64_t eval_seed_root = 1;
};

// Online federated training: every device presents its shard one example
// per T-step window (seeded shuffled order, state reset at example
// boundaries), applies a local update every delta_t steps, and participates
// in an average + multicast broadcast every delta_j local updates.
// Evaluation runs right before each average and right after the broadcast.
std::vector<FLLogRow> run_fl(std::vector<DeviceReplica>& devices,
                             const FLSchedule& schedule,
                             const data::LabeledSpikeSet& test_set,
                             const RunOptions& options = {});

}  // namespace spikelink::fl
