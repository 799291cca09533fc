// spikelink: seeded experiment runner for spiking federated learning and
// joint source-channel coding studies.
//
// Subcommands: gen-data, fl-train, jscc-train, jscc-eval.
// Exit codes: 0 success, 2 configuration error, 3 data error.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spikelink/channel/channel.hpp"
#include "spikelink/data/dataset.hpp"
#include "spikelink/fl/protocol.hpp"
#include "spikelink/io.hpp"
#include "spikelink/jscc/pipeline.hpp"
#include "spikelink/jscc/serialize.hpp"

using namespace spikelink;

namespace {

using KV = std::vector<std::pair<std::string, std::string>>;

std::string fmt(double v) { return io::format_double(v); }

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
  data::SyntheticSpec spec;
  std::string out;
};

int run_gen_data(const GenDataArgs& args) {
  const data::LabeledSpikeSet set = data::generate_synthetic(args.spec);
  data::save_spkt(set, args.out);
  std::printf("wrote %zu examples (%d x %d, %d classes) to %s\n", set.size(),
              set.channels, set.horizon, set.class_count, args.out.c_str());
  return 0;
}

// ---------------------------------------------------------------- fl-train

struct FlTrainArgs {
  std::string data_path;
  std::string test_path;
  double test_fraction = 0.25;
  int devices = 2;
  int delta_t = 10;
  int delta_j = 1;
  double lr = 0.05;
  long rounds = 40;
  int repeats = 1;
  int hidden = 4;
  std::string split_mode = "class";
  bool baseline = false;
  bool reset_on_broadcast = false;
  std::uint64_t seed = 1;
  std::string out;
  std::string detail_out;
};

void stratified_holdout(const data::LabeledSpikeSet& all, double fraction,
                        std::uint64_t seed, data::LabeledSpikeSet& train,
                        data::LabeledSpikeSet& test) {
  train.channels = test.channels = all.channels;
  train.horizon = test.horizon = all.horizon;
  train.class_count = test.class_count = all.class_count;
  std::vector<std::size_t> order(all.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  RngStream rng(derive_seed(seed, seed_tags::data, 7));
  rng.shuffle(order);
  std::vector<long> test_quota(all.class_count, 0);
  std::vector<long> class_total(all.class_count, 0);
  for (int l : all.labels) ++class_total[l];
  for (int c = 0; c < all.class_count; ++c)
    test_quota[c] = std::lround(fraction * class_total[c]);
  for (std::size_t i : order) {
    const int label = all.labels[i];
    if (test_quota[label] > 0) {
      test.add(all.rasters[i], label);
      --test_quota[label];
    } else {
      train.add(all.rasters[i], label);
    }
  }
}

int run_fl_train(const FlTrainArgs& args, const KV& provenance) {
  const data::LabeledSpikeSet all = data::load_spkt(args.data_path);
  data::LabeledSpikeSet train, test;
  if (!args.test_path.empty()) {
    train = all;
    test = data::load_spkt(args.test_path);
  } else {
    stratified_holdout(all, args.test_fraction, args.seed, train, test);
  }
  if (test.size() == 0) throw DataError("fl-train: empty test set");
  if (args.split_mode != "class" && args.split_mode != "iid")
    throw ConfigError("--split must be 'class' or 'iid'");

  const fl::FLSchedule schedule = fl::FLSchedule::from_rounds(
      args.rounds, train.horizon, args.delta_t, args.delta_j, &std::cerr);

  io::CsvDoc summary;
  summary.provenance = provenance;
  summary.columns = {"round", "wall_step", "phase"};
  for (int r = 0; r < args.repeats; ++r)
    summary.columns.push_back("accuracy_rep" + std::to_string(r));
  summary.columns.push_back("accuracy_mean");
  summary.columns.push_back("train_loss_mean");

  io::CsvDoc detail;
  detail.provenance = provenance;
  detail.columns = {"repeat", "round",      "device",       "wall_step",
                    "phase",  "train_loss", "test_accuracy"};

  std::map<std::pair<long, std::string>, std::vector<double>> acc_cells;
  std::map<std::pair<long, std::string>, double> loss_cells;
  std::map<std::pair<long, std::string>, long> step_of;

  for (int rep = 0; rep < args.repeats; ++rep) {
    const std::uint64_t rep_seed = derive_seed(
        args.seed, seed_tags::repeat, static_cast<std::uint64_t>(rep));

    std::vector<data::LabeledSpikeSet> shards;
    if (args.split_mode == "class") {
      std::vector<int> device_of_class(train.class_count);
      for (int c = 0; c < train.class_count; ++c)
        device_of_class[c] = c % args.devices;
      shards = data::federated_split(train, device_of_class, args.devices);
    } else {
      shards.assign(args.devices, {});
      for (auto& s : shards) {
        s.channels = train.channels;
        s.horizon = train.horizon;
        s.class_count = train.class_count;
      }
      for (std::size_t i = 0; i < train.size(); ++i)
        shards[i % args.devices].add(train.rasters[i], train.labels[i]);
    }

    snn::NetworkParams init = snn::make_classifier_network(
        train.channels, args.hidden, train.class_count);
    snn::init_params(init, derive_seed(rep_seed, seed_tags::neuron_init));

    snn::LearnerOptions lopt;
    lopt.use_baseline = args.baseline;
    std::vector<fl::DeviceReplica> replicas;
    for (int d = 0; d < args.devices; ++d)
      replicas.emplace_back(d, init, shards[d], args.lr,
                            derive_seed(rep_seed, seed_tags::device,
                                        static_cast<std::uint64_t>(d)),
                            lopt);

    fl::RunOptions opt;
    opt.reset_state_on_broadcast = args.reset_on_broadcast;
    opt.eval_seed_root = rep_seed;
    opt.warn = &std::cerr;
    const auto log = fl::run_fl(replicas, schedule, test, opt);

    std::map<std::pair<long, std::string>, std::pair<double, double>> agg;
    std::map<std::pair<long, std::string>, int> agg_n;
    for (const auto& row : log) {
      detail.rows.push_back({std::to_string(rep), std::to_string(row.round),
                             std::to_string(row.device),
                             std::to_string(row.wall_step), row.phase,
                             fmt(row.train_loss), fmt(row.test_accuracy)});
      const auto key = std::make_pair(row.round, row.phase);
      agg[key].first += row.test_accuracy;
      agg[key].second += row.train_loss;
      agg_n[key] += 1;
      step_of[key] = row.wall_step;
    }
    for (const auto& [key, sums] : agg) {
      acc_cells[key].push_back(sums.first / agg_n[key]);
      loss_cells[key] += sums.second / agg_n[key] / args.repeats;
    }
  }

  for (const auto& [key, accs] : acc_cells) {
    std::vector<std::string> row = {std::to_string(key.first),
                                    std::to_string(step_of[key]), key.second};
    double mean = 0;
    for (double a : accs) {
      row.push_back(fmt(a));
      mean += a;
    }
    row.push_back(fmt(mean / accs.size()));
    row.push_back(fmt(loss_cells[key]));
    summary.rows.push_back(std::move(row));
  }
  summary.write(args.out);
  if (!args.detail_out.empty()) detail.write(args.detail_out);
  std::printf("wrote %s (%zu rows)\n", args.out.c_str(), summary.rows.size());
  return 0;
}

// ---------------------------------------------------------------- jscc-*

struct JsccTrainArgs {
  std::string data_path;
  double rate = 1.0;
  double train_snr_db = -8.0;
  int epochs = 3;
  double lr = 0.01;
  int decoder_hidden = -1;
  double encoder_bias = 0.0;
  bool uncoded = false;
  bool baseline = false;
  std::uint64_t seed = 1;
  std::string out;
  std::string curve_out;
};

int run_jscc_train(const JsccTrainArgs& args, const KV& provenance) {
  const data::LabeledSpikeSet train = data::load_spkt(args.data_path);
  if (train.size() == 0) throw DataError("jscc-train: empty training set");

  jscc::PipelineConfig cfg = jscc::PipelineConfig::from_rate(
      train.channels, args.uncoded ? 1.0 : args.rate, train.class_count,
      train.horizon, args.decoder_hidden);
  cfg.uncoded = args.uncoded;
  cfg.encoder_bias_init = args.encoder_bias;
  jscc::Pipeline pipeline = jscc::make_pipeline(cfg, args.seed);

  jscc::TrainOptions opt;
  opt.epochs = args.epochs;
  opt.learning_rate = args.lr;
  opt.train_snr_db = args.train_snr_db;
  opt.use_baseline = args.baseline;
  const auto stats = jscc::train_pipeline(pipeline, train, opt, args.seed);

  jscc::save_pipeline(pipeline, args.out, args.seed);
  if (!args.curve_out.empty()) {
    io::CsvDoc curve;
    curve.provenance = provenance;
    curve.columns = {"epoch", "mean_bound", "tx_density", "noise_sigma"};
    for (const auto& s : stats)
      curve.rows.push_back({std::to_string(s.epoch), fmt(s.mean_bound),
                            fmt(s.density), fmt(s.sigma)});
    curve.write(args.curve_out);
  }
  std::printf("wrote %s (%d epochs, final bound %s)\n", args.out.c_str(),
              args.epochs, fmt(stats.back().mean_bound).c_str());
  return 0;
}

struct JsccEvalArgs {
  std::string model_path;
  std::string baseline_model;
  std::string test_path;
  double snr_db = -8.0;
  std::vector<double> snr_grid = {-12, -8, -4, 0, 6};
  int repeats = 3;
  std::uint64_t seed = 1;
  std::string out_prefix;
};

std::string plot_script(const std::string& prefix, bool with_baseline) {
  std::string s;
  s += "#!/usr/bin/env python3\n";
  s += "\"\"\"Plots the accuracy CSVs emitted by spikelink jscc-eval.\"\"\"\n";
  s += "import csv\n";
  s += "import matplotlib\n";
  s += "matplotlib.use(\"Agg\")\n";
  s += "import matplotlib.pyplot as plt\n\n";
  s += "def load(path):\n";
  s += "    with open(path) as f:\n";
  s += "        rows = [r for r in csv.reader(f) if not r[0].startswith(\"#\")]\n";
  s += "    header, body = rows[0], rows[1:]\n";
  s += "    return {h: [float(r[i]) for r in body] for i, h in enumerate(header)}\n\n";
  s += "prefix = \"" + prefix + "\"\n";
  s += "fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))\n";
  s += "vt = load(prefix + \"acc_vs_time.csv\")\n";
  s += "ax1.plot(vt[\"t\"], vt[\"accuracy\"], label=\"neurojscc\")\n";
  if (with_baseline)
    s += "ax1.plot(vt[\"t\"], vt[\"accuracy_uncoded\"], label=\"uncoded\")\n";
  s += "ax1.set_xlabel(\"observation steps\")\n";
  s += "ax1.set_ylabel(\"test accuracy\")\n";
  s += "ax1.legend()\n";
  s += "vs = load(prefix + \"acc_vs_snr.csv\")\n";
  s += "ax2.plot(vs[\"snr_db\"], vs[\"accuracy\"], marker=\"o\", label=\"neurojscc\")\n";
  if (with_baseline)
    s += "ax2.plot(vs[\"snr_db\"], vs[\"accuracy_uncoded\"], marker=\"s\", "
         "label=\"uncoded\")\n";
  s += "ax2.set_xlabel(\"evaluation SNR (dB)\")\n";
  s += "ax2.set_ylabel(\"final-step accuracy\")\n";
  s += "ax2.legend()\n";
  s += "fig.tight_layout()\n";
  s += "fig.savefig(prefix + \"figures.png\", dpi=150)\n";
  s += "print(\"wrote\", prefix + \"figures.png\")\n";
  return s;
}

int run_jscc_eval(const JsccEvalArgs& args, const KV& provenance) {
  jscc::Pipeline pipeline = jscc::load_pipeline(args.model_path);
  const data::LabeledSpikeSet test = data::load_spkt(args.test_path);
  if (test.size() == 0) throw DataError("jscc-eval: empty test set");
  std::optional<jscc::Pipeline> baseline;
  if (!args.baseline_model.empty())
    baseline = jscc::load_pipeline(args.baseline_model);

  // accuracy vs observation time at the requested SNR
  auto time_curve = [&](jscc::Pipeline& p) {
    const double density = std::max(
        1e-4, jscc::measure_output_density(
                  p, test, 32, derive_seed(args.seed, seed_tags::calibration)));
    p.channel.noise_sigma = channel::calibrate_sigma(density, args.snr_db);
    p.channel.snr_db = args.snr_db;
    std::vector<double> mean(test.horizon, 0.0);
    for (int rep = 0; rep < args.repeats; ++rep) {
      const auto curve = jscc::evaluate_accuracy_vs_time(
          p, test,
          derive_seed(args.seed, seed_tags::repeat,
                      static_cast<std::uint64_t>(rep)));
      for (int t = 0; t < test.horizon; ++t) mean[t] += curve[t];
    }
    for (double& m : mean) m /= args.repeats;
    return mean;
  };

  const auto jscc_curve = time_curve(pipeline);
  std::vector<double> base_curve;
  if (baseline) base_curve = time_curve(*baseline);

  io::CsvDoc vs_time;
  vs_time.provenance = provenance;
  vs_time.columns = {"t", "accuracy"};
  if (baseline) vs_time.columns.push_back("accuracy_uncoded");
  for (int t = 0; t < test.horizon; ++t) {
    std::vector<std::string> row = {std::to_string(t + 1), fmt(jscc_curve[t])};
    if (baseline) row.push_back(fmt(base_curve[t]));
    vs_time.rows.push_back(std::move(row));
  }
  vs_time.write(args.out_prefix + "acc_vs_time.csv");

  // accuracy vs SNR
  const auto grid_acc = jscc::evaluate_accuracy_vs_snr(
      pipeline, test, args.snr_grid, args.repeats, args.seed);
  std::vector<double> base_grid;
  if (baseline)
    base_grid = jscc::evaluate_accuracy_vs_snr(*baseline, test, args.snr_grid,
                                               args.repeats, args.seed);
  io::CsvDoc vs_snr;
  vs_snr.provenance = provenance;
  vs_snr.columns = {"snr_db", "accuracy"};
  if (baseline) vs_snr.columns.push_back("accuracy_uncoded");
  for (std::size_t g = 0; g < args.snr_grid.size(); ++g) {
    std::vector<std::string> row = {fmt(args.snr_grid[g]), fmt(grid_acc[g])};
    if (baseline) row.push_back(fmt(base_grid[g]));
    vs_snr.rows.push_back(std::move(row));
  }
  vs_snr.write(args.out_prefix + "acc_vs_snr.csv");

  io::atomic_write_file(args.out_prefix + "plot.py",
                        plot_script(args.out_prefix, baseline.has_value()));
  std::printf("wrote %sacc_vs_time.csv, %sacc_vs_snr.csv, %splot.py\n",
              args.out_prefix.c_str(), args.out_prefix.c_str(),
              args.out_prefix.c_str());
  return 0;
}

KV collect_provenance(const CLI::App* cmd, std::uint64_t seed) {
  KV kv;
  kv.emplace_back("tool", "spikelink " + cmd->get_name());
  kv.emplace_back("seed", std::to_string(seed));
  for (const CLI::Option* opt : cmd->get_options()) {
    if (opt->get_name() == "--help" || opt->get_name() == "--config") continue;
    std::string value =
        opt->count() ? opt->as<std::string>() : opt->get_default_str();
    if (value.empty()) continue;
    for (char& c : value)
      if (c == '\n' || c == ',') c = ' ';
    kv.emplace_back(opt->get_name(), value);
  }
  return kv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spiking-network link simulator: federated training and "
               "joint source-channel coding over a noisy binary channel"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; flags override it");

  GenDataArgs gen;
  CLI::App* cmd_gen = app.add_subcommand(
      "gen-data", "generate a synthetic labeled spike-train file (SPKT v1)");
  cmd_gen->add_option("--channels", gen.spec.channels, "sensor channels d_o")
      ->default_val(64)
      ->check(CLI::PositiveNumber);
  cmd_gen->add_option("--horizon", gen.spec.horizon, "time steps T per example")
      ->default_val(40)
      ->check(CLI::PositiveNumber);
  cmd_gen->add_option("--classes", gen.spec.class_count, "class count")
      ->default_val(2)
      ->check(CLI::PositiveNumber);
  cmd_gen->add_option("--count", gen.spec.count, "number of examples")
      ->default_val(200)
      ->check(CLI::NonNegativeNumber);
  cmd_gen
      ->add_option("--density", gen.spec.pattern_density,
                   "fraction of channels in each class prototype")
      ->default_val(0.2)
      ->check(CLI::Range(0.0, 1.0));
  cmd_gen
      ->add_option("--active-rate", gen.spec.active_rate,
                   "spike rate on prototype channels")
      ->default_val(0.5)
      ->check(CLI::Range(0.0, 1.0));
  cmd_gen
      ->add_option("--background-rate", gen.spec.background_rate,
                   "spike rate off the prototype")
      ->default_val(0.02)
      ->check(CLI::Range(0.0, 1.0));
  cmd_gen->add_option("--flip", gen.spec.noise_flip, "per-bit corruption rate")
      ->default_val(0.05)
      ->check(CLI::Range(0.0, 1.0));
  cmd_gen->add_option("--seed", gen.spec.seed, "generation seed")
      ->default_val(1);
  cmd_gen
      ->add_option("--example-offset", gen.spec.example_offset,
                   "first example index; same seed + disjoint offsets share "
                   "class prototypes but not examples")
      ->default_val(0);
  cmd_gen->add_option("--out", gen.out, "output .spkt path")->required();

  FlTrainArgs flt;
  CLI::App* cmd_fl = app.add_subcommand(
      "fl-train", "federated online training of on-device networks");
  cmd_fl->add_option("--data", flt.data_path, "training SPKT file")->required();
  cmd_fl->add_option("--test-data", flt.test_path,
                     "test SPKT file (default: stratified holdout)");
  cmd_fl
      ->add_option("--test-frac", flt.test_fraction,
                   "holdout fraction when --test-data is absent")
      ->default_val(0.25)
      ->check(CLI::Range(0.0, 0.9));
  cmd_fl->add_option("--devices", flt.devices, "participating devices")
      ->default_val(2)
      ->check(CLI::PositiveNumber);
  cmd_fl->add_option("--delta-t", flt.delta_t, "steps per local update")
      ->default_val(10)
      ->check(CLI::PositiveNumber);
  cmd_fl
      ->add_option("--delta-j", flt.delta_j,
                   "local updates per communication round")
      ->default_val(1)
      ->check(CLI::PositiveNumber);
  cmd_fl->add_option("--lr", flt.lr, "learning rate")->default_val(0.05);
  cmd_fl->add_option("--rounds", flt.rounds, "communication rounds")
      ->default_val(40)
      ->check(CLI::PositiveNumber);
  cmd_fl->add_option("--repeats", flt.repeats, "seeded repetitions to average")
      ->default_val(1)
      ->check(CLI::PositiveNumber);
  cmd_fl->add_option("--hidden", flt.hidden, "hidden neurons per device model")
      ->default_val(4)
      ->check(CLI::NonNegativeNumber);
  cmd_fl
      ->add_option("--split", flt.split_mode,
                   "shard assignment: class (non-IID) or iid")
      ->default_val("class");
  cmd_fl->add_flag("--error-baseline", flt.baseline,
                   "subtract a moving-average baseline from the error signal");
  cmd_fl->add_flag("--reset-on-broadcast", flt.reset_on_broadcast,
                   "also reset neuron state after every broadcast");
  cmd_fl->add_option("--seed", flt.seed, "root seed")->default_val(1);
  cmd_fl->add_option("--out", flt.out, "summary CSV path")->required();
  cmd_fl->add_option("--detail-out", flt.detail_out,
                     "per-device round log CSV path");

  JsccTrainArgs jt;
  CLI::App* cmd_jt = app.add_subcommand(
      "jscc-train", "train the spiking source-channel pipeline");
  cmd_jt->add_option("--data", jt.data_path, "training SPKT file")->required();
  cmd_jt->add_option("--rate", jt.rate, "d_x / d_o; rate * d_o must be whole")
      ->default_val(1.0);
  cmd_jt
      ->add_option("--train-snr-db", jt.train_snr_db,
                   "per-symbol training SNR in dB")
      ->default_val(-8.0);
  cmd_jt->add_option("--epochs", jt.epochs, "training epochs")
      ->default_val(3)
      ->check(CLI::PositiveNumber);
  cmd_jt->add_option("--lr", jt.lr, "learning rate")->default_val(0.01);
  cmd_jt
      ->add_option("--decoder-hidden", jt.decoder_hidden,
                   "decoder hidden neurons (default d_x)")
      ->default_val(-1);
  cmd_jt
      ->add_option("--encoder-bias", jt.encoder_bias,
                   "initial encoder bias (negative starts sparse)")
      ->default_val(0.0);
  cmd_jt->add_flag("--uncoded", jt.uncoded,
                   "train the OOK pass-through reference receiver instead");
  cmd_jt->add_flag("--error-baseline", jt.baseline,
                   "subtract a moving-average baseline from the error signal");
  cmd_jt->add_option("--seed", jt.seed, "root seed")->default_val(1);
  cmd_jt->add_option("--out", jt.out, "output model path (.njsc)")->required();
  cmd_jt->add_option("--curve-out", jt.curve_out, "per-epoch training CSV");

  JsccEvalArgs je;
  CLI::App* cmd_je = app.add_subcommand(
      "jscc-eval", "evaluate a trained pipeline over time and SNR");
  cmd_je->add_option("--model", je.model_path, "trained .njsc model")
      ->required();
  cmd_je->add_option("--baseline-model", je.baseline_model,
                     "uncoded .njsc model to overlay");
  cmd_je->add_option("--test-data", je.test_path, "test SPKT file")->required();
  cmd_je
      ->add_option("--snr-db", je.snr_db, "SNR for the accuracy-vs-time curve")
      ->default_val(-8.0);
  cmd_je
      ->add_option("--snr-grid", je.snr_grid,
                   "SNR grid (dB) for the accuracy-vs-SNR curve")
      ->delimiter(',');
  cmd_je->add_option("--repeats", je.repeats, "realizations to average")
      ->default_val(3)
      ->check(CLI::PositiveNumber);
  cmd_je->add_option("--seed", je.seed, "root seed")->default_val(1);
  cmd_je->add_option("--out-prefix", je.out_prefix, "output path prefix")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
      return app.exit(e);
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (cmd_gen->parsed()) return run_gen_data(gen);
    if (cmd_fl->parsed())
      return run_fl_train(flt, collect_provenance(cmd_fl, flt.seed));
    if (cmd_jt->parsed())
      return run_jscc_train(jt, collect_provenance(cmd_jt, jt.seed));
    if (cmd_je->parsed())
      return run_jscc_eval(je, collect_provenance(cmd_je, je.seed));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const ProtocolError& e) {
    std::cerr << "protocol error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
