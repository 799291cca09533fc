#include "spikelink/jscc/serialize.hpp"

#include <cstring>

#include "spikelink/io.hpp"

namespace spikelink::jscc {

namespace {

constexpr char kMagic[4] = {'N', 'J', 'S', 'C'};
constexpr std::uint8_t kVersion = 1;

void append_f64le(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double read_f64le(const std::string& in, std::size_t& off,
                  const std::string& path) {
  if (off + 8 > in.size())
    throw DataError("parameter file truncated at offset " +
                    std::to_string(off) + ": " + path);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(in[off + i]))
            << (8 * i);
  off += 8;
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

void append_network(std::string& out, const snn::NetworkParams& p) {
  for (const auto& n : p.neurons) {
    for (double w : n.weights) append_f64le(out, w);
    append_f64le(out, n.feedback_weight);
    append_f64le(out, n.bias);
  }
}

void read_network(const std::string& in, std::size_t& off,
                  snn::NetworkParams& p, const std::string& path) {
  for (auto& n : p.neurons) {
    for (double& w : n.weights) w = read_f64le(in, off, path);
    n.feedback_weight = read_f64le(in, off, path);
    n.bias = read_f64le(in, off, path);
  }
}

std::string get(const std::map<std::string, std::string>& kv,
                const std::string& key, const std::string& path) {
  auto it = kv.find(key);
  if (it == kv.end())
    throw DataError("manifest misses key '" + key + "': " + path);
  return it->second;
}

}  // namespace

void save_pipeline(const Pipeline& pipeline, const std::string& path,
                   std::uint64_t seed) {
  std::string blob(kMagic, 4);
  blob.push_back(static_cast<char>(kVersion));
  if (pipeline.encoder) append_network(blob, pipeline.encoder->params());
  append_network(blob, pipeline.decoder.params());
  io::atomic_write_file(path, blob);

  const auto& c = pipeline.config;
  std::vector<std::pair<std::string, std::string>> kv = {
      {"format", "njsc"},
      {"version", std::to_string(kVersion)},
      {"d_o", std::to_string(c.d_o)},
      {"rate", io::format_double(c.rate)},
      {"d_x", std::to_string(c.d_x)},
      {"d_y", std::to_string(c.d_y)},
      {"encoder_hidden", std::to_string(c.encoder_hidden)},
      {"decoder_hidden", std::to_string(c.decoder_hidden)},
      {"d_v", std::to_string(c.d_v)},
      {"horizon", std::to_string(c.horizon)},
      {"target_high", io::format_double(c.target_high)},
      {"target_low", io::format_double(c.target_low)},
      {"encoder_bias_init", io::format_double(c.encoder_bias_init)},
      {"encoder_tau", io::format_double(c.encoder_tau)},
      {"encoder_taps", std::to_string(c.encoder_taps)},
      {"encoder_init", c.encoder_init},
      {"uncoded", c.uncoded ? "1" : "0"},
      {"channel_snr_db", io::format_double(pipeline.channel.snr_db)},
      {"channel_sigma", io::format_double(pipeline.channel.noise_sigma)},
      {"channel_threshold", io::format_double(pipeline.channel.threshold)},
      {"seed", std::to_string(seed)},
  };
  io::atomic_write_file(path + ".manifest", io::format_kv(kv));
}

Pipeline load_pipeline(const std::string& path) {
  const auto kv = io::parse_kv(io::read_file(path + ".manifest"));
  PipelineConfig config;
  config.d_o = std::stoi(get(kv, "d_o", path));
  config.rate = std::stod(get(kv, "rate", path));
  config.d_x = std::stoi(get(kv, "d_x", path));
  config.d_y = std::stoi(get(kv, "d_y", path));
  config.encoder_hidden = std::stoi(get(kv, "encoder_hidden", path));
  config.decoder_hidden = std::stoi(get(kv, "decoder_hidden", path));
  config.d_v = std::stoi(get(kv, "d_v", path));
  config.horizon = std::stoi(get(kv, "horizon", path));
  config.target_high = std::stod(get(kv, "target_high", path));
  config.target_low = std::stod(get(kv, "target_low", path));
  config.encoder_bias_init = std::stod(get(kv, "encoder_bias_init", path));
  config.encoder_tau = std::stod(get(kv, "encoder_tau", path));
  config.encoder_taps = std::stoi(get(kv, "encoder_taps", path));
  config.encoder_init = get(kv, "encoder_init", path);
  config.uncoded = get(kv, "uncoded", path) == "1";
  const std::uint64_t seed =
      static_cast<std::uint64_t>(std::stoull(get(kv, "seed", path)));

  Pipeline pipeline = make_pipeline(config, seed);
  pipeline.channel.snr_db = std::stod(get(kv, "channel_snr_db", path));
  pipeline.channel.noise_sigma = std::stod(get(kv, "channel_sigma", path));
  pipeline.channel.threshold = std::stod(get(kv, "channel_threshold", path));

  const std::string blob = io::read_file(path);
  if (blob.size() < 5 || std::memcmp(blob.data(), kMagic, 4) != 0)
    throw DataError("bad NJSC magic at offset 0: " + path);
  if (static_cast<std::uint8_t>(blob[4]) != kVersion)
    throw DataError("unsupported NJSC version at offset 4: " + path);
  std::size_t off = 5;
  if (pipeline.encoder) read_network(blob, off, pipeline.encoder->params(), path);
  read_network(blob, off, pipeline.decoder.params(), path);
  if (off != blob.size())
    throw DataError("parameter file has trailing bytes at offset " +
                    std::to_string(off) + ": " + path);
  return pipeline;
}

}  // namespace spikelink::jscc
