#include "spikelink/data/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <istream>
#include <sstream>

#include "spikelink/errors.hpp"
#include "spikelink/jscc/pipeline.hpp"

namespace spikelink::data {

void LabeledSpikeSet::add(SpikeRaster raster, int label) {
  if (rasters.empty() && channels == 0) {
    channels = raster.channels();
    horizon = raster.horizon();
  }
  if (raster.channels() != channels || raster.horizon() != horizon)
    throw DataError("example shape does not match the set");
  if (label < 0) throw DataError("negative label");
  class_count = std::max(class_count, label + 1);
  rasters.push_back(std::move(raster));
  labels.push_back(label);
}

void LabeledSpikeSet::validate() const {
  if (rasters.size() != labels.size())
    throw DataError("raster/label count mismatch");
  for (const auto& r : rasters)
    if (r.channels() != channels || r.horizon() != horizon)
      throw DataError("inconsistent raster shape");
  for (int l : labels)
    if (l < 0 || l >= class_count) throw DataError("label out of range");
}

void SyntheticSpec::validate() const {
  if (channels < 1 || horizon < 1 || class_count < 1 || count < 0)
    throw ConfigError("synthetic spec: sizes must be positive");
  for (double p : {pattern_density, active_rate, background_rate, noise_flip})
    if (p < 0.0 || p > 1.0)
      throw ConfigError("synthetic spec: probabilities must lie in [0,1]");
}

LabeledSpikeSet generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  // Fixed per-class prototype supports, drawn without replacement.
  const int active_per_class = std::max(
      1, static_cast<int>(spec.pattern_density * spec.channels + 0.5));
  std::vector<std::vector<std::uint8_t>> active(
      spec.class_count, std::vector<std::uint8_t>(spec.channels, 0));
  for (int c = 0; c < spec.class_count; ++c) {
    RngStream proto(derive_seed(spec.seed, seed_tags::data,
                                static_cast<std::uint64_t>(c)));
    std::vector<int> idx(spec.channels);
    for (int i = 0; i < spec.channels; ++i) idx[i] = i;
    proto.shuffle(idx);
    for (int i = 0; i < active_per_class && i < spec.channels; ++i)
      active[c][idx[i]] = 1;
  }

  LabeledSpikeSet set;
  set.channels = spec.channels;
  set.horizon = spec.horizon;
  set.class_count = spec.class_count;
  for (int n = 0; n < spec.count; ++n) {
    const std::uint64_t global_index = spec.example_offset + n;
    const int label = static_cast<int>(global_index % spec.class_count);
    RngStream rng(derive_seed(spec.seed, seed_tags::example, global_index));
    SpikeRaster r(spec.channels, spec.horizon);
    for (int t = 0; t < spec.horizon; ++t) {
      for (int ch = 0; ch < spec.channels; ++ch) {
        const double rate =
            active[label][ch] ? spec.active_rate : spec.background_rate;
        bool bit = rng.bernoulli(rate);
        if (spec.noise_flip > 0.0 && rng.bernoulli(spec.noise_flip)) bit = !bit;
        r.set(ch, t, bit);
      }
    }
    set.add(std::move(r), label);
  }
  return set;
}

namespace {

void put_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32le(const std::string& in, std::size_t off) {
  return static_cast<std::uint8_t>(in[off]) |
         (static_cast<std::uint32_t>(static_cast<std::uint8_t>(in[off + 1])) << 8) |
         (static_cast<std::uint32_t>(static_cast<std::uint8_t>(in[off + 2])) << 16) |
         (static_cast<std::uint32_t>(static_cast<std::uint8_t>(in[off + 3])) << 24);
}

std::size_t packed_bytes(int channels, int horizon) {
  return (static_cast<std::size_t>(channels) * horizon + 7) / 8;
}

}  // namespace

void save_spkt(const LabeledSpikeSet& set, const std::string& path) {
  set.validate();
  std::string out;
  out.reserve(16 + set.size() * (1 + packed_bytes(set.channels, set.horizon)));
  out += "SPKT";
  put_u32le(out, static_cast<std::uint32_t>(set.channels));
  put_u32le(out, static_cast<std::uint32_t>(set.horizon));
  put_u32le(out, static_cast<std::uint32_t>(set.size()));
  for (std::size_t n = 0; n < set.size(); ++n) {
    out.push_back(static_cast<char>(set.labels[n]));
    const SpikeRaster& r = set.rasters[n];
    std::uint8_t byte = 0;
    int nbits = 0;
    // channel-major bit order, MSB first
    for (int ch = 0; ch < r.channels(); ++ch) {
      for (int t = 0; t < r.horizon(); ++t) {
        byte = static_cast<std::uint8_t>((byte << 1) | r.at(ch, t));
        if (++nbits == 8) {
          out.push_back(static_cast<char>(byte));
          byte = 0;
          nbits = 0;
        }
      }
    }
    if (nbits > 0)
      out.push_back(static_cast<char>(byte << (8 - nbits)));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("short write: " + path);
}

LabeledSpikeSet load_spkt(const std::string& path, int expected_class_count) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open: " + path);
  std::string in((std::istreambuf_iterator<char>(f)),
                 std::istreambuf_iterator<char>());
  if (in.size() < 16)
    throw DataError("SPKT header truncated at offset " +
                    std::to_string(in.size()) + ": " + path);
  if (in.compare(0, 4, "SPKT") != 0)
    throw DataError("bad SPKT magic at offset 0: " + path);
  const std::uint32_t channels = get_u32le(in, 4);
  const std::uint32_t horizon = get_u32le(in, 8);
  const std::uint32_t count = get_u32le(in, 12);
  if (channels < 1 || horizon < 1)
    throw DataError("SPKT header has zero shape at offset 4: " + path);
  const std::size_t payload = packed_bytes(static_cast<int>(channels),
                                           static_cast<int>(horizon));
  const std::size_t labeled_size = 16 + count * (1 + payload);
  const std::size_t unlabeled_size = 16 + count * payload;
  bool labeled;
  if (in.size() == labeled_size) {
    labeled = true;
  } else if (in.size() == unlabeled_size) {
    labeled = false;
  } else {
    throw DataError("SPKT payload truncated: expected " +
                    std::to_string(labeled_size) + " bytes, found " +
                    std::to_string(in.size()) + ": " + path);
  }

  LabeledSpikeSet set;
  set.channels = static_cast<int>(channels);
  set.horizon = static_cast<int>(horizon);
  set.class_count = std::max(1, expected_class_count);
  std::size_t off = 16;
  for (std::uint32_t n = 0; n < count; ++n) {
    int label = 0;
    if (labeled) {
      label = static_cast<std::uint8_t>(in[off]);
      if (expected_class_count > 0 && label >= expected_class_count)
        throw DataError("label " + std::to_string(label) +
                        " >= class count at offset " + std::to_string(off) +
                        ": " + path);
      ++off;
    }
    SpikeRaster r(static_cast<int>(channels), static_cast<int>(horizon));
    std::size_t bit = 0;
    for (int ch = 0; ch < r.channels(); ++ch) {
      for (int t = 0; t < r.horizon(); ++t, ++bit) {
        const std::uint8_t byte =
            static_cast<std::uint8_t>(in[off + bit / 8]);
        r.set(ch, t, (byte >> (7 - bit % 8)) & 1u);
      }
    }
    off += payload;
    set.add(std::move(r), label);
  }
  set.validate();
  return set;
}

SpikeRaster load_raster_csv(std::istream& in) {
  std::vector<std::vector<int>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<int> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      // trim spaces
      std::size_t a = cell.find_first_not_of(" \t\r");
      if (a == std::string::npos) throw DataError("empty CSV cell");
      std::size_t b = cell.find_last_not_of(" \t\r");
      cell = cell.substr(a, b - a + 1);
      if (cell == "0")
        row.push_back(0);
      else if (cell == "1")
        row.push_back(1);
      else
        throw DataError("CSV raster entries must be 0 or 1, got '" + cell + "'");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("empty CSV raster");
  for (const auto& r : rows)
    if (r.size() != rows.front().size())
      throw DataError("CSV raster rows have unequal lengths");
  return raster_from_rows(rows);
}

std::vector<LabeledSpikeSet> federated_split(
    const LabeledSpikeSet& set, const std::vector<int>& device_of_class,
    int device_count) {
  set.validate();
  if (static_cast<int>(device_of_class.size()) < set.class_count)
    throw ConfigError("federated_split: unassigned class");
  if (device_count < 1) throw ConfigError("federated_split: no devices");
  for (int d : device_of_class)
    if (d < 0 || d >= device_count)
      throw ConfigError("federated_split: device index out of range");
  std::vector<LabeledSpikeSet> shards(device_count);
  for (auto& s : shards) {
    s.channels = set.channels;
    s.horizon = set.horizon;
    s.class_count = set.class_count;
  }
  for (std::size_t n = 0; n < set.size(); ++n)
    shards[device_of_class[set.labels[n]]].add(set.rasters[n], set.labels[n]);
  return shards;
}

SpikeRaster to_fl_target(int label, int visible_count, int horizon,
                         RngStream& rng) {
  return jscc::rate_target(label, visible_count, horizon, kTargetHighRate,
                           kTargetLowRate, rng);
}

}  // namespace spikelink::data
