#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "spikelink/data/dataset.hpp"
#include "spikelink/fl/protocol.hpp"

using namespace spikelink;
using namespace spikelink::data;

namespace {

std::string temp_path(const std::string& name) {
  return "spikelink_test_" + name;
}

LabeledSpikeSet random_set(int channels, int horizon, int count,
                           int class_count, std::uint64_t seed) {
  LabeledSpikeSet set;
  RngStream rng(seed);
  for (int n = 0; n < count; ++n) {
    SpikeRaster r(channels, horizon);
    for (int c = 0; c < channels; ++c)
      for (int t = 0; t < horizon; ++t) r.set(c, t, rng.bernoulli(0.35));
    set.add(std::move(r), n % class_count);
  }
  set.class_count = class_count;
  return set;
}

}  // namespace

TEST_SUITE_BEGIN("data");

TEST_CASE("synthetic: deterministic per seed, balanced, shaped") {
  SyntheticSpec spec;
  spec.count = 31;
  spec.seed = 5;
  const LabeledSpikeSet a = generate_synthetic(spec);
  const LabeledSpikeSet b = generate_synthetic(spec);
  REQUIRE(a.size() == 31);
  CHECK(a.labels == b.labels);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.rasters[i] == b.rasters[i]);

  int per_class[2] = {0, 0};
  for (int l : a.labels) ++per_class[l];
  CHECK(std::abs(per_class[0] - per_class[1]) <= 1);

  spec.seed = 6;
  const LabeledSpikeSet c = generate_synthetic(spec);
  bool all_equal = true;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a.rasters[i] == c.rasters[i])) all_equal = false;
  CHECK(!all_equal);
}

TEST_CASE("synthetic: same-class examples share the prototype support") {
  SyntheticSpec spec;
  spec.count = 40;
  spec.noise_flip = 0.0;
  spec.background_rate = 0.0;
  spec.active_rate = 1.0;
  const LabeledSpikeSet set = generate_synthetic(spec);
  // with rate 1 and no background, the active support is exactly the
  // channels that ever spike
  auto support = [&](std::size_t n) {
    std::set<int> s;
    for (int c = 0; c < set.channels; ++c)
      if (set.rasters[n].at(c, 0)) s.insert(c);
    return s;
  };
  CHECK(support(0) == support(2));  // both label 0
  CHECK(support(1) == support(3));  // both label 1
  CHECK(support(0) != support(1));
}

TEST_CASE("synthetic: prototype overlap concentrates near density^2") {
  // mean pairwise overlap fraction across many seeds
  double overlap_sum = 0.0;
  const int trials = 400;
  for (int s = 0; s < trials; ++s) {
    SyntheticSpec spec;
    spec.count = 0;
    spec.seed = 1000 + s;
    spec.pattern_density = 0.25;
    spec.channels = 64;
    // probe prototypes via noise-free full-rate examples
    spec.count = 2;
    spec.noise_flip = 0.0;
    spec.background_rate = 0.0;
    spec.active_rate = 1.0;
    spec.horizon = 1;
    const LabeledSpikeSet set = generate_synthetic(spec);
    int both = 0;
    for (int c = 0; c < 64; ++c)
      if (set.rasters[0].at(c, 0) && set.rasters[1].at(c, 0)) ++both;
    overlap_sum += static_cast<double>(both) / 64.0;
  }
  const double mean_overlap = overlap_sum / trials;
  CHECK(mean_overlap == doctest::Approx(0.0625).epsilon(0.2));
}

TEST_CASE("synthetic: paper-scale shape is accepted") {
  SyntheticSpec spec;
  spec.channels = 676;
  spec.horizon = 80;
  spec.count = 4;
  const LabeledSpikeSet set = generate_synthetic(spec);
  CHECK(set.rasters[0].channels() == 676);
  CHECK(set.rasters[0].horizon() == 80);
}

TEST_CASE("spkt: round trip is lossless") {
  const std::string path = temp_path("roundtrip.spkt");
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    RngStream shape_rng(seed);
    const int channels = 1 + static_cast<int>(shape_rng.below(40));
    const int horizon = 1 + static_cast<int>(shape_rng.below(30));
    const int count = static_cast<int>(shape_rng.below(12));
    LabeledSpikeSet set =
        random_set(channels, horizon, count, 3, 100 + seed);
    save_spkt(set, path);
    const LabeledSpikeSet loaded = load_spkt(path, 3);
    REQUIRE(loaded.size() == set.size());
    CHECK(loaded.channels == set.channels);
    CHECK(loaded.horizon == set.horizon);
    for (std::size_t i = 0; i < set.size(); ++i) {
      CHECK(loaded.rasters[i] == set.rasters[i]);
      CHECK(loaded.labels[i] == set.labels[i]);
    }
  }
  std::remove(temp_path("roundtrip.spkt").c_str());
}

TEST_CASE("spkt: empty set round trips") {
  const std::string path = temp_path("empty.spkt");
  LabeledSpikeSet set;
  set.channels = 8;
  set.horizon = 5;
  set.class_count = 1;
  save_spkt(set, path);
  const LabeledSpikeSet loaded = load_spkt(path);
  CHECK(loaded.size() == 0);
  CHECK(loaded.channels == 8);
  std::remove(path.c_str());
}

TEST_CASE("spkt: corrupted magic names offset 0") {
  const std::string path = temp_path("badmagic.spkt");
  LabeledSpikeSet set = random_set(4, 4, 2, 2, 7);
  save_spkt(set, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('X');
  }
  try {
    load_spkt(path);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("offset 0") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("spkt: truncated payload and bad labels are rejected") {
  const std::string path = temp_path("trunc.spkt");
  LabeledSpikeSet set = random_set(6, 7, 3, 2, 8);
  save_spkt(set, path);
  // truncate by one byte
  std::string blob;
  {
    std::ifstream f(path, std::ios::binary);
    blob.assign(std::istreambuf_iterator<char>(f),
                std::istreambuf_iterator<char>());
  }
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(blob.data(), static_cast<std::streamsize>(blob.size() - 1));
  }
  CHECK_THROWS_AS(load_spkt(path), DataError);

  // rewrite, then poison a label
  save_spkt(set, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(16);
    f.put(static_cast<char>(9));
  }
  CHECK_THROWS_AS(load_spkt(path, 2), DataError);
  std::remove(path.c_str());
}

TEST_CASE("csv raster fixture") {
  std::istringstream in("0,1,0,1\n1,1,0,0\n");
  const SpikeRaster r = load_raster_csv(in);
  CHECK(r.channels() == 2);
  CHECK(r.horizon() == 4);
  CHECK(r.at(0, 1) == 1);
  CHECK(r.at(1, 3) == 0);

  std::istringstream bad("0,2\n");
  CHECK_THROWS_AS(load_raster_csv(bad), DataError);
}

TEST_CASE("federated_split: partition properties") {
  const LabeledSpikeSet set = random_set(5, 6, 23, 2, 9);
  const auto shards = federated_split(set, {0, 1}, 2);
  REQUIRE(shards.size() == 2);
  CHECK(shards[0].size() + shards[1].size() == set.size());
  for (int l : shards[0].labels) CHECK(l == 0);
  for (int l : shards[1].labels) CHECK(l == 1);

  // all classes to one device
  const auto solo = federated_split(set, {0, 0}, 1);
  CHECK(solo[0].size() == set.size());

  // unassigned class rejected
  CHECK_THROWS_AS(federated_split(set, {0}, 2), ConfigError);
}

TEST_CASE("to_fl_target: deterministic, decodes back to the label") {
  RngStream rng_a(4), rng_b(4);
  const SpikeRaster a = to_fl_target(1, 2, 30, rng_a);
  const SpikeRaster b = to_fl_target(1, 2, 30, rng_b);
  CHECK(a == b);
  CHECK(fl::rate_decode(a, 30) == 1);

  // expected spike counts follow the rates
  long count_high = 0, count_low = 0;
  RngStream rng(5);
  const int reps = 200;
  for (int i = 0; i < reps; ++i) {
    const SpikeRaster t = to_fl_target(0, 2, 40, rng);
    for (int s = 0; s < 40; ++s) {
      count_high += t.at(0, s);
      count_low += t.at(1, s);
    }
  }
  CHECK(static_cast<double>(count_high) / (reps * 40) ==
        doctest::Approx(0.9).epsilon(0.05));
  CHECK(static_cast<double>(count_low) / (reps * 40) ==
        doctest::Approx(0.01).epsilon(0.5));
}

TEST_SUITE_END();
