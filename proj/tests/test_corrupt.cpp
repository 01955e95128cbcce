#include <cmath>
#include <random>

#include <doctest.h>

#include "beambind/corrupt.hpp"
#include "beambind/errors.hpp"
#include "support.hpp"

using bb::CorruptConfig;
using bb::DropPolicy;
using bb::PointCloud;

TEST_CASE("corrupt: jitter degenerate cases are the identity") {
  std::mt19937_64 rng(1);
  const PointCloud cloud = bbtest::random_cloud(rng, 80, bbtest::tiny_taxonomy(), 8);

  CorruptConfig cfg;
  cfg.jitter_sigma = 0.0;
  cfg.jitter_fraction = 1.0;
  cfg.seed = 5;
  CHECK(bb::jitter(cloud, cfg).xyz == cloud.xyz);

  cfg.jitter_sigma = 0.5;
  cfg.jitter_fraction = 0.0;
  CHECK(bb::jitter(cloud, cfg).xyz == cloud.xyz);
}

TEST_CASE("corrupt: jitter noise matches the configured sigma") {
  const std::size_t n = 100000;
  PointCloud cloud = bb::make_clean_cloud(n);
  CorruptConfig cfg;
  cfg.jitter_sigma = 0.05;
  cfg.jitter_fraction = 1.0;
  cfg.seed = 11;
  const PointCloud out = bb::jitter(cloud, cfg);

  double sum = 0, sum2 = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (int a = 0; a < 3; ++a) {
      const double d = double(out.xyz[i][a]) - double(cloud.xyz[i][a]);
      sum += d;
      sum2 += d * d;
      ++count;
    }
  }
  const double mean = sum / count;
  const double std = std::sqrt(sum2 / count - mean * mean);
  CHECK(std == doctest::Approx(cfg.jitter_sigma).epsilon(0.02));

  // labels, intensity and origin indices are untouched
  CHECK(out.label == cloud.label);
  CHECK(out.intensity == cloud.intensity);
  CHECK(out.origin_index == cloud.origin_index);
}

TEST_CASE("corrupt: drop rate 0 is the identity") {
  std::mt19937_64 rng(2);
  const PointCloud cloud = bbtest::random_cloud(rng, 60, bbtest::tiny_taxonomy(), 8);
  for (DropPolicy policy : {DropPolicy::kNone, DropPolicy::kUniform, DropPolicy::kBeamBurst}) {
    CorruptConfig cfg;
    cfg.drop_policy = policy;
    cfg.drop_rate = 0.0;
    const PointCloud out = bb::drop(cloud, cfg);
    CHECK(out.size() == cloud.size());
    CHECK(out.origin_index == cloud.origin_index);
  }
}

TEST_CASE("corrupt: loss-guided drops the top scores") {
  PointCloud cloud = bb::make_clean_cloud(3);
  const std::vector<double> guidance = {3.0, 1.0, 2.0};
  CorruptConfig cfg;
  cfg.drop_policy = DropPolicy::kLossGuided;
  cfg.drop_rate = 1.0 / 3.0;
  const PointCloud out = bb::drop(cloud, cfg, &guidance);
  REQUIRE(out.size() == 2);
  CHECK(out.origin_index == std::vector<std::uint32_t>{1, 2});

  CHECK_THROWS_AS(bb::drop(cloud, cfg), bb::ConfigError);  // missing guidance
  const std::vector<double> short_guidance = {1.0};
  CHECK_THROWS_AS(bb::drop(cloud, cfg, &short_guidance), bb::ConfigError);
}

TEST_CASE("corrupt: uniform survivor fraction tracks the rate") {
  PointCloud cloud = bb::make_clean_cloud(100000);
  CorruptConfig cfg;
  cfg.drop_policy = DropPolicy::kUniform;
  cfg.drop_rate = 0.3;
  cfg.seed = 21;
  const PointCloud out = bb::drop(cloud, cfg);
  const double survivor_fraction = double(out.size()) / double(cloud.size());
  CHECK(survivor_fraction == doctest::Approx(0.7).epsilon(0.01));
}

TEST_CASE("corrupt: survivors are an exact subset of the input") {
  std::mt19937_64 rng(3);
  const PointCloud cloud = bbtest::random_cloud(rng, 500, bbtest::tiny_taxonomy(), 8);
  for (DropPolicy policy : {DropPolicy::kUniform, DropPolicy::kBeamBurst}) {
    CorruptConfig cfg;
    cfg.drop_policy = policy;
    cfg.drop_rate = 0.4;
    cfg.beam_burst_span = 5;
    cfg.seed = 31;
    const PointCloud out = bb::drop(cloud, cfg);
    std::uint32_t prev_origin = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const std::uint32_t o = out.origin_index[i];
      if (i > 0) CHECK(o > prev_origin);  // order preserved
      prev_origin = o;
      CHECK(out.xyz[i] == cloud.xyz[o]);
      CHECK(out.intensity[i] == cloud.intensity[o]);
      CHECK(out.label[i] == cloud.label[o]);
      CHECK(out.beam[i] == cloud.beam[o]);
    }
  }
}

TEST_CASE("corrupt: beam-burst stays inside the chosen windows and hits its rate") {
  std::mt19937_64 rng(4);
  const PointCloud cloud = bbtest::random_cloud(rng, 4000, bbtest::tiny_taxonomy(), 8);
  CorruptConfig cfg;
  cfg.drop_policy = DropPolicy::kBeamBurst;
  cfg.drop_rate = 0.25;
  cfg.beam_burst_span = 16;
  cfg.seed = 9;
  const PointCloud out = bb::drop(cloud, cfg);
  const std::size_t dropped = cloud.size() - out.size();
  const std::size_t target = static_cast<std::size_t>(0.25 * 4000);
  CHECK(dropped >= target);
  CHECK(dropped < target + cfg.beam_burst_span);  // overshoot bounded by one run

  PointCloud no_beams = cloud;
  std::fill(no_beams.beam.begin(), no_beams.beam.end(), bb::kNoBeam);
  CHECK_THROWS_AS(bb::drop(no_beams, cfg), bb::DataError);
}

TEST_CASE("corrupt: corruption commutes with class relabeling") {
  std::mt19937_64 rng(5);
  const bb::Taxonomy tax = bbtest::tiny_taxonomy();
  const PointCloud cloud = bbtest::random_cloud(rng, 300, tax, 8);
  CorruptConfig cfg;
  cfg.jitter_sigma = 0.05;
  cfg.jitter_fraction = 0.5;
  cfg.drop_policy = DropPolicy::kUniform;
  cfg.drop_rate = 0.3;
  cfg.seed = 17;

  auto relabel = [](PointCloud c) {
    for (auto& l : c.label) l = l + 40;  // any injective relabeling
    return c;
  };
  const PointCloud a = relabel(bb::corrupt(cloud, cfg));
  const PointCloud b = bb::corrupt(relabel(cloud), cfg);
  CHECK(a.xyz == b.xyz);
  CHECK(a.label == b.label);
  CHECK(a.origin_index == b.origin_index);
}

TEST_CASE("corrupt: config validation") {
  CorruptConfig cfg;
  cfg.drop_rate = 1.0;
  CHECK_THROWS_AS(bb::validate(cfg), bb::ConfigError);
  cfg.drop_rate = 0.5;
  cfg.jitter_sigma = -1.0;
  CHECK_THROWS_AS(bb::validate(cfg), bb::ConfigError);
}
