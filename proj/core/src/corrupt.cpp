#include "beambind/corrupt.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "beambind/errors.hpp"
#include "beambind/rng.hpp"

namespace bb {
namespace {

constexpr std::uint64_t kJitterStream = 0x6A177E5ull;
constexpr std::uint64_t kDropStream = 0xD209ull;

PointCloud take_subset(const PointCloud& cloud, const std::vector<char>& keep) {
  PointCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (keep[i]) {
      out.push_point(cloud.xyz[i], cloud.intensity[i], cloud.label[i], cloud.beam[i],
                     cloud.origin_index[i]);
    }
  }
  return out;
}

}  // namespace

void validate(const CorruptConfig& cfg) {
  if (cfg.jitter_sigma < 0) throw ConfigError("jitter_sigma must be >= 0");
  if (cfg.jitter_fraction < 0 || cfg.jitter_fraction > 1) {
    throw ConfigError("jitter_fraction must be in [0, 1]");
  }
  if (cfg.drop_rate < 0 || cfg.drop_rate >= 1) throw ConfigError("drop_rate must be in [0, 1)");
  if (cfg.beam_burst_span < 1) throw ConfigError("beam_burst_span must be >= 1");
}

PointCloud jitter(const PointCloud& cloud, const CorruptConfig& cfg) {
  check_consistent(cloud);
  validate(cfg);
  PointCloud out = cloud;
  if (cfg.jitter_sigma == 0.0 || cfg.jitter_fraction == 0.0) return out;

  std::mt19937_64 rng(mix_seed(cfg.seed, kJitterStream));
  std::bernoulli_distribution pick(cfg.jitter_fraction);
  std::normal_distribution<double> noise(0.0, cfg.jitter_sigma);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!pick(rng)) continue;
    for (int a = 0; a < 3; ++a) {
      out.xyz[i][a] = static_cast<float>(out.xyz[i][a] + noise(rng));
    }
  }
  return out;
}

PointCloud drop(const PointCloud& cloud, const CorruptConfig& cfg,
                const std::vector<double>* guidance) {
  check_consistent(cloud);
  validate(cfg);
  const std::size_t n = cloud.size();
  std::vector<char> keep(n, 1);

  if (cfg.drop_policy == DropPolicy::kNone || cfg.drop_rate == 0.0 || n == 0) {
    return take_subset(cloud, keep);
  }

  switch (cfg.drop_policy) {
    case DropPolicy::kUniform: {
      std::mt19937_64 rng(mix_seed(cfg.seed, kDropStream));
      std::bernoulli_distribution die(cfg.drop_rate);
      for (std::size_t i = 0; i < n; ++i) {
        if (die(rng)) keep[i] = 0;
      }
      break;
    }
    case DropPolicy::kLossGuided: {
      if (!guidance) throw ConfigError("loss-guided drop needs per-point guidance scores");
      if (guidance->size() != n) {
        throw ConfigError("guidance length " + std::to_string(guidance->size()) +
                          " does not match point count " + std::to_string(n));
      }
      const std::size_t k =
          static_cast<std::size_t>(std::floor(cfg.drop_rate * static_cast<double>(n)));
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      // Highest score first; score ties drop the earlier point.
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return (*guidance)[a] > (*guidance)[b];
      });
      for (std::size_t i = 0; i < k; ++i) keep[order[i]] = 0;
      break;
    }
    case DropPolicy::kBeamBurst: {
      if (!cloud.has_beams()) throw DataError("beam-burst drop needs beam ids assigned");
      // Azimuth-ordered point lists per beam; runs wrap around the circle.
      std::map<std::int32_t, std::vector<std::size_t>> by_beam;
      for (std::size_t i = 0; i < n; ++i) by_beam[cloud.beam[i]].push_back(i);
      std::vector<std::vector<std::size_t>> beams;
      for (auto& [beam_id, idx] : by_beam) {
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
          return point_azimuth(cloud.xyz[a]) < point_azimuth(cloud.xyz[b]);
        });
        beams.push_back(std::move(idx));
      }
      const std::size_t target =
          static_cast<std::size_t>(std::floor(cfg.drop_rate * static_cast<double>(n)));
      std::mt19937_64 rng(mix_seed(cfg.seed, kDropStream));
      std::uniform_int_distribution<std::size_t> beam_pick(0, beams.size() - 1);
      std::size_t dropped = 0;
      std::size_t attempts = 0;
      const std::size_t max_attempts = 16 * (n / cfg.beam_burst_span + 1) + 64;
      while (dropped < target && attempts++ < max_attempts) {
        const auto& row = beams[beam_pick(rng)];
        if (row.empty()) continue;
        std::uniform_int_distribution<std::size_t> start_pick(0, row.size() - 1);
        const std::size_t start = start_pick(rng);
        for (int s = 0; s < cfg.beam_burst_span; ++s) {
          const std::size_t idx = row[(start + s) % row.size()];
          if (keep[idx]) {
            keep[idx] = 0;
            ++dropped;
          }
        }
      }
      break;
    }
    case DropPolicy::kNone:
      break;
  }
  return take_subset(cloud, keep);
}

PointCloud corrupt(const PointCloud& cloud, const CorruptConfig& cfg,
                   const std::vector<double>* guidance) {
  return drop(jitter(cloud, cfg), cfg, guidance);
}

}  // namespace bb
