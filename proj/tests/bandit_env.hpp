#pragma once

#include <cmath>
#include <random>

#include "learned_joins/optimizer.hpp"

namespace ljoin::check {

/// Synthetic latency environments for the bandit. Contexts are random query
/// shapes; the environment decides the latency of every arm.
struct ContextDraw {
  QueryMeta meta;
  double log2_r = 0.0;
};

inline ContextDraw draw_context(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> size(10.0, 20.0);
  std::uniform_int_distribution<int> dist(0, 2);
  ContextDraw c;
  c.log2_r = size(rng);
  c.meta.r_size = static_cast<std::uint64_t>(std::llround(std::exp2(c.log2_r)));
  c.meta.s_size = std::uint64_t{1} << 16;
  c.meta.distribution = static_cast<DistributionTag>(dist(rng));
  return c;
}

/// `best` always runs at 1 s, every other arm at `others` s (>= 2).
inline double dominant_latency(Algorithm arm, Algorithm best, double others) {
  return arm == best ? 1.0 : others;
}

/// A wins below log2|R| = 15, B at or above; the loser of the two takes 2.5 s
/// and every remaining arm 3 s.
inline double split_latency(Algorithm arm, double log2_r, Algorithm a, Algorithm b) {
  const Algorithm winner = log2_r < 15.0 ? a : b;
  const Algorithm loser = log2_r < 15.0 ? b : a;
  if (arm == winner) return 1.0;
  if (arm == loser) return 2.5;
  return 3.0;
}

/// Fraction of rounds [from, to) in which the dominant arm was chosen.
inline double dominant_arm_rate(Algorithm best, std::size_t rounds, std::size_t from, std::uint64_t seed) {
  BanditState state = make_bandit();
  std::mt19937_64 rng(seed);
  std::size_t hits = 0;
  for (std::size_t t = 0; t < rounds; ++t) {
    const ContextDraw c = draw_context(rng);
    const FeatureVector x = featurize(c.meta);
    const Algorithm arm = select_arm(state, x, mix64(seed, t));
    if (t >= from && arm == best) ++hits;
    record_outcome(state, x, arm, dominant_latency(arm, best, 2.0));
  }
  return static_cast<double>(hits) / static_cast<double>(rounds - from);
}

struct SplitAccuracy {
  double small = 0.0;  // log2|R| < 15 picks A
  double large = 0.0;  // log2|R| >= 15 picks B
};

/// Trains for `rounds` rounds, then scores fresh contexts without updating.
inline SplitAccuracy split_accuracy(Algorithm a, Algorithm b, std::size_t rounds, std::uint64_t seed) {
  BanditState state = make_bandit();
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < rounds; ++t) {
    const ContextDraw c = draw_context(rng);
    const FeatureVector x = featurize(c.meta);
    const Algorithm arm = select_arm(state, x, mix64(seed, t));
    record_outcome(state, x, arm, split_latency(arm, c.log2_r, a, b));
  }
  std::size_t small_n = 0, small_ok = 0, large_n = 0, large_ok = 0;
  for (std::size_t t = 0; t < 2000; ++t) {
    const ContextDraw c = draw_context(rng);
    const Algorithm arm = select_arm(state, featurize(c.meta), mix64(seed + 1, t));
    if (c.log2_r < 15.0) {
      ++small_n;
      small_ok += arm == a;
    } else {
      ++large_n;
      large_ok += arm == b;
    }
  }
  return {static_cast<double>(small_ok) / static_cast<double>(small_n),
          static_cast<double>(large_ok) / static_cast<double>(large_n)};
}

}  // namespace ljoin::check
