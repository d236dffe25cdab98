#include "learned_joins/algorithms.hpp"

#include <algorithm>

#include "learned_joins/baselines.hpp"
#include "learned_joins/gapped_index.hpp"
#include "learned_joins/learned_hash.hpp"
#include "learned_joins/parallel.hpp"
#include "learned_joins/request_buffers.hpp"

namespace ljoin {

namespace {

constexpr std::array<std::string_view, kAllAlgorithms.size()> kNames = {
    "buffered-grmi-inlj", "grmi-inlj", "rmi-inlj", "hash-inlj", "spline-hash-inlj",
    "lsj",                "smj",       "npj",      "radix-join", "sampled-hash-join",
};

}  // namespace

std::string_view to_string(Algorithm algo) { return kNames[static_cast<std::size_t>(algo)]; }

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i)
    if (kNames[i] == name) return kAllAlgorithms[i];
  return std::nullopt;
}

LsjConfig JoinConfig::lsj_config() const {
  LsjConfig c;
  c.workers = workers;
  c.sample_rate = sample_rate;
  c.fanout = fanout;
  c.swwc = swwc;
  c.swwc_buf_len = swwc_buf_len;
  c.overalloc = overalloc;
  c.seed = seed;
  c.materialize = materialize;
  return c;
}

JoinRun run_join(Algorithm algo, const Relation& r, const Relation& s, const JoinConfig& config) {
  const std::size_t W = std::max<std::size_t>(config.workers, 1);
  const bool mat = config.materialize;
  JoinRun run;
  Stopwatch sw;

  auto timed = [&](auto&& join) {
    run.index_build_s = sw.lap();
    run.output = join();
    run.runtime_s = sw.lap();
  };

  switch (algo) {
    case Algorithm::buffered_grmi_inlj: {
      const GappedIndex index = build_grmi(r, config.gap_factor, config.rmi_fanout);
      timed([&] { return buffered_grmi_inlj(index, s, W, config.buffer_cap, mat); });
      break;
    }
    case Algorithm::grmi_inlj: {
      const GappedIndex index = build_grmi(r, config.gap_factor, config.rmi_fanout);
      timed([&] { return grmi_inlj(index, s, W, mat); });
      break;
    }
    case Algorithm::rmi_inlj: {
      const RmiIndex index = build_rmi_index(r, config.rmi_fanout);
      timed([&] { return rmi_inlj(index, s, W, mat); });
      break;
    }
    case Algorithm::hash_inlj: {
      const ChainHashIndex index = build_chain_hash(r);
      timed([&] { return hash_inlj(index, s, W, mat); });
      break;
    }
    case Algorithm::spline_hash_inlj: {
      const SplineHashIndex index =
          build_spline_hash(r, config.spline_error, config.radix_bits, config.table_factor);
      timed([&] { return spline_hash_inlj(index, s, W, mat); });
      break;
    }
    case Algorithm::lsj:
      timed([&] { return lsj_join(r, s, config.lsj_config()); });
      break;
    case Algorithm::smj:
      timed([&] { return smj_join(r, s, W, mat); });
      break;
    case Algorithm::npj:
      timed([&] { return npj_join(r, s, W, mat); });
      break;
    case Algorithm::radix_join:
      timed([&] { return radix_join(r, s, config.radix_passes, config.radix_bits_per_pass, W, mat); });
      break;
    case Algorithm::sampled_hash_join:
      timed([&] {
        return sampled_hash_join(r, s, config.sample_rate, W, config.seed, mat, config.spline_error,
                                 config.radix_bits);
      });
      break;
  }
  return run;
}

}  // namespace ljoin
