#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "learned_joins/algorithms.hpp"
#include "learned_joins/data.hpp"

namespace ljoin {

inline constexpr std::uint64_t kDefaultSeed = 42;

/// LEARNED_JOINS_SEED if set and numeric, else kDefaultSeed.
std::uint64_t default_seed();

struct DatasetConfig {
  DatasetKind kind = DatasetKind::seq_h;
  std::size_t n = 10000;
  std::uint64_t seed = kDefaultSeed;
  double dup_frac = 0.0;
  bool self_join = false;  // S = R
};

struct JoinInputs {
  Relation r;
  Relation s;
};

/// R and S are independent draws of the same kind and size (seeds derived
/// from `seed`), each with dup_frac duplicates injected and distinct payloads.
JoinInputs make_inputs(const DatasetConfig& dataset);

/// Relation over explicit keys with the payload stream used for side `side`
/// ('R' or 'S') of make_inputs.
Relation make_side(KeyVector keys, std::uint64_t seed, char side);

struct BenchReport {
  Algorithm algorithm = Algorithm::lsj;
  DatasetConfig dataset;
  JoinConfig config;
  std::size_t repetition = 0;
  std::size_t r_size = 0;
  std::size_t s_size = 0;
  double runtime_s = 0.0;
  double index_build_s = 0.0;
  double throughput = 0.0;  // (|R| + |S|) / runtime_s
  std::uint64_t result_count = 0;
  std::uint64_t checksum = 0;
  PhaseBreakdown breakdown;
};

BenchReport run_report(Algorithm algo, const DatasetConfig& dataset, const JoinInputs& inputs,
                       const JoinConfig& config, std::size_t repetition = 0);

/// One JSON object, no trailing newline. Schema:
///   algorithm, dataset{kind,n,seed,dup_frac,self_join}, workers,
///   config{...every JoinConfig field}, repetition, r_size, s_size,
///   runtime_s, index_build_s, throughput, result_count, checksum,
///   breakdown{smpl,part,sort,mrge,join,pred,srch},
///   counters{search_steps,predictions,comparator_count,partitions_sorted},
///   locality{segment_switches,flushes}
/// `counters` depend only on inputs and config, not on W or timing;
/// `locality` depends on how probes are chunked over workers.
std::string report_to_json(const BenchReport& report);

/// Sweep axes; the cartesian product is run, each point `repeat` times.
struct BenchSweep {
  std::vector<Algorithm> algorithms;
  std::vector<DatasetKind> datasets;
  std::vector<std::size_t> sizes;
  std::vector<double> dup_fracs;
  std::vector<std::size_t> workers;
  std::vector<double> gap_factors;
  std::vector<std::size_t> spline_errors;
  std::vector<bool> swwc;
  std::vector<std::size_t> fanouts;
  std::uint64_t seed = kDefaultSeed;
  bool self_join = false;
  std::size_t repeat = 1;
  JoinConfig base;
};

/// Runs the sweep sequentially, calling sink once per report. Inputs are
/// generated once per (dataset, n, dup_frac).
void run_bench(const BenchSweep& sweep, const std::function<void(const BenchReport&)>& sink);

}  // namespace ljoin
