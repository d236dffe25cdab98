#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "learned_joins/cdf_models.hpp"
#include "learned_joins/join_result.hpp"

namespace ljoin {

struct LsjConfig {
  std::size_t workers = 1;
  double sample_rate = 0.01;
  std::size_t fanout = 10000;  // p, global bucket count of the sort phase
  bool swwc = true;
  std::size_t swwc_buf_len = 64;  // tuples staged per target before a flush
  double overalloc = 0.02;
  std::size_t model_fanout = 0;  // RMI leaves for the sample model; 0 = ~100 samples per leaf
  std::uint64_t seed = 42;
  bool materialize = true;

  /// Throws Error(invalid_argument) unless W >= 1, 0 < sample_rate <= 1,
  /// p >= W, swwc_buf_len >= 1 and overalloc >= 0.
  void validate() const;
};

/// Output of range_partition: W contiguous runs in `data`, run w spanning
/// [range_offsets[w], range_offsets[w+1]). A key goes to run
/// partition_index(model, key, p) * W / p, i.e. the model scaled to W with
/// whole sort buckets per run.
struct PartitionedRelation {
  std::size_t workers = 0;
  Relation data;
  std::vector<std::size_t> range_offsets;  // W + 1
  std::vector<std::size_t> histogram;      // [src * W + dst] tuple counts
  std::vector<std::size_t> prefix_sums;    // [src * W + dst] write offset inside run dst
  std::size_t target_capacity = 0;         // per-run array size, (1 + overalloc) * n / W
  std::size_t overflow_tuples = 0;         // tuples that spilled past target_capacity

  std::size_t range_size(std::size_t w) const noexcept { return range_offsets[w + 1] - range_offsets[w]; }
};

/// A relation after the sort phase: globally sorted, with the bucket layout
/// needed by chunked_join. Bucket b spans [bucket_offsets[b], bucket_offsets[b+1]).
struct SortedRelation {
  Relation data;
  std::vector<std::size_t> range_offsets;
  std::vector<std::size_t> bucket_offsets;  // buckets + 1
  std::size_t buckets = 0;
  std::uint64_t model_fingerprint = 0;
  SortStats stats;
};

/// RMI over a stratified sample of round(sample_rate * n) keys, W-independent.
/// With zero samples the model is fit on {min, max}. Throws Error(empty_input).
CdfModel sample_train(const Relation& relation, double sample_rate, std::size_t workers,
                      std::uint64_t seed, std::size_t model_fanout = 0);

/// Local histograms, prefix sums, then sequential writes into the target runs,
/// optionally staged through per-target SWWC buffers. Output does not depend
/// on swwc or overalloc.
PartitionedRelation range_partition(const Relation& relation, const CdfModel& model,
                                    const LsjConfig& config);

/// Sorts one run in place: bucketize by partition_index(model, key, p), pad each
/// bucket to a power of two with kSentinelKey, bitonic-sort it, strip padding.
/// Ties are ordered by payload. If bucket_counts is nonempty (size p) the
/// per-bucket tuple counts are added to it.
SortStats cdf_bitonic_sort(std::span<Key> keys, std::span<Payload> payloads, const CdfModel& model,
                           std::size_t p, std::span<std::size_t> bucket_counts = {});

/// Plain bitonic network over a power-of-two sized array, ordered by
/// (key, payload). Adds one to comparator_count per compare-exchange.
void bitonic_network(std::span<KeyPayload> items, SortStats& stats);

/// Sorts every run of `part` in parallel and records the global bucket layout.
SortedRelation sort_phase(PartitionedRelation part, const CdfModel& model, std::size_t p);

/// Merge-joins each S bucket (cut at worker boundaries) against the R buckets
/// [f_R, l_R] given by model_R scaled to p_R. Throws Error(model_mismatch) if
/// model_R / p_R are not the ones R was bucketized with.
JoinResult chunked_join(const SortedRelation& r, const SortedRelation& s, const CdfModel& model_r,
                        std::size_t p_r, std::size_t workers, bool materialize = true);

/// Sample, partition, sort and chunked join. breakdown.mrge stays 0.
JoinOutput lsj_join(const Relation& r, const Relation& s, const LsjConfig& config);

struct LsjCostParams {
  double n_r = 0, n_s = 0;  // tuple counts
  double s_r = 0, s_s = 0;  // sample counts
  double p_r = 1, p_s = 1;  // final partition counts
  double o_r = 0, o_s = 0;  // max overlapping workers
  double workers = 1;

  void validate() const;
};

struct LsjCostTerms {
  double sampling = 0;
  double partitioning = 0;
  double sorting = 0;
  double joining = 0;

  double total() const noexcept { return sampling + partitioning + sorting + joining; }
};

/// Per-worker cost, log base 2 with log(x <= 1) = 0:
///   sampling     (S_R + S_S)/W + S_R lg S_R + S_S lg S_S
///   partitioning (N_R + N_S)/W
///   sorting      (N_R/W) lg^2(N_R/P_R) + (N_S/W) lg^2(N_S/P_S)
///   joining      (N_R/W) O_S + (N_S/W) O_R
LsjCostTerms lsj_cost_terms(const LsjCostParams& params);
double estimate_lsj_cost(const LsjCostParams& params);

}  // namespace ljoin
