#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "learned_joins/cdf_models.hpp"
#include "learned_joins/join_result.hpp"

namespace ljoin {

/// Hash used by the non-learned hash joins: the murmur3 64-bit finalizer
/// (xor-shift 33, multiply 0xff51afd7ed558ccd, xor-shift 33, multiply
/// 0xc4ceb9fe1a85ec53, xor-shift 33).
constexpr std::uint64_t hash_key(Key k) noexcept {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

/// Bucket-chaining hash table: buckets of 4 tuples, overflow buckets chained
/// from a preallocated arena. Inserts are either single-writer (`insert_at`) or
/// latched per bucket (`insert_at_latched`), never mixed within one build.
class ChainHashIndex {
 public:
  static constexpr std::size_t kBucketSize = 4;

  ChainHashIndex() = default;
  /// table_len buckets (0 = one per expected tuple); room for expected_tuples.
  explicit ChainHashIndex(std::size_t expected_tuples, std::size_t table_len = 0,
                          bool concurrent = false);

  std::size_t table_len() const noexcept { return table_.size(); }
  std::size_t size() const noexcept { return size_; }
  std::size_t bucket_of(Key key) const noexcept { return hash_key(key) % table_.size(); }

  void insert(Key key, Payload payload) { insert_at(bucket_of(key), key, payload); }
  void insert_at(std::size_t bucket, Key key, Payload payload);
  void insert_at_latched(std::size_t bucket, Key key, Payload payload);

  template <typename Fn>
  std::size_t for_each_match(Key key, Fn&& fn) const {
    return table_.empty() ? 0 : for_each_match_at(bucket_of(key), key, fn);
  }

  template <typename Fn>
  std::size_t for_each_match_at(std::size_t bucket, Key key, Fn&& fn) const {
    std::size_t matches = 0;
    const Bucket* b = &table_[bucket];
    while (b) {
      for (std::uint32_t i = 0; i < b->count; ++i) {
        if (b->keys[i] == key) {
          fn(b->payloads[i]);
          ++matches;
        }
      }
      b = b->next == kNone ? nullptr : &overflow_[b->next];
    }
    return matches;
  }

 private:
  static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

  struct Bucket {
    std::uint32_t count = 0;
    std::uint32_t next = kNone;
    Key keys[kBucketSize];
    Payload payloads[kBucketSize];
  };

  void place(Bucket& head, Key key, Payload payload);

  std::vector<Bucket> table_;
  std::vector<Bucket> overflow_;
  std::size_t overflow_used_ = 0;
  std::size_t size_ = 0;
  std::unique_ptr<std::atomic_flag[]> latches_;
};

ChainHashIndex build_chain_hash(const Relation& relation);

/// R sorted by key plus an RMI over the sorted keys.
struct RmiIndex {
  Relation sorted;
  CdfModel model;
};

RmiIndex build_rmi_index(const Relation& relation, std::size_t fanout = 0);

/// Predict, then lower-bound binary search inside [lo, hi]; one search step
/// per probed key.
JoinOutput rmi_inlj(const RmiIndex& index, const Relation& probe, std::size_t workers,
                    bool materialize = true);

JoinOutput hash_inlj(const ChainHashIndex& index, const Relation& probe, std::size_t workers,
                     bool materialize = true);

/// Non-partitioned hash join: one shared latched table built by all workers,
/// barrier, then probe. Build + probe time is reported as join.
JoinOutput npj_join(const Relation& r, const Relation& s, std::size_t workers,
                    bool materialize = true);

struct RadixPartitioned {
  Relation data;
  std::vector<std::size_t> offsets;  // 2^(passes * bits_per_pass) + 1
  std::size_t total_bits = 0;
};

/// Partitions on the low passes*bits_per_pass key bits, one b-bit digit per
/// pass, lowest digit first. Final partition f = sum d_i << (b * (passes-1-i))
/// for digits d_0 (lowest) .. d_{passes-1}; both join sides share the layout.
/// Requires passes in {1, 2, 3}, bits_per_pass >= 1 and at most 20 bits in total.
RadixPartitioned radix_partition(const Relation& relation, std::size_t passes,
                                 std::size_t bits_per_pass, std::size_t workers);

/// Bits per pass targeting ~1024 build tuples per final partition.
std::size_t default_radix_bits(std::size_t n, std::size_t passes) noexcept;

JoinOutput radix_join(const Relation& r, const Relation& s, std::size_t passes,
                      std::size_t bits_per_pass, std::size_t workers, bool materialize = true);

/// Sort-merge join: per-worker std::sort, pairwise in-place merges (Mrge),
/// then a range-split parallel merge-join.
JoinOutput smj_join(const Relation& r, const Relation& s, std::size_t workers,
                    bool materialize = true);

/// RadixSpline trained on a stratified sample of the keys.
SplineModel train_sampled_spline(std::span<const Key> keys, double sample_rate, std::uint64_t seed,
                                 std::size_t max_error, std::size_t radix_bits);

/// npj with hash = partition_index(spline on a sample of R, key, |R|).
/// Meant for rates up to 0.1; rate 1 is accepted and reduces to the full-data
/// spline hash.
JoinOutput sampled_hash_join(const Relation& r, const Relation& s, double sample_rate,
                             std::size_t workers, std::uint64_t seed, bool materialize = true,
                             std::size_t max_error = 32, std::size_t radix_bits = 18);

/// Exhaustive double loop. Throws Error(oracle_too_large) if |R|*|S| > 1e10.
JoinResult nlj_oracle(const Relation& r, const Relation& s);

inline constexpr double kOracleMaxPairs = 1e10;

}  // namespace ljoin
