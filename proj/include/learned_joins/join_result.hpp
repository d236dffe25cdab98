#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "learned_joins/types.hpp"

namespace ljoin {

struct JoinPair {
  Payload r;
  Payload s;

  friend auto operator<=>(const JoinPair&, const JoinPair&) = default;
};

/// Matched pairs. `checksum` is an order-independent digest of the pair
/// multiset, so unmaterialized runs stay comparable.
struct JoinResult {
  std::uint64_t count = 0;
  std::uint64_t checksum = 0;
  bool materialized = true;
  std::vector<JoinPair> pairs;

  /// Pairs sorted, for multiset comparison.
  std::vector<JoinPair> sorted_pairs() const;
};

/// Per-worker output buffer; merged after the join phase.
class ResultCollector {
 public:
  explicit ResultCollector(bool materialize = true) : materialize_(materialize) {}

  void emit(Payload r, Payload s) {
    ++count_;
    checksum_ += mix64(r, s);
    if (materialize_) pairs_.push_back({r, s});
  }

  std::uint64_t count() const noexcept { return count_; }

  friend JoinResult merge_results(std::span<ResultCollector> parts, bool materialize);

 private:
  bool materialize_;
  std::uint64_t count_ = 0;
  std::uint64_t checksum_ = 0;
  std::vector<JoinPair> pairs_;
};

JoinResult merge_results(std::span<ResultCollector> parts, bool materialize);

struct LookupStats {
  std::uint64_t search_steps = 0;
  std::uint64_t predictions = 0;
  std::uint64_t segment_switches = 0;  // consecutive resolved probes in different leaves
  std::uint64_t flushes = 0;           // request-buffer flushes

  LookupStats& operator+=(const LookupStats& o) noexcept {
    search_steps += o.search_steps;
    predictions += o.predictions;
    segment_switches += o.segment_switches;
    flushes += o.flushes;
    return *this;
  }
};

struct SortStats {
  std::uint64_t comparator_count = 0;
  std::uint64_t partitions_sorted = 0;

  SortStats& operator+=(const SortStats& o) noexcept {
    comparator_count += o.comparator_count;
    partitions_sorted += o.partitions_sorted;
    return *this;
  }
};

/// Wall-clock seconds per phase; phases an algorithm does not have stay 0.
struct PhaseBreakdown {
  double smpl = 0.0;
  double part = 0.0;
  double sort = 0.0;
  double mrge = 0.0;
  double join = 0.0;
  double pred = 0.0;
  double srch = 0.0;
  LookupStats lookup;
  SortStats sorting;
};

struct JoinOutput {
  JoinResult result;
  PhaseBreakdown breakdown;
};

}  // namespace ljoin
