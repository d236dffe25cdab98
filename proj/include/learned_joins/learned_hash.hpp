#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "learned_joins/cdf_models.hpp"
#include "learned_joins/join_result.hpp"

namespace ljoin {

inline constexpr std::size_t kDefaultSplineError = 32;
inline constexpr std::size_t kDefaultRadixBits = 18;

/// Hash index whose hash function is a RadixSpline trained on all build keys:
/// bucket(key) = partition_index(spline, key, table_len). Chains are stored
/// contiguously per bucket in insertion order.
class SplineHashIndex {
 public:
  SplineHashIndex() = default;

  const SplineModel& spline() const noexcept { return spline_; }
  std::size_t table_len() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t size() const noexcept { return keys_.size(); }

  std::size_t bucket_of(Key key) const noexcept { return partition_index(spline_, key, table_len()); }
  std::size_t chain_length(std::size_t bucket) const noexcept {
    return offsets_[bucket + 1] - offsets_[bucket];
  }

  template <typename Fn>
  std::size_t for_each_match(Key key, Fn&& fn) const {
    if (keys_.empty()) return 0;
    const std::size_t b = bucket_of(key);
    std::size_t matches = 0;
    for (std::size_t i = offsets_[b]; i < offsets_[b + 1]; ++i) {
      if (keys_[i] == key) {
        fn(payloads_[i]);
        ++matches;
      }
    }
    return matches;
  }

  /// Fraction of entries that share their bucket with another entry.
  double collision_fraction() const noexcept;

 private:
  friend SplineHashIndex build_spline_hash(const Relation&, std::size_t, std::size_t, double);

  SplineModel spline_;
  std::vector<std::size_t> offsets_;
  std::vector<Key> keys_;
  std::vector<Payload> payloads_;
};

/// table_len = round(table_factor * n). Throws Error(invalid_argument) for
/// table_factor < 1.
SplineHashIndex build_spline_hash(const Relation& relation,
                                  std::size_t max_error = kDefaultSplineError,
                                  std::size_t radix_bits = kDefaultRadixBits,
                                  double table_factor = 4.0);

std::vector<Payload> spline_hash_probe(const SplineHashIndex& index, Key key);

/// INLJ over the spline hash. There is no last-mile search, so the whole probe
/// time is reported as prediction.
JoinOutput spline_hash_inlj(const SplineHashIndex& index, const Relation& probe,
                            std::size_t workers, bool materialize = true);

/// Fraction of keys whose slot(key) in [0, table_len) is shared with another key.
template <typename SlotFn>
double collision_fraction(std::span<const Key> keys, std::size_t table_len, SlotFn&& slot) {
  if (keys.empty() || table_len == 0) return 0.0;
  std::vector<std::uint32_t> load(table_len, 0);
  for (Key k : keys) ++load[slot(k)];
  std::size_t shared = 0;
  for (std::uint32_t c : load)
    if (c > 1) shared += c;
  return static_cast<double>(shared) / static_cast<double>(keys.size());
}

}  // namespace ljoin
