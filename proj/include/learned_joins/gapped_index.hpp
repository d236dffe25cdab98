#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "learned_joins/cdf_models.hpp"
#include "learned_joins/join_result.hpp"
#include "learned_joins/types.hpp"

namespace ljoin {

/// Gapped RMI: a read-only RMI whose key/payload arrays carry deliberate gaps
/// so each entry sits at (or right next to) the slot the model predicts.
///
/// Gap slots repeat the nearest real key to their left (slots before the first
/// entry repeat the first key), so the key array is nondecreasing and every
/// comparison is well defined. The occupancy bitmap is the ground truth for
/// which slots hold real entries.
class GappedIndex {
 public:
  GappedIndex() = default;

  std::size_t size() const noexcept { return size_; }
  std::size_t slots() const noexcept { return keys_.size(); }
  double gap_factor() const noexcept { return gap_factor_; }
  const CdfModel& rmi() const noexcept { return rmi_; }

  std::span<const Key> gapped_keys() const noexcept { return keys_; }
  std::span<const Payload> gapped_payloads() const noexcept { return payloads_; }
  bool occupied(std::size_t slot) const noexcept {
    return (bitmap_[slot >> 6] >> (slot & 63)) & 1u;
  }
  std::size_t occupied_count() const noexcept;

  /// Slot the model predicts for a key: round(CDF(key) * L), clamped.
  std::size_t predicted_slot(Key key) const noexcept;
  std::size_t predicted_slot_in_leaf(std::size_t leaf, Key key) const noexcept;

  std::optional<Payload> lookup(Key key, LookupStats* stats = nullptr) const;

  /// Calls fn(payload) for every entry with this key, left to right, and
  /// returns the number of matches.
  template <typename Fn>
  std::size_t for_each_match(Key key, Fn&& fn, LookupStats* stats = nullptr) const {
    if (size_ == 0) return 0;
    if (stats) ++stats->predictions;
    return for_each_match_from(predicted_slot(key), key, fn, stats);
  }

  /// Last-mile part of a lookup, starting at an already predicted slot.
  template <typename Fn>
  std::size_t for_each_match_from(std::size_t start, Key key, Fn&& fn,
                                  LookupStats* stats = nullptr) const;

 private:
  friend GappedIndex build_grmi(const Relation&, double, std::size_t);

  std::optional<std::size_t> locate(std::size_t start, Key key, LookupStats* stats) const;

  CdfModel rmi_;
  std::vector<Key> keys_;
  std::vector<Payload> payloads_;
  std::vector<std::uint64_t> bitmap_;
  double gap_factor_ = 1.0;
  std::size_t size_ = 0;
};

/// Sorts the relation, trains the RMI (fanout 0 = default_rmi_fanout) and
/// model-based inserts every tuple into arrays of round(gap_factor * n) slots.
/// Throws Error(invalid_argument) for gap_factor < 1.
GappedIndex build_grmi(const Relation& relation, double gap_factor = 4.0,
                       std::size_t rmi_fanout = 0);

std::optional<Payload> grmi_lookup(const GappedIndex& index, Key key);
std::vector<Payload> grmi_lookup_range(const GappedIndex& index, Key key);

/// Doubling strides from `start` (1, 2, 4, ... in the direction of the key),
/// then binary search inside the bracketing window. Returns some slot whose
/// key equals `key`. Every key comparison counts as one search step.
std::optional<std::size_t> exponential_search(std::span<const Key> keys, std::size_t start,
                                              Key key, LookupStats* stats = nullptr);

/// INLJ probing the GRMI with every tuple of S; emits (R payload, S payload).
JoinOutput grmi_inlj(const GappedIndex& index, const Relation& probe, std::size_t workers,
                     bool materialize = true);

template <typename Fn>
std::size_t GappedIndex::for_each_match_from(std::size_t start, Key key, Fn&& fn,
                                             LookupStats* stats) const {
  const std::optional<std::size_t> hit = locate(start, key, stats);
  if (!hit) return 0;
  std::size_t slot = *hit;
  while (slot > 0 && keys_[slot - 1] == key) --slot;
  std::size_t matches = 0;
  for (; slot < keys_.size() && keys_[slot] == key; ++slot) {
    if (occupied(slot)) {
      fn(payloads_[slot]);
      ++matches;
    }
  }
  return matches;
}

}  // namespace ljoin
