#include "learned_joins/gapped_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "learned_joins/parallel.hpp"

namespace ljoin {

namespace {

constexpr std::size_t kProbeBlock = 512;

std::vector<KeyPayload> sorted_tuples(const Relation& relation) {
  std::vector<KeyPayload> tuples(relation.size());
  for (std::size_t i = 0; i < relation.size(); ++i)
    tuples[i] = {relation.keys[i], relation.payloads[i]};
  std::stable_sort(tuples.begin(), tuples.end(),
                   [](const KeyPayload& a, const KeyPayload& b) { return a.key < b.key; });
  return tuples;
}

}  // namespace

GappedIndex build_grmi(const Relation& relation, double gap_factor, std::size_t rmi_fanout) {
  if (!(gap_factor >= 1.0) || !std::isfinite(gap_factor))
    throw Error(ErrorCode::invalid_argument, "gap_factor must be >= 1");

  GappedIndex index;
  index.gap_factor_ = gap_factor;
  const std::size_t n = relation.size();
  index.size_ = n;
  if (n == 0) return index;

  const std::vector<KeyPayload> tuples = sorted_tuples(relation);
  KeyVector sorted(n);
  for (std::size_t i = 0; i < n; ++i) sorted[i] = tuples[i].key;
  index.rmi_ = train_rmi(sorted, rmi_fanout == 0 ? default_rmi_fanout(n) : rmi_fanout);

  const auto slots = std::max<std::size_t>(
      n, static_cast<std::size_t>(std::llround(gap_factor * static_cast<double>(n))));
  index.keys_.assign(slots, 0);
  index.payloads_.assign(slots, 0);
  index.bitmap_.assign((slots + 63) / 64, 0);

  // Model-based insert: predicted slot, pushed right past the previous entry,
  // capped so every remaining entry still has a slot.
  std::size_t next_free = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t slot = std::max(index.predicted_slot(sorted[i]), next_free);
    slot = std::min(slot, slots - (n - i));
    index.keys_[slot] = tuples[i].key;
    index.payloads_[slot] = tuples[i].payload;
    index.bitmap_[slot >> 6] |= std::uint64_t{1} << (slot & 63);
    next_free = slot + 1;
  }

  Key fill = sorted.front();
  for (std::size_t s = 0; s < slots; ++s) {
    if (index.occupied(s))
      fill = index.keys_[s];
    else
      index.keys_[s] = fill;
  }
  return index;
}

std::size_t GappedIndex::occupied_count() const noexcept {
  std::size_t total = 0;
  for (std::uint64_t w : bitmap_) total += static_cast<std::size_t>(std::popcount(w));
  return total;
}

namespace {

std::size_t rank_to_slot(double rank, std::size_t n, std::size_t slots) noexcept {
  const double s = std::round(rank * static_cast<double>(slots) / static_cast<double>(n));
  if (!(s > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(s), slots - 1);
}

}  // namespace

std::size_t GappedIndex::predicted_slot(Key key) const noexcept {
  return rank_to_slot(rmi_.rank_estimate(key), size_, keys_.size());
}

std::size_t GappedIndex::predicted_slot_in_leaf(std::size_t leaf, Key key) const noexcept {
  return rank_to_slot(rmi_.rank_estimate_in_leaf(leaf, key), size_, keys_.size());
}

std::optional<std::size_t> GappedIndex::locate(std::size_t start, Key key,
                                               LookupStats* stats) const {
  return exponential_search(keys_, start, key, stats);
}

std::optional<Payload> GappedIndex::lookup(Key key, LookupStats* stats) const {
  std::optional<Payload> found;
  if (size_ == 0) return found;
  if (stats) ++stats->predictions;
  const std::optional<std::size_t> hit = locate(predicted_slot(key), key, stats);
  if (!hit) return found;
  std::size_t slot = *hit;
  while (slot > 0 && keys_[slot - 1] == key) --slot;
  while (!occupied(slot)) ++slot;  // a run of equal keys always holds a real entry
  found = payloads_[slot];
  return found;
}

std::optional<Payload> grmi_lookup(const GappedIndex& index, Key key) { return index.lookup(key); }

std::vector<Payload> grmi_lookup_range(const GappedIndex& index, Key key) {
  std::vector<Payload> out;
  index.for_each_match(key, [&](Payload p) { out.push_back(p); });
  return out;
}

std::optional<std::size_t> exponential_search(std::span<const Key> keys, std::size_t start,
                                              Key key, LookupStats* stats) {
  const std::size_t n = keys.size();
  if (n == 0) return std::nullopt;
  start = std::min(start, n - 1);
  std::uint64_t steps = 1;
  auto done = [&](std::optional<std::size_t> r) {
    if (stats) stats->search_steps += steps;
    return r;
  };

  const Key at = keys[start];
  if (at == key) return done(start);

  // Bracket (lo, hi) with keys[lo] < key < keys[hi]; lo = -1 / hi = n are virtual.
  std::ptrdiff_t lo;
  std::ptrdiff_t hi;
  const auto s = static_cast<std::ptrdiff_t>(start);
  if (at < key) {
    lo = s;
    hi = static_cast<std::ptrdiff_t>(n);
    for (std::ptrdiff_t stride = 1; s + stride < static_cast<std::ptrdiff_t>(n); stride *= 2) {
      const std::ptrdiff_t probe = s + stride;
      ++steps;
      const Key v = keys[static_cast<std::size_t>(probe)];
      if (v == key) return done(static_cast<std::size_t>(probe));
      if (v > key) {
        hi = probe;
        break;
      }
      lo = probe;
    }
  } else {
    lo = -1;
    hi = s;
    for (std::ptrdiff_t stride = 1; s - stride >= 0; stride *= 2) {
      const std::ptrdiff_t probe = s - stride;
      ++steps;
      const Key v = keys[static_cast<std::size_t>(probe)];
      if (v == key) return done(static_cast<std::size_t>(probe));
      if (v < key) {
        lo = probe;
        break;
      }
      hi = probe;
    }
  }
  while (hi - lo > 1) {
    const std::ptrdiff_t mid = lo + (hi - lo) / 2;
    ++steps;
    const Key v = keys[static_cast<std::size_t>(mid)];
    if (v == key) return done(static_cast<std::size_t>(mid));
    if (v < key)
      lo = mid;
    else
      hi = mid;
  }
  return done(std::nullopt);
}

JoinOutput grmi_inlj(const GappedIndex& index, const Relation& probe, std::size_t workers,
                     bool materialize) {
  workers = std::max<std::size_t>(workers, 1);
  std::vector<ResultCollector> sinks(workers, ResultCollector(materialize));
  std::vector<LookupStats> stats(workers);
  std::vector<double> pred_time(workers, 0.0);
  std::vector<double> srch_time(workers, 0.0);

  parallel_for(workers, [&](std::size_t w) {
    if (index.size() == 0) return;
    const ChunkRange chunk = chunk_range(probe.size(), workers, w);
    std::vector<std::size_t> predicted(kProbeBlock);
    for (std::size_t b = chunk.begin; b < chunk.end; b += kProbeBlock) {
      const std::size_t e = std::min(chunk.end, b + kProbeBlock);
      Stopwatch sw;
      for (std::size_t i = b; i < e; ++i) predicted[i - b] = index.predicted_slot(probe.keys[i]);
      stats[w].predictions += e - b;
      pred_time[w] += sw.lap();
      for (std::size_t i = b; i < e; ++i) {
        const Payload s_payload = probe.payloads[i];
        index.for_each_match_from(
            predicted[i - b], probe.keys[i], [&](Payload r) { sinks[w].emit(r, s_payload); },
            &stats[w]);
      }
      srch_time[w] += sw.lap();
    }
  });

  JoinOutput out;
  out.result = merge_results(sinks, materialize);
  for (std::size_t w = 0; w < workers; ++w) {
    out.breakdown.lookup += stats[w];
    out.breakdown.pred = std::max(out.breakdown.pred, pred_time[w]);
    out.breakdown.srch = std::max(out.breakdown.srch, srch_time[w]);
  }
  return out;
}

}  // namespace ljoin
