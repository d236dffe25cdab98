#include "learned_joins/baselines.hpp"

#include <algorithm>
#include <bit>
#include <thread>

#include "learned_joins/data.hpp"
#include "learned_joins/parallel.hpp"

namespace ljoin {

namespace {

constexpr std::size_t kProbeBlock = 512;
constexpr std::size_t kMaxRadixBits = 20;

}  // namespace

ChainHashIndex::ChainHashIndex(std::size_t expected_tuples, std::size_t table_len, bool concurrent)
    : table_(table_len == 0 ? std::max<std::size_t>(expected_tuples, 1) : table_len),
      // A chain of c tuples needs at most c/4 overflow buckets.
      overflow_(expected_tuples / kBucketSize + 1) {
  if (concurrent) latches_ = std::make_unique<std::atomic_flag[]>(table_.size());
}

void ChainHashIndex::place(Bucket& head, Key key, Payload payload) {
  if (head.count < kBucketSize) {
    head.keys[head.count] = key;
    head.payloads[head.count] = payload;
    ++head.count;
    return;
  }
  // New overflow buckets go right after the head, so the head's successor is
  // the only one that can have room.
  Bucket* next = head.next == kNone ? nullptr : &overflow_[head.next];
  if (next == nullptr || next->count == kBucketSize) {
    const std::size_t idx = std::atomic_ref(overflow_used_).fetch_add(1, std::memory_order_relaxed);
    if (idx >= overflow_.size()) throw Error(ErrorCode::invalid_argument, "hash table over capacity");
    Bucket& fresh = overflow_[idx];
    fresh.count = 0;
    fresh.next = head.next;
    head.next = static_cast<std::uint32_t>(idx);
    next = &fresh;
  }
  next->keys[next->count] = key;
  next->payloads[next->count] = payload;
  ++next->count;
}

void ChainHashIndex::insert_at(std::size_t bucket, Key key, Payload payload) {
  place(table_[bucket], key, payload);
  ++size_;
}

void ChainHashIndex::insert_at_latched(std::size_t bucket, Key key, Payload payload) {
  if (!latches_) {
    insert_at(bucket, key, payload);
    return;
  }
  std::atomic_flag& latch = latches_[bucket];
  while (latch.test_and_set(std::memory_order_acquire)) std::this_thread::yield();
  try {
    place(table_[bucket], key, payload);
  } catch (...) {
    latch.clear(std::memory_order_release);
    throw;
  }
  latch.clear(std::memory_order_release);
  std::atomic_ref(size_).fetch_add(1, std::memory_order_relaxed);
}

ChainHashIndex build_chain_hash(const Relation& relation) {
  ChainHashIndex index(relation.size());
  for (std::size_t i = 0; i < relation.size(); ++i) index.insert(relation.keys[i], relation.payloads[i]);
  return index;
}

RmiIndex build_rmi_index(const Relation& relation, std::size_t fanout) {
  RmiIndex index;
  std::vector<KeyPayload> tuples(relation.size());
  for (std::size_t i = 0; i < relation.size(); ++i) tuples[i] = {relation.keys[i], relation.payloads[i]};
  std::stable_sort(tuples.begin(), tuples.end(),
                   [](const KeyPayload& a, const KeyPayload& b) { return a.key < b.key; });
  index.sorted.keys.resize(tuples.size());
  index.sorted.payloads.resize(tuples.size());
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    index.sorted.keys[i] = tuples[i].key;
    index.sorted.payloads[i] = tuples[i].payload;
  }
  if (!tuples.empty())
    index.model = train_rmi(index.sorted.keys, fanout == 0 ? default_rmi_fanout(tuples.size()) : fanout);
  return index;
}

JoinOutput rmi_inlj(const RmiIndex& index, const Relation& probe, std::size_t workers,
                    bool materialize) {
  workers = std::max<std::size_t>(workers, 1);
  std::vector<ResultCollector> sinks(workers, ResultCollector(materialize));
  std::vector<LookupStats> stats(workers);
  std::vector<double> pred_time(workers, 0.0);
  std::vector<double> srch_time(workers, 0.0);
  const std::vector<Key>& keys = index.sorted.keys;

  parallel_for(workers, [&](std::size_t w) {
    if (keys.empty()) return;
    const ChunkRange chunk = chunk_range(probe.size(), workers, w);
    std::vector<PosPrediction> predicted(kProbeBlock);
    for (std::size_t b = chunk.begin; b < chunk.end; b += kProbeBlock) {
      const std::size_t e = std::min(chunk.end, b + kProbeBlock);
      Stopwatch sw;
      for (std::size_t i = b; i < e; ++i) predicted[i - b] = index.model.predict(probe.keys[i]);
      stats[w].predictions += e - b;
      pred_time[w] += sw.lap();
      for (std::size_t i = b; i < e; ++i) {
        const Key key = probe.keys[i];
        std::size_t lo = predicted[i - b].lo;
        std::size_t hi = predicted[i - b].hi + 1;
        while (lo < hi) {
          const std::size_t mid = lo + (hi - lo) / 2;
          ++stats[w].search_steps;
          if (keys[mid] < key)
            lo = mid + 1;
          else
            hi = mid;
        }
        for (std::size_t pos = lo; pos < keys.size() && keys[pos] == key; ++pos)
          sinks[w].emit(index.sorted.payloads[pos], probe.payloads[i]);
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

namespace {

template <typename Table>
JoinResult probe_table(const Table& table, const Relation& probe, std::size_t workers, bool materialize,
                       auto&& bucket_of) {
  std::vector<ResultCollector> sinks(workers, ResultCollector(materialize));
  parallel_for(workers, [&](std::size_t w) {
    const ChunkRange chunk = chunk_range(probe.size(), workers, w);
    for (std::size_t i = chunk.begin; i < chunk.end; ++i) {
      const Payload s_payload = probe.payloads[i];
      table.for_each_match_at(bucket_of(probe.keys[i]), probe.keys[i],
                              [&](Payload r) { sinks[w].emit(r, s_payload); });
    }
  });
  return merge_results(sinks, materialize);
}

}  // namespace

JoinOutput hash_inlj(const ChainHashIndex& index, const Relation& probe, std::size_t workers,
                     bool materialize) {
  workers = std::max<std::size_t>(workers, 1);
  JoinOutput out;
  Stopwatch sw;
  if (index.table_len() == 0) {
    out.result.materialized = materialize;
    return out;
  }
  out.result = probe_table(index, probe, workers, materialize,
                           [&](Key k) { return index.bucket_of(k); });
  out.breakdown.join = sw.seconds();
  return out;
}

JoinOutput npj_join(const Relation& r, const Relation& s, std::size_t workers, bool materialize) {
  workers = std::max<std::size_t>(workers, 1);
  Stopwatch sw;
  ChainHashIndex table(r.size(), 0, true);
  parallel_for(workers, [&](std::size_t w) {
    const ChunkRange chunk = chunk_range(r.size(), workers, w);
    for (std::size_t i = chunk.begin; i < chunk.end; ++i)
      table.insert_at_latched(table.bucket_of(r.keys[i]), r.keys[i], r.payloads[i]);
  });
  JoinOutput out;
  out.result = probe_table(table, s, workers, materialize, [&](Key k) { return table.bucket_of(k); });
  out.breakdown.join = sw.seconds();
  return out;
}

std::size_t default_radix_bits(std::size_t n, std::size_t passes) noexcept {
  passes = std::clamp<std::size_t>(passes, 1, 3);
  const std::size_t total = std::clamp<std::size_t>(std::bit_width(n / 1024), 1, kMaxRadixBits);
  return std::min((total + passes - 1) / passes, kMaxRadixBits / passes);
}

RadixPartitioned radix_partition(const Relation& relation, std::size_t passes,
                                 std::size_t bits_per_pass, std::size_t workers) {
  if (passes < 1 || passes > 3) throw Error(ErrorCode::invalid_argument, "passes must be 1, 2 or 3");
  if (bits_per_pass < 1 || passes * bits_per_pass > kMaxRadixBits)
    throw Error(ErrorCode::invalid_argument, "radix bits out of range");
  workers = std::max<std::size_t>(workers, 1);
  const std::size_t n = relation.size();
  const std::size_t fan = std::size_t{1} << bits_per_pass;
  const Key mask = fan - 1;

  RadixPartitioned out;
  out.total_bits = passes * bits_per_pass;
  Relation src = relation;
  Relation dst;
  dst.keys.resize(n);
  dst.payloads.resize(n);

  // Pass 0 over the whole relation: local histograms, prefix sums, scatter.
  {
    std::vector<std::size_t> hist(workers * fan, 0);
    parallel_for(workers, [&](std::size_t w) {
      const ChunkRange chunk = chunk_range(n, workers, w);
      for (std::size_t i = chunk.begin; i < chunk.end; ++i) ++hist[w * fan + (src.keys[i] & mask)];
    });
    std::vector<std::size_t> cursor(workers * fan);
    std::size_t at = 0;
    out.offsets.assign(fan + 1, 0);
    for (std::size_t d = 0; d < fan; ++d) {
      out.offsets[d] = at;
      for (std::size_t w = 0; w < workers; ++w) {
        cursor[w * fan + d] = at;
        at += hist[w * fan + d];
      }
    }
    out.offsets[fan] = n;
    parallel_for(workers, [&](std::size_t w) {
      const ChunkRange chunk = chunk_range(n, workers, w);
      std::size_t* cur = &cursor[w * fan];
      for (std::size_t i = chunk.begin; i < chunk.end; ++i) {
        const std::size_t pos = cur[src.keys[i] & mask]++;
        dst.keys[pos] = src.keys[i];
        dst.payloads[pos] = src.payloads[i];
      }
    });
    std::swap(src, dst);
  }

  // Later passes split each existing partition independently on the next digit.
  for (std::size_t pass = 1; pass < passes; ++pass) {
    const std::size_t shift = pass * bits_per_pass;
    const std::size_t groups = out.offsets.size() - 1;
    std::vector<std::size_t> next(groups * fan + 1, 0);
    next[groups * fan] = n;
    parallel_for(workers, [&](std::size_t w) {
      const ChunkRange mine = chunk_range(groups, workers, w);
      std::vector<std::size_t> cur(fan);
      for (std::size_t g = mine.begin; g < mine.end; ++g) {
        const std::size_t begin = out.offsets[g];
        const std::size_t end = out.offsets[g + 1];
        std::fill(cur.begin(), cur.end(), 0);
        for (std::size_t i = begin; i < end; ++i) ++cur[(src.keys[i] >> shift) & mask];
        std::size_t at = begin;
        for (std::size_t d = 0; d < fan; ++d) {
          next[g * fan + d] = at;
          const std::size_t c = cur[d];
          cur[d] = at;
          at += c;
        }
        for (std::size_t i = begin; i < end; ++i) {
          const std::size_t pos = cur[(src.keys[i] >> shift) & mask]++;
          dst.keys[pos] = src.keys[i];
          dst.payloads[pos] = src.payloads[i];
        }
      }
    });
    out.offsets = std::move(next);
    std::swap(src, dst);
  }
  out.data = std::move(src);
  return out;
}

JoinOutput radix_join(const Relation& r, const Relation& s, std::size_t passes,
                      std::size_t bits_per_pass, std::size_t workers, bool materialize) {
  workers = std::max<std::size_t>(workers, 1);
  if (bits_per_pass == 0) bits_per_pass = default_radix_bits(r.size(), passes);
  Stopwatch sw;
  const RadixPartitioned pr = radix_partition(r, passes, bits_per_pass, workers);
  const RadixPartitioned ps = radix_partition(s, passes, bits_per_pass, workers);
  JoinOutput out;
  out.breakdown.part = sw.lap();

  const std::size_t parts = pr.offsets.size() - 1;
  const std::size_t shift = pr.total_bits;
  std::vector<ResultCollector> sinks(workers, ResultCollector(materialize));
  parallel_for(workers, [&](std::size_t w) {
    const ChunkRange mine = chunk_range(parts, workers, w);
    std::vector<std::uint32_t> head;
    std::vector<std::uint32_t> next;
    for (std::size_t f = mine.begin; f < mine.end; ++f) {
      const std::size_t rb = pr.offsets[f];
      const std::size_t m = pr.offsets[f + 1] - rb;
      const std::size_t sb = ps.offsets[f];
      const std::size_t sm = ps.offsets[f + 1] - sb;
      if (m == 0 || sm == 0) continue;
      // Bucket chaining on the bits above the partition digits; entries are
      // 1-based so 0 ends a chain.
      const std::size_t buckets = std::bit_ceil(m);
      const Key bmask = buckets - 1;
      head.assign(buckets, 0);
      next.assign(m + 1, 0);
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t h = (pr.data.keys[rb + i] >> shift) & bmask;
        next[i + 1] = head[h];
        head[h] = static_cast<std::uint32_t>(i + 1);
      }
      for (std::size_t j = 0; j < sm; ++j) {
        const Key key = ps.data.keys[sb + j];
        for (std::uint32_t e = head[(key >> shift) & bmask]; e != 0; e = next[e]) {
          if (pr.data.keys[rb + e - 1] == key) sinks[w].emit(pr.data.payloads[rb + e - 1], ps.data.payloads[sb + j]);
        }
      }
    }
  });
  out.result = merge_results(sinks, materialize);
  out.breakdown.join = sw.lap();
  return out;
}

namespace {

bool tuple_less(const KeyPayload& a, const KeyPayload& b) noexcept {
  return a.key < b.key || (a.key == b.key && a.payload < b.payload);
}

std::vector<KeyPayload> to_tuples(const Relation& rel) {
  std::vector<KeyPayload> t(rel.size());
  for (std::size_t i = 0; i < rel.size(); ++i) t[i] = {rel.keys[i], rel.payloads[i]};
  return t;
}

/// Sorts W chunks in parallel, then merges neighbours pairwise in log W rounds.
void sort_chunks_and_merge(std::vector<KeyPayload>& t, std::size_t workers, double& sort_s,
                           double& mrge_s) {
  Stopwatch sw;
  const std::size_t n = t.size();
  parallel_for(workers, [&](std::size_t w) {
    const ChunkRange c = chunk_range(n, workers, w);
    std::sort(t.begin() + static_cast<std::ptrdiff_t>(c.begin), t.begin() + static_cast<std::ptrdiff_t>(c.end),
              tuple_less);
  });
  sort_s += sw.lap();
  for (std::size_t width = 1; width < workers; width *= 2) {
    const std::size_t pairs = (workers + 2 * width - 1) / (2 * width);
    parallel_for(std::min(pairs, workers), [&](std::size_t q) {
      for (std::size_t pair = q; pair < pairs; pair += std::min(pairs, workers)) {
        const std::size_t a = pair * 2 * width;
        const std::size_t mid = std::min(a + width, workers);
        const std::size_t b = std::min(a + 2 * width, workers);
        if (mid >= b) continue;
        const auto first = t.begin() + static_cast<std::ptrdiff_t>(chunk_range(n, workers, a).begin);
        const auto middle = t.begin() + static_cast<std::ptrdiff_t>(chunk_range(n, workers, mid).begin);
        const auto last = t.begin() + static_cast<std::ptrdiff_t>(chunk_range(n, workers, b - 1).end);
        std::inplace_merge(first, middle, last, tuple_less);
      }
    });
  }
  mrge_s += sw.lap();
}

}  // namespace

JoinOutput smj_join(const Relation& r, const Relation& s, std::size_t workers, bool materialize) {
  workers = std::max<std::size_t>(workers, 1);
  JoinOutput out;
  std::vector<KeyPayload> rt = to_tuples(r);
  std::vector<KeyPayload> st = to_tuples(s);
  sort_chunks_and_merge(rt, workers, out.breakdown.sort, out.breakdown.mrge);
  sort_chunks_and_merge(st, workers, out.breakdown.sort, out.breakdown.mrge);

  Stopwatch sw;
  // Split S into worker ranges, moving each cut to the start of a key run so
  // no run of equal keys is shared by two workers.
  std::vector<std::size_t> cuts(workers + 1, st.size());
  cuts[0] = 0;
  for (std::size_t w = 1; w < workers; ++w) {
    std::size_t c = std::max(chunk_range(st.size(), workers, w).begin, cuts[w - 1]);
    while (c > 0 && c < st.size() && st[c].key == st[c - 1].key) ++c;
    cuts[w] = c;
  }
  std::vector<ResultCollector> sinks(workers, ResultCollector(materialize));
  parallel_for(workers, [&](std::size_t w) {
    std::size_t i = cuts[w];
    const std::size_t i_end = cuts[w + 1];
    if (i >= i_end) return;
    auto key_less = [](const KeyPayload& a, Key k) { return a.key < k; };
    std::size_t j = static_cast<std::size_t>(
        std::lower_bound(rt.begin(), rt.end(), st[i].key, key_less) - rt.begin());
    while (i < i_end && j < rt.size()) {
      if (st[i].key < rt[j].key) {
        ++i;
      } else if (rt[j].key < st[i].key) {
        ++j;
      } else {
        const Key k = st[i].key;
        std::size_t i2 = i;
        while (i2 < i_end && st[i2].key == k) ++i2;
        std::size_t j2 = j;
        while (j2 < rt.size() && rt[j2].key == k) ++j2;
        for (std::size_t a = i; a < i2; ++a)
          for (std::size_t b = j; b < j2; ++b) sinks[w].emit(rt[b].payload, st[a].payload);
        i = i2;
        j = j2;
      }
    }
  });
  out.result = merge_results(sinks, materialize);
  out.breakdown.join = sw.seconds();
  return out;
}

SplineModel train_sampled_spline(std::span<const Key> keys, double sample_rate, std::uint64_t seed,
                                 std::size_t max_error, std::size_t radix_bits) {
  if (keys.empty()) throw Error(ErrorCode::empty_input, "cannot sample an empty key set");
  KeyVector sample;
  for (std::size_t pos : stratified_sample_positions(keys.size(), sample_rate, seed))
    sample.push_back(keys[pos]);
  if (sample.empty()) {
    const auto [lo, hi] = std::minmax_element(keys.begin(), keys.end());
    sample = {*lo, *hi};
  }
  std::sort(sample.begin(), sample.end());
  return train_radix_spline(sample, max_error, radix_bits);
}

JoinOutput sampled_hash_join(const Relation& r, const Relation& s, double sample_rate,
                             std::size_t workers, std::uint64_t seed, bool materialize,
                             std::size_t max_error, std::size_t radix_bits) {
  if (!(sample_rate > 0.0 && sample_rate <= 1.0))
    throw Error(ErrorCode::invalid_argument, "sample_rate must be in (0, 1]");
  workers = std::max<std::size_t>(workers, 1);
  JoinOutput out;
  out.result.materialized = materialize;
  if (r.empty()) return out;

  Stopwatch sw;
  const SplineModel spline = train_sampled_spline(r.keys, sample_rate, seed, max_error, radix_bits);
  out.breakdown.smpl = sw.lap();

  ChainHashIndex table(r.size(), r.size(), true);
  const std::size_t len = table.table_len();
  auto bucket_of = [&](Key k) { return partition_index(spline, k, len); };
  parallel_for(workers, [&](std::size_t w) {
    const ChunkRange chunk = chunk_range(r.size(), workers, w);
    for (std::size_t i = chunk.begin; i < chunk.end; ++i)
      table.insert_at_latched(bucket_of(r.keys[i]), r.keys[i], r.payloads[i]);
  });
  out.result = probe_table(table, s, workers, materialize, bucket_of);
  out.breakdown.join = sw.lap();
  return out;
}

JoinResult nlj_oracle(const Relation& r, const Relation& s) {
  if (static_cast<double>(r.size()) * static_cast<double>(s.size()) > kOracleMaxPairs)
    throw Error(ErrorCode::oracle_too_large, "nested-loop oracle limited to |R|*|S| <= 1e10");
  ResultCollector sink(true);
  constexpr std::size_t kBlock = 1024;
  const Key* sk = s.keys.data();
  for (std::size_t sb = 0; sb < s.size(); sb += kBlock) {
    const std::size_t se = std::min(s.size(), sb + kBlock);
    for (std::size_t i = 0; i < r.size(); ++i) {
      const Key k = r.keys[i];
      // Branch-free count first so the common no-match case vectorizes.
      std::size_t hits = 0;
      for (std::size_t j = sb; j < se; ++j) hits += sk[j] == k;
      if (hits == 0) continue;
      for (std::size_t j = sb; j < se; ++j)
        if (sk[j] == k) sink.emit(r.payloads[i], s.payloads[j]);
    }
  }
  ResultCollector parts[] = {std::move(sink)};
  return merge_results(parts, true);
}

}  // namespace ljoin
